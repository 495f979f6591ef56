#![allow(dead_code)]

use std::sync::Arc;

use mra_core::dyadic::enum_box;
use mra_core::lp::rademacher_eval;
use mra_core::{Grid, GridFunction, MultiIndex};

/// Ten bumps and steps on the interval and ten on the square.
pub fn cz_corpus() -> Vec<(String, GridFunction)> {
    let line = Grid::new(1, 6, &[2]).unwrap();
    let square = Grid::new(2, 5, &[2, 2]).unwrap();
    let mut out = Vec::new();
    for (n, grid) in [line, square].iter().enumerate() {
        for i in 0..5 {
            let c = 0.3 + 0.1 * i as f64;
            let rho = 0.08 * (n + 1) as f64 + 0.03 * i as f64;
            let h = 2.0 * (n + 1) as f64 + 1.5 * i as f64;
            out.push((format!("bump d={} #{i}", n + 1), bump(grid, c, rho, h)));
            let t = 0.15 + 0.17 * i as f64;
            out.push((format!("step d={} #{i}", n + 1), step(grid, t, h)));
        }
    }
    out
}

fn bump(grid: &Arc<Grid>, c: f64, rho: f64, h: f64) -> GridFunction {
    GridFunction::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|t| (t - c) * (t - c)).sum::<f64>() / (rho * rho);
        h * (1.0 - r2).max(0.0).powi(2)
    })
}

fn step(grid: &Arc<Grid>, t: f64, h: f64) -> GridFunction {
    GridFunction::from_fn(grid, |x| if x.iter().all(|&v| v < t + 0.1) && x[0] > t { h } else { 0.0 })
}

/// Classical Haar analysis matrix on `2^K` cell means: row `(k, ρ)` holds
/// `∫_c ψ_{k,ρ}` per cell, with `ψ_{0} = 1` and
/// `ψ_{k,ρ} = 2^{(k-1)/2}(χ_right - χ_left)` on the level-`(k-1)` cell `ρ`.
pub fn haar_matrix(level: u32) -> Vec<Vec<f64>> {
    let n = 1usize << level;
    let h = 1.0 / n as f64;
    let mut rows = vec![vec![h; n]];
    for k in 1..=level {
        let span = n >> (k - 1);
        let amp = 2f64.powf((k as f64 - 1.0) / 2.0);
        for rho in 0..1usize << (k - 1) {
            let mut row = vec![0.0; n];
            for c in 0..span {
                row[rho * span + c] = if c < span / 2 { -amp * h } else { amp * h };
            }
            rows.push(row);
        }
    }
    rows
}

/// Offset of level `k` in the rows of [`haar_matrix`].
pub fn haar_offset(k: u32) -> usize {
    if k == 0 {
        0
    } else {
        1 << (k - 1)
    }
}

/// Cell means of `f` on the finest cells, row-major.
pub fn cell_means(f: &GridFunction) -> Vec<f64> {
    let grid = f.grid();
    let dim = grid.dim();
    let side = 1usize << grid.level();
    let mut sums = vec![0.0; side.pow(dim as u32)];
    let mut idx = vec![0usize; dim];
    for (p, v) in f.values().iter().enumerate() {
        grid.unflatten(p, &mut idx);
        let c = idx.iter().enumerate().fold(0, |acc, (j, &i)| acc * side + grid.cell_of(j, i));
        sums[c] += grid.point_weight(p) * v;
    }
    let vol = (side as f64).powi(dim as i32);
    sums.iter().map(|s| s * vol).collect()
}

/// `Σ a_κ ω_κ` at the midpoint of every level-`(k+e)` cell.
pub fn enumerate_cells(a: &[f64], k: &MultiIndex) -> Vec<f64> {
    let fine = MultiIndex::new(k.as_slice().iter().map(|&x| (1u32 << (x + 1)) - 1).collect());
    let boxes = enum_box(k);
    enum_box(&fine)
        .iter()
        .map(|cell| {
            let t: Vec<f64> = (0..k.dim())
                .map(|j| (cell.get(j) as f64 + 0.5) / (1u64 << (k.get(j) + 1)) as f64)
                .collect();
            boxes
                .iter()
                .zip(a)
                .map(|(kk, c)| c * rademacher_eval(kk, &t).unwrap() as f64)
                .sum()
        })
        .collect()
}
