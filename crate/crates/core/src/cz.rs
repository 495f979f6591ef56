//! Maximal function, Whitney decomposition and the Calderón–Zygmund split.
//!
//! Sets live on the finest cells of the grid. The exterior `R^d ∖ (0,1)^d`
//! belongs to `F` unless stated otherwise, so the open set `W` is always a
//! union of finest cells of the unit cube. Distances between cells are exact
//! integers in units of the finest side `2^{-K}`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dyadic::{DyadicCube, MultiIndex};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// `M_f(x) = sup_r (mes B(x,r))^{-1} ∫_{B(x,r)} |f|` on grid nodes, `f` extended by zero.
///
/// The supremum runs over all node-to-node distances and the dyadic radii
/// `√d 2^{m-K}`, with ball integrals taken as quadrature sums. Only `d ≤ 2`.
pub fn maximal_function(f: &GridFunction) -> Result<GridFunction> {
    let grid = f.grid();
    let dim = grid.dim();
    if dim > 2 {
        return Err(Error::Unsupported(format!("maximal function in dimension {dim}")));
    }
    let n = grid.len();
    let mut pts = vec![0.0; n * dim];
    let mut idx = vec![0usize; dim];
    for p in 0..n {
        grid.unflatten(p, &mut idx);
        for j in 0..dim {
            pts[p * dim + j] = grid.coord(j, idx[j]);
        }
    }
    let w = grid.point_weights();
    let mass: Vec<f64> = f.values().iter().zip(w).map(|(v, w)| v.abs() * w).collect();
    let h = 1.0 / (1u64 << grid.level()) as f64;
    let dyadic: Vec<f64> = (0..=grid.level())
        .map(|m| (dim as f64).sqrt() * h * (1u64 << m) as f64)
        .collect();
    let measure = |r: f64| if dim == 1 { 2.0 * r } else { PI * r * r };
    let values = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = &pts[i * dim..(i + 1) * dim];
            let mut d: Vec<(f64, f64)> = (0..n)
                .filter(|&j| mass[j] != 0.0 || j == i)
                .map(|j| {
                    let y = &pts[j * dim..(j + 1) * dim];
                    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                    (r2.sqrt(), mass[j])
                })
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut best = 0.0f64;
            let mut acc = 0.0;
            let mut next_dyadic = 0;
            let mut t = 0;
            while t < d.len() {
                let r = d[t].0;
                // Dyadic radii strictly below r see the mass accumulated so far.
                while next_dyadic < dyadic.len() && dyadic[next_dyadic] < r {
                    best = best.max(acc / measure(dyadic[next_dyadic]));
                    next_dyadic += 1;
                }
                while t < d.len() && d[t].0 == r {
                    acc += d[t].1;
                    t += 1;
                }
                if r > 0.0 {
                    best = best.max(acc / measure(r));
                }
            }
            for &r in &dyadic[next_dyadic..] {
                best = best.max(acc / measure(r));
            }
            best
        })
        .collect();
    GridFunction::from_values(grid, values)
}

/// Membership of finest cells in the closed set `F` (cells in row-major order).
#[derive(Debug, Clone, PartialEq)]
pub struct CellSet {
    pub dim: usize,
    pub level: u32,
    /// `in_f[c]`: closed cell `c` belongs to `F`; otherwise the open cell is in `W`.
    pub in_f: Vec<bool>,
    /// Whether `R^d ∖ (0,1)^d` belongs to `F`.
    pub exterior_in_f: bool,
}

impl CellSet {
    /// All cells in `W`, exterior in `F`.
    pub fn open_unit_cube(dim: usize, level: u32) -> Self {
        Self {
            dim,
            level,
            in_f: vec![false; 1 << (level as usize * dim)],
            exterior_in_f: true,
        }
    }

    /// `F = {x : M_f(x) ≤ α}` at cell resolution: a cell is in `F` when every node satisfies it.
    pub fn from_level_set(m: &GridFunction, alpha: f64) -> Self {
        let grid = m.grid();
        let dim = grid.dim();
        let mut in_f = vec![true; 1 << (grid.level() as usize * dim)];
        let mut idx = vec![0usize; dim];
        for (p, v) in m.values().iter().enumerate() {
            if *v > alpha {
                grid.unflatten(p, &mut idx);
                in_f[cell_of_point(grid, &idx)] = false;
            }
        }
        Self {
            dim,
            level: grid.level(),
            in_f,
            exterior_in_f: true,
        }
    }

    pub fn side_cells(&self) -> usize {
        1 << self.level
    }

    pub fn cell_measure(&self) -> f64 {
        (1.0 / self.side_cells() as f64).powi(self.dim as i32)
    }

    pub fn w_cells(&self) -> usize {
        self.in_f.iter().filter(|&&b| !b).count()
    }

    /// `mes W`, exact.
    pub fn w_measure(&self) -> f64 {
        self.w_cells() as f64 * self.cell_measure()
    }

    fn coords(&self, c: usize, out: &mut [i64]) {
        let n = self.side_cells();
        let mut r = c;
        for j in (0..self.dim).rev() {
            out[j] = (r % n) as i64;
            r /= n;
        }
    }

    /// Squared distance of every cell to `F`, in units of `2^{-2K}`.
    pub fn distances_sq(&self) -> Vec<u64> {
        let n = self.side_cells() as i64;
        let dim = self.dim;
        let f_cells: Vec<Vec<i64>> = (0..self.in_f.len())
            .filter(|&c| self.in_f[c])
            .map(|c| {
                let mut v = vec![0; dim];
                self.coords(c, &mut v);
                v
            })
            .collect();
        (0..self.in_f.len())
            .into_par_iter()
            .map(|c| {
                if self.in_f[c] {
                    return 0;
                }
                let mut v = vec![0i64; dim];
                self.coords(c, &mut v);
                let mut best = u64::MAX;
                if self.exterior_in_f {
                    let e = v.iter().map(|&x| x.min(n - 1 - x)).min().unwrap_or(0) as u64;
                    best = e * e;
                }
                for g in &f_cells {
                    let d2: u64 = v
                        .iter()
                        .zip(g)
                        .map(|(a, b)| {
                            let gap = ((a - b).abs() - 1).max(0) as u64;
                            gap * gap
                        })
                        .sum();
                    best = best.min(d2);
                    if best == 0 {
                        break;
                    }
                }
                best
            })
            .collect()
    }
}

fn cell_of_point(grid: &Grid, idx: &[usize]) -> usize {
    let n = 1usize << grid.level();
    idx.iter()
        .enumerate()
        .fold(0, |acc, (j, &i)| acc * n + grid.cell_of(j, i))
}

/// Disjoint dyadic cubes covering `W` up to the finest resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitneyDecomposition {
    pub dim: usize,
    pub level: u32,
    /// Base level `k_0`; `None` when no cube passes the test at resolution `K`.
    pub k0: Option<u32>,
    /// Accepted cubes (isotropic levels), in acceptance order.
    pub cubes: Vec<DyadicCube>,
    /// `dist(Q_r, F)` for each cube.
    pub distances: Vec<f64>,
    /// `mes` of the part of `W` left uncovered.
    pub residual: f64,
    /// Cells of `W` within `√d 2^{-K}` of `F`.
    pub boundary_cells: usize,
    pub w_measure: f64,
}

impl WhitneyDecomposition {
    /// `2 · boundary_cells · 2^{-K}`.
    pub fn residual_bound(&self) -> f64 {
        2.0 * self.boundary_cells as f64 / (1u64 << self.level) as f64
    }

    /// One cube per line: `k ν_1 … ν_d`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for q in &self.cubes {
            let pos: Vec<String> = q.position.iter().map(|p| p.to_string()).collect();
            writeln!(s, "{} {}", q.level.get(0), pos.join(" ")).unwrap();
        }
        s
    }
}

/// Greedy Whitney decomposition of `W = R^d ∖ F`.
///
/// `k_0` is the least level with a cube `Q` satisfying `dist(Q,F) > √d 2^{-k}`;
/// from there each level accepts, in lexicographic order, every cube that
/// passes the same test and is not inside an accepted cube.
pub fn whitney(f_set: &CellSet) -> Result<WhitneyDecomposition> {
    let dim = f_set.dim;
    let k_fine = f_set.level;
    let w_cells = f_set.w_cells();
    let has_f = f_set.exterior_in_f || f_set.in_f.iter().any(|&b| b);
    if !has_f {
        return Err(Error::InvalidInput("F is empty, so no base level exists".into()));
    }
    if !f_set.exterior_in_f && w_cells > 0 {
        return Err(Error::InvalidInput("W must have finite measure".into()));
    }
    let mut out = WhitneyDecomposition {
        dim,
        level: k_fine,
        k0: None,
        cubes: Vec::new(),
        distances: Vec::new(),
        residual: 0.0,
        boundary_cells: 0,
        w_measure: f_set.w_measure(),
    };
    if w_cells == 0 {
        return Ok(out);
    }
    let d2 = f_set.distances_sq();
    let n = f_set.side_cells();
    let mut covered = vec![false; d2.len()];
    let h = 1.0 / n as f64;
    for k in 0..=k_fine {
        let span = 1usize << (k_fine - k);
        let per_axis = 1usize << k;
        // Threshold d·4^{K-k} on the squared distance in units of 2^{-2K}.
        let threshold = dim as u64 * (span as u64) * (span as u64);
        let total = per_axis.pow(dim as u32);
        let mut accepted_here = Vec::new();
        for c in 0..total {
            let mut pos = vec![0usize; dim];
            let mut r = c;
            for j in (0..dim).rev() {
                pos[j] = r % per_axis;
                r /= per_axis;
            }
            let first = pos.iter().fold(0, |acc, &p| acc * n + p * span);
            if covered[first] {
                continue;
            }
            let dist = cube_min(&d2, &pos, span, n, dim);
            if dist > threshold {
                accepted_here.push((pos, dist));
            }
        }
        if out.k0.is_none() {
            if accepted_here.is_empty() {
                continue;
            }
            out.k0 = Some(k);
        }
        for (pos, dist) in accepted_here {
            mark(&mut covered, &pos, span, n, dim);
            out.distances.push((dist as f64).sqrt() * h);
            out.cubes.push(DyadicCube::new(
                MultiIndex::uniform(dim, k),
                pos.iter().map(|&p| p as i64).collect(),
            )?);
        }
    }
    let uncovered = (0..d2.len()).filter(|&c| !f_set.in_f[c] && !covered[c]).count();
    out.residual = uncovered as f64 * f_set.cell_measure();
    out.boundary_cells = (0..d2.len())
        .filter(|&c| !f_set.in_f[c] && d2[c] <= dim as u64)
        .count();
    Ok(out)
}

fn for_cells(pos: &[usize], span: usize, n: usize, dim: usize, mut f: impl FnMut(usize)) {
    let count = span.pow(dim as u32);
    for t in 0..count {
        let mut r = t;
        let mut off = vec![0usize; dim];
        for j in (0..dim).rev() {
            off[j] = r % span;
            r /= span;
        }
        let c = (0..dim).fold(0, |acc, j| acc * n + pos[j] * span + off[j]);
        f(c);
    }
}

fn cube_min(d2: &[u64], pos: &[usize], span: usize, n: usize, dim: usize) -> u64 {
    let mut m = u64::MAX;
    for_cells(pos, span, n, dim, |c| m = m.min(d2[c]));
    m
}

fn mark(covered: &mut [bool], pos: &[usize], span: usize, n: usize, dim: usize) {
    for_cells(pos, span, n, dim, |c| covered[c] = true);
}

/// One bad block `h_r = (f - mean_{Q_r} f) χ_{Q_r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BadBlock {
    pub cube: DyadicCube,
    pub mean: f64,
    pub h: GridFunction,
}

/// `f = g + Σ_r h_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct CZSplit {
    pub g: GridFunction,
    pub bad: Vec<BadBlock>,
}

impl CZSplit {
    /// `g + Σ h_r` on the grid.
    pub fn recombine(&self) -> GridFunction {
        let mut out = self.g.clone();
        for b in &self.bad {
            out.axpy(1.0, &b.h).expect("same grid");
        }
        out
    }
}

/// Result of [`cz_split`].
#[derive(Debug, Clone, PartialEq)]
pub struct CzResult {
    pub f_set: CellSet,
    pub whitney: WhitneyDecomposition,
    pub split: CZSplit,
}

/// Calderón–Zygmund split of `f` at height `alpha`.
///
/// `g` equals `f` on `F` and on any sliver of `W` left uncovered at
/// resolution `K`, and the cube mean on each Whitney cube.
pub fn cz_split(f: &GridFunction, alpha: f64) -> Result<CzResult> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must be positive")));
    }
    let m = maximal_function(f)?;
    let f_set = CellSet::from_level_set(&m, alpha);
    let wd = whitney(&f_set)?;
    let grid = f.grid();
    let mut g = f.clone();
    let bad = wd
        .cubes
        .iter()
        .map(|q| {
            let pts = points_in_cube(grid, q);
            let (mut s, mut wsum) = (0.0, 0.0);
            for &p in &pts {
                let w = grid.point_weight(p);
                s += w * f.values()[p];
                wsum += w;
            }
            let mean = s / wsum;
            let mut h = GridFunction::zeros(grid);
            for &p in &pts {
                h.values_mut()[p] = f.values()[p] - mean;
            }
            BadBlock {
                cube: q.clone(),
                mean,
                h,
            }
        })
        .collect::<Vec<_>>();
    for b in &bad {
        for p in points_in_cube(grid, &b.cube) {
            g.values_mut()[p] = b.mean;
        }
    }
    Ok(CzResult {
        f_set,
        whitney: wd,
        split: CZSplit { g, bad },
    })
}

/// Flat indices of grid points inside a cube of level `≤ K`.
pub fn points_in_cube(grid: &Arc<Grid>, q: &DyadicCube) -> Vec<usize> {
    let dim = grid.dim();
    let ranges: Vec<(usize, usize)> = (0..dim)
        .map(|j| {
            let n = grid.nodes_per_cell(j);
            let span = (1usize << (grid.level() - q.level.get(j))) * n;
            (q.position[j] as usize * span, span)
        })
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        let flat: usize = (0..dim).map(|j| (ranges[j].0 + idx[j]) * grid.strides()[j]).sum();
        out.push(flat);
        if !crate::quadrature::advance(&mut idx, |j| ranges[j].1) {
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{nesting, Nesting};

    #[test]
    fn unit_interval_demo() {
        let w = whitney(&CellSet::open_unit_cube(1, 8)).unwrap();
        assert_eq!(w.k0, Some(3));
        let first: Vec<i64> = w.cubes.iter().take(4).map(|q| q.position[0]).collect();
        assert_eq!(first, vec![2, 3, 4, 5]);
        assert!(w.cubes.iter().take(4).all(|q| q.level.get(0) == 3));
        assert!(w.residual <= w.residual_bound());
        assert!(w.dump().starts_with("3 2\n3 3\n"));
    }

    #[test]
    fn whitney_invariants_d2() {
        let mut set = CellSet::open_unit_cube(2, 5);
        for c in 0..set.in_f.len() {
            let (i, j) = (c / 32, c % 32);
            if (i as i64 - 20).pow(2) + (j as i64 - 9).pow(2) < 30 {
                set.in_f[c] = true;
            }
        }
        let w = whitney(&set).unwrap();
        for (a, q) in w.cubes.iter().enumerate() {
            let diam = q.diam();
            assert!(diam < w.distances[a]);
            assert!(w.distances[a] <= 4.0 * diam + 1.0 / 32.0);
            for b in &w.cubes[a + 1..] {
                assert_eq!(nesting(q, b), Nesting::Disjoint);
            }
        }
        let covered: f64 = w.cubes.iter().map(|q| q.measure()).sum();
        assert!((covered + w.residual - w.w_measure).abs() < 1e-12);
        assert!(w.residual <= w.residual_bound());
    }

    #[test]
    fn degenerate_sets() {
        let mut all_f = CellSet::open_unit_cube(1, 4);
        all_f.in_f.iter_mut().for_each(|b| *b = true);
        let w = whitney(&all_f).unwrap();
        assert!(w.cubes.is_empty());
        assert_eq!(w.k0, None);
        let mut open = CellSet::open_unit_cube(1, 4);
        open.exterior_in_f = false;
        assert!(matches!(whitney(&open), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn maximal_function_dominates_and_decays() {
        let grid = Grid::new(1, 5, &[2]).unwrap();
        let c = GridFunction::from_fn(&grid, |_| 2.0);
        let m = maximal_function(&c).unwrap();
        assert!(m.values().iter().all(|&v| v >= 1.0 - 1e-12));
        let bump = GridFunction::from_fn(&grid, |x| if x[0] < 1.0 / 32.0 { 1.0 } else { 0.0 });
        let m = maximal_function(&bump).unwrap();
        let (x, v) = (grid.coords(0), m.values());
        let last = x.len() - 1;
        // Far from the bump, M ≈ mass / (2·dist) with mass 1/32.
        let expect = (1.0 / 32.0) / (2.0 * (x[last] - grid.coord(0, 0)));
        assert!(v[last] >= 0.9 * expect && v[last] <= 1.2 * expect, "{} {}", v[last], expect);
        let grid3 = Grid::new(3, 1, &[1, 1, 1]).unwrap();
        assert!(matches!(
            maximal_function(&GridFunction::zeros(&grid3)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn split_below_threshold_is_trivial() {
        let grid = Grid::new(1, 4, &[2]).unwrap();
        let f = GridFunction::from_fn(&grid, |x| 0.1 * x[0]);
        let r = cz_split(&f, 1.0).unwrap();
        assert!(r.split.bad.is_empty());
        assert_eq!(r.split.g, f);
    }
}
