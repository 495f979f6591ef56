//! One-dimensional operators applied along a single axis of a grid tensor.

use rayon::prelude::*;

use crate::basis::WaveletBasis1D;
use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::quadrature::legendre_values;

/// A linear map between sample lines.
pub trait LineOperator: Sync {
    fn input_len(&self) -> usize;
    fn output_len(&self) -> usize;
    fn apply(&self, input: &[f64], output: &mut [f64]);
}

/// The identity on lines of a fixed length.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LineOperator for Identity {
    fn input_len(&self) -> usize {
        self.0
    }

    fn output_len(&self) -> usize {
        self.0
    }

    fn apply(&self, input: &[f64], output: &mut [f64]) {
        output.copy_from_slice(input);
    }
}

/// Matrix whose rows are contiguous runs of nonzeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    cols: usize,
    rows: Vec<(usize, Vec<f64>)>,
}

impl SparseRows {
    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> (usize, &[f64]) {
        (self.rows[r].0, &self.rows[r].1)
    }

    /// The transpose as an operator.
    pub fn transpose(&self) -> Transposed<'_> {
        Transposed(self)
    }
}

impl LineOperator for SparseRows {
    fn input_len(&self) -> usize {
        self.cols
    }

    fn output_len(&self) -> usize {
        self.rows.len()
    }

    fn apply(&self, input: &[f64], output: &mut [f64]) {
        for (o, (start, vals)) in output.iter_mut().zip(&self.rows) {
            *o = vals.iter().zip(&input[*start..]).map(|(a, b)| a * b).sum();
        }
    }
}

/// Borrowed transpose of a [`SparseRows`].
#[derive(Debug, Clone, Copy)]
pub struct Transposed<'a>(&'a SparseRows);

impl LineOperator for Transposed<'_> {
    fn input_len(&self) -> usize {
        self.0.rows.len()
    }

    fn output_len(&self) -> usize {
        self.0.cols
    }

    fn apply(&self, input: &[f64], output: &mut [f64]) {
        output.iter_mut().for_each(|v| *v = 0.0);
        for (c, (start, vals)) in input.iter().zip(&self.0.rows) {
            if *c != 0.0 {
                for (o, v) in output[*start..].iter_mut().zip(vals) {
                    *o += c * v;
                }
            }
        }
    }
}

/// Orthonormal functions on one axis sampled on the grid: `values` holds the
/// function values, `weighted` the values times quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBasis {
    pub values: SparseRows,
    pub weighted: SparseRows,
}

impl AxisBasis {
    fn from_values(grid: &Grid, axis: usize, rows: Vec<(usize, Vec<f64>)>) -> Self {
        let cols = grid.axis_len(axis);
        let weighted = rows
            .iter()
            .map(|(s, v)| {
                let w: Vec<f64> = v
                    .iter()
                    .enumerate()
                    .map(|(t, x)| x * grid.weight1d(axis, s + t))
                    .collect();
                (*s, w)
            })
            .collect();
        Self {
            values: SparseRows { cols, rows },
            weighted: SparseRows {
                cols,
                rows: weighted,
            },
        }
    }

    /// Legendre polynomials of degree `≤ l` on every level-`k` cell, rows ordered (cell, degree).
    pub fn level(grid: &Grid, axis: usize, k: u32, l: usize) -> Result<Self> {
        check_level(grid, k)?;
        let n = grid.nodes_per_cell(axis);
        let span = (1usize << (grid.level() - k)) * n;
        let scale = ((1u64 << k) as f64).sqrt();
        let mut vals = vec![0.0; l + 1];
        let mut rows = Vec::with_capacity((1 << k) * (l + 1));
        for cell in 0..1usize << k {
            let start = cell * span;
            let mut block = vec![vec![0.0; span]; l + 1];
            for t in 0..span {
                legendre_values(l, grid.local_coord(axis, start + t, k), &mut vals);
                for m in 0..=l {
                    block[m][t] = scale * vals[m];
                }
            }
            rows.extend(block.into_iter().map(|v| (start, v)));
        }
        Ok(Self::from_values(grid, axis, rows))
    }

    /// Detail functions of level `k`: Legendre polynomials on `(0,1)` for
    /// `k = 0`, otherwise `2^{s/2} ψ_i(2^s x - ρ)` with `s = k - 1`, rows
    /// ordered (ρ, i).
    pub fn detail(grid: &Grid, axis: usize, k: u32, wavelets: &WaveletBasis1D) -> Result<Self> {
        if k == 0 {
            return Self::level(grid, axis, 0, wavelets.degree());
        }
        check_level(grid, k)?;
        let l = wavelets.degree();
        let s = k - 1;
        let n = grid.nodes_per_cell(axis);
        let span = (1usize << (grid.level() - s)) * n;
        let half = span / 2;
        let scale = ((1u64 << s) as f64).sqrt();
        let mut rows = Vec::with_capacity((1 << s) * (l + 1));
        for rho in 0..1usize << s {
            let start = rho * span;
            for i in 0..=l {
                let v = (0..span)
                    .map(|t| {
                        let h = usize::from(t >= half);
                        scale * wavelets.eval_half(i, h, grid.local_coord(axis, start + t, k))
                    })
                    .collect();
                rows.push((start, v));
            }
        }
        Ok(Self::from_values(grid, axis, rows))
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }
}

fn check_level(grid: &Grid, k: u32) -> Result<()> {
    if k > grid.level() {
        return Err(Error::Resolution {
            requested: k,
            finest: grid.level(),
        });
    }
    Ok(())
}

/// Orthogonal projector `x ↦ Σ_r ⟨x, b_r⟩ b_r` onto the span of an [`AxisBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct AxisProjector {
    basis: AxisBasis,
}

impl AxisProjector {
    pub fn new(basis: AxisBasis) -> Self {
        Self { basis }
    }

    /// 1D level projector `E_k` along `axis`.
    pub fn level(grid: &Grid, axis: usize, k: u32, l: usize) -> Result<Self> {
        Ok(Self::new(AxisBasis::level(grid, axis, k, l)?))
    }

    /// 1D detail projector `𝓔_k` along `axis`.
    pub fn detail(grid: &Grid, axis: usize, k: u32, wavelets: &WaveletBasis1D) -> Result<Self> {
        Ok(Self::new(AxisBasis::detail(grid, axis, k, wavelets)?))
    }
}

impl LineOperator for AxisProjector {
    fn input_len(&self) -> usize {
        self.basis.values.cols()
    }

    fn output_len(&self) -> usize {
        self.basis.values.cols()
    }

    fn apply(&self, input: &[f64], output: &mut [f64]) {
        let mut c = vec![0.0; self.basis.len()];
        self.basis.weighted.apply(input, &mut c);
        self.basis.values.transpose().apply(&c, output);
    }
}

/// Applies `op` to every line of a row-major tensor along `axis`; the axis
/// length changes from `op.input_len()` to `op.output_len()`.
pub fn contract<O: LineOperator + ?Sized>(data: &[f64], shape: &[usize], axis: usize, op: &O) -> Vec<f64> {
    let n = shape[axis];
    assert_eq!(op.input_len(), n, "operator does not match axis length");
    let m = op.output_len();
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = vec![0.0; outer * m * inner];
    if outer == 0 || inner == 0 || m == 0 {
        return out;
    }
    let run = |o: &mut [f64], d: &[f64], lo: usize, hi: usize| {
        let mut line = vec![0.0; n];
        let mut res = vec![0.0; m];
        for i in lo..hi {
            for t in 0..n {
                line[t] = d[t * inner + i];
            }
            op.apply(&line, &mut res);
            for t in 0..m {
                o[t * inner + i] = res[t];
            }
        }
    };
    if outer > 1 {
        out.par_chunks_mut(m * inner)
            .zip(data.par_chunks(n * inner))
            .for_each(|(o, d)| run(o, d, 0, inner));
    } else {
        // Single slab: split the independent lines across threads instead.
        let chunk = inner.div_ceil(rayon::current_num_threads().max(1)).max(64);
        let parts: Vec<(usize, Vec<f64>)> = (0..inner)
            .step_by(chunk)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|lo| {
                let hi = (lo + chunk).min(inner);
                let mut o = vec![0.0; m * inner];
                run(&mut o, data, lo, hi);
                (lo, o)
            })
            .collect();
        for (lo, o) in parts {
            let hi = (lo + chunk).min(inner);
            for t in 0..m {
                out[t * inner + lo..t * inner + hi].copy_from_slice(&o[t * inner + lo..t * inner + hi]);
            }
        }
    }
    out
}

/// Applies a 1D operator along `axis` (0-based) for every choice of the other coordinates.
pub fn apply_axis<O: LineOperator + ?Sized>(op: &O, axis: usize, f: &GridFunction) -> Result<GridFunction> {
    let grid = f.grid();
    if axis >= grid.dim() {
        return invalid(format!("axis {axis} out of range for dimension {}", grid.dim()));
    }
    let n = grid.axis_len(axis);
    if op.input_len() != n || op.output_len() != n {
        return invalid(format!(
            "operator maps {} to {} samples, axis has {n}",
            op.input_len(),
            op.output_len()
        ));
    }
    let shape: Vec<usize> = (0..grid.dim()).map(|j| grid.axis_len(j)).collect();
    GridFunction::from_values(grid, contract(f.values(), &shape, axis, op))
}
