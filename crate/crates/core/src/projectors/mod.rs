//! Level projectors `E_κ`, detail projectors `𝓔_κ` and the multiwavelet transform.
//!
//! Two independent routes compute `𝓔_κ f`:
//! [`project_detail`] combines direct cellwise projections by
//! inclusion–exclusion, while [`Transform::detail`] expands in the
//! orthonormal multiwavelet basis using axis-wise contractions.

pub mod axis;
pub mod record;
mod transform;

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dyadic::{enum_box, DyadicCube, MultiIndex};
use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::quadrature::{legendre_values, local_project, DegreeVector, LocalPoly};

pub use axis::{apply_axis, AxisBasis, AxisProjector, Identity, LineOperator};
pub use transform::{analyze, parseval_gap, synthesize, Decomposition, DetailCoeffs, IndexSet, Transform};

/// Element of `𝒫_κ`: one [`LocalPoly`] per level-`κ` cell, cells in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    pub level: MultiIndex,
    pub degree: DegreeVector,
    pub cells: Vec<LocalPoly>,
}

impl PiecewisePoly {
    /// Cell with position `nu`.
    pub fn cell(&self, nu: &[i64]) -> &LocalPoly {
        let mut flat = 0usize;
        for (j, &p) in nu.iter().enumerate() {
            flat = (flat << self.level.get(j)) + p as usize;
        }
        &self.cells[flat]
    }

    /// Value at `x ∈ (0,1)^d`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let nu: Vec<i64> = x
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let n = 1i64 << self.level.get(j);
                ((t * n as f64).floor() as i64).clamp(0, n - 1)
            })
            .collect();
        self.cell(&nu).eval(x)
    }

    /// `Σ_ν ‖f_ν‖²_{L_2}` from the orthonormal coefficients.
    pub fn l2_norm_sq(&self) -> f64 {
        self.cells
            .iter()
            .flat_map(|c| c.coeffs.iter())
            .map(|c| c * c)
            .sum()
    }

    /// Samples on `grid`, whose finest level must be at least `κ`.
    pub fn to_grid(&self, grid: &Arc<Grid>) -> Result<GridFunction> {
        let dim = grid.dim();
        if dim != self.level.dim() {
            return invalid("grid and polynomial dimensions differ");
        }
        check_resolution(grid, &self.level)?;
        // Per-axis tables of scaled Legendre values and cell indices.
        let tables: Vec<(Vec<usize>, Vec<f64>)> = (0..dim)
            .map(|j| {
                let k = self.level.get(j);
                let l = self.degree.get(j);
                let shift = grid.level() - k;
                let scale = ((1u64 << k) as f64).sqrt();
                let mut vals = vec![0.0; l + 1];
                let mut cells = Vec::with_capacity(grid.axis_len(j));
                let mut tab = Vec::with_capacity(grid.axis_len(j) * (l + 1));
                for i in 0..grid.axis_len(j) {
                    cells.push(grid.cell_of(j, i) >> shift);
                    legendre_values(l, grid.local_coord(j, i, k), &mut vals);
                    tab.extend(vals.iter().map(|v| v * scale));
                }
                (cells, tab)
            })
            .collect();
        let values = (0..grid.len())
            .into_par_iter()
            .map(|flat| {
                let mut idx = vec![0usize; dim];
                grid.unflatten(flat, &mut idx);
                let mut cell = 0usize;
                for j in 0..dim {
                    cell = (cell << self.level.get(j)) + tables[j].0[idx[j]];
                }
                let coeffs = &self.cells[cell].coeffs;
                let mut lam = vec![0usize; dim];
                let mut sum = 0.0;
                for c in coeffs {
                    let mut b = *c;
                    for j in 0..dim {
                        b *= tables[j].1[idx[j] * (self.degree.get(j) + 1) + lam[j]];
                    }
                    sum += b;
                    for j in (0..dim).rev() {
                        lam[j] += 1;
                        if lam[j] <= self.degree.get(j) {
                            break;
                        }
                        lam[j] = 0;
                    }
                }
                sum
            })
            .collect();
        GridFunction::from_values(grid, values)
    }
}

pub(crate) fn check_resolution(grid: &Grid, kappa: &MultiIndex) -> Result<()> {
    if kappa.dim() != grid.dim() {
        return invalid(format!(
            "level {kappa} does not match grid dimension {}",
            grid.dim()
        ));
    }
    if kappa.max() > grid.level() {
        return Err(Error::Resolution {
            requested: kappa.max(),
            finest: grid.level(),
        });
    }
    Ok(())
}

/// `E_κ f`: cellwise orthogonal projection onto polynomials of degree `≤ l`.
pub fn project_level(f: &GridFunction, kappa: &MultiIndex, l: &DegreeVector) -> Result<PiecewisePoly> {
    check_resolution(f.grid(), kappa)?;
    if l.dim() != kappa.dim() {
        return invalid("degree and level dimensions differ");
    }
    let top = MultiIndex::new(
        kappa
            .as_slice()
            .iter()
            .map(|&k| (1u32 << k) - 1)
            .collect(),
    );
    let cells = enum_box(&top)
        .into_par_iter()
        .map(|nu| {
            let pos = nu.as_slice().iter().map(|&p| p as i64).collect();
            local_project(f, &DyadicCube::new(kappa.clone(), pos)?, l)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PiecewisePoly {
        level: kappa.clone(),
        degree: l.clone(),
        cells,
    })
}

/// Inclusion–exclusion evaluator of `𝓔_κ f` for one fixed `f`, caching the
/// level projections it has already computed.
#[derive(Debug)]
pub struct InclusionExclusion<'a> {
    f: &'a GridFunction,
    degree: DegreeVector,
    cache: HashMap<MultiIndex, GridFunction>,
}

impl<'a> InclusionExclusion<'a> {
    pub fn new(f: &'a GridFunction, l: &DegreeVector) -> Result<Self> {
        if l.dim() != f.grid().dim() {
            return invalid("degree and grid dimensions differ");
        }
        Ok(Self {
            f,
            degree: l.clone(),
            cache: HashMap::new(),
        })
    }

    /// `E_κ f` sampled on the grid.
    pub fn level(&mut self, kappa: &MultiIndex) -> Result<&GridFunction> {
        if !self.cache.contains_key(kappa) {
            let p = project_level(self.f, kappa, &self.degree)?;
            let g = p.to_grid(self.f.grid())?;
            self.cache.insert(kappa.clone(), g);
        }
        Ok(&self.cache[kappa])
    }

    /// `Σ_{ε ⊆ s(κ)} (-1)^{|ε|} E_{κ-ε} f`.
    pub fn detail(&mut self, kappa: &MultiIndex) -> Result<GridFunction> {
        check_resolution(self.f.grid(), kappa)?;
        let support = kappa.support();
        let mut out = GridFunction::zeros(self.f.grid());
        // Enumerate the submasks of the support.
        let mut eps = support;
        loop {
            let sign = if eps.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            let level = kappa.minus_mask(eps);
            out.axpy(sign, self.level(&level)?)?;
            if eps == 0 {
                break;
            }
            eps = (eps - 1) & support;
        }
        Ok(out)
    }
}

/// `𝓔_κ f` by inclusion–exclusion over level projections.
pub fn project_detail(f: &GridFunction, kappa: &MultiIndex, l: &DegreeVector) -> Result<GridFunction> {
    InclusionExclusion::new(f, l)?.detail(kappa)
}
