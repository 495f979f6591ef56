use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::axis::{contract, AxisBasis, AxisProjector};
use super::{check_resolution, project_level};
use crate::basis::{wavelet_basis_1d, WaveletBasis1D};
use crate::dyadic::{cross_real, enum_box, MultiIndex};
use crate::error::{invalid, Result};
use crate::grid::{Grid, GridFunction};
use crate::quadrature::{advance, DegreeVector};

/// Which blocks a [`Decomposition`] holds.
#[derive(Debug, Clone, PartialEq)]
pub enum IndexSet {
    /// `Z_+^d(k)`.
    Box(MultiIndex),
    /// `{κ : (κ,β) ≤ r}`.
    Cross { beta: Vec<f64>, radius: u32 },
}

impl IndexSet {
    pub fn dim(&self) -> usize {
        match self {
            IndexSet::Box(k) => k.dim(),
            IndexSet::Cross { beta, .. } => beta.len(),
        }
    }

    /// Members in lexicographic order.
    pub fn indices(&self) -> Vec<MultiIndex> {
        match self {
            IndexSet::Box(k) => enum_box(k),
            IndexSet::Cross { beta, radius } => cross_real(beta, *radius as f64),
        }
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSet::Box(k) => write!(f, "box {k}"),
            IndexSet::Cross { beta, radius } => {
                let b: Vec<String> = beta.iter().map(|x| format!("{x:e}")).collect();
                write!(f, "cross ({}) {radius}", b.join(","))
            }
        }
    }
}

/// Orthonormal coefficients of `𝓔_κ f`.
///
/// Stored as a row-major tensor whose axis `j` has `positions_j · (l_j+1)`
/// entries ordered `(ρ_j, i_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailCoeffs {
    pub kappa: MultiIndex,
    pub degree: DegreeVector,
    pub coeffs: Vec<f64>,
}

impl DetailCoeffs {
    pub fn zeros(kappa: &MultiIndex, degree: &DegreeVector) -> Self {
        let n = crate::basis::detail_dim(kappa, degree);
        Self {
            kappa: kappa.clone(),
            degree: degree.clone(),
            coeffs: vec![0.0; n],
        }
    }

    /// Number of positions `ρ_j` along axis `j`: `2^{κ_j - 1}`, or 1 when `κ_j = 0`.
    pub fn positions(&self, axis: usize) -> usize {
        1 << self.kappa.get(axis).saturating_sub(1)
    }

    pub fn shape(&self) -> Vec<usize> {
        (0..self.kappa.dim())
            .map(|j| self.positions(j) * (self.degree.get(j) + 1))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn flat(&self, rho: &[usize], i: &[usize]) -> usize {
        let mut flat = 0;
        for j in 0..self.kappa.dim() {
            let b = self.degree.get(j) + 1;
            flat = flat * self.positions(j) * b + rho[j] * b + i[j];
        }
        flat
    }

    /// Coefficient of basis function `i` at position `ρ`.
    pub fn get(&self, rho: &[usize], i: &[usize]) -> f64 {
        self.coeffs[self.flat(rho, i)]
    }

    pub fn set(&mut self, rho: &[usize], i: &[usize], v: f64) {
        let f = self.flat(rho, i);
        self.coeffs[f] = v;
    }

    /// All `(ρ, i, value)` with `ρ` slowest, both lexicographic.
    pub fn records(&self) -> Vec<(Vec<usize>, Vec<usize>, f64)> {
        let dim = self.kappa.dim();
        let mut out = Vec::with_capacity(self.len());
        let mut rho = vec![0usize; dim];
        loop {
            let mut i = vec![0usize; dim];
            loop {
                out.push((rho.clone(), i.clone(), self.get(&rho, &i)));
                if !advance(&mut i, |j| self.degree.get(j) + 1) {
                    break;
                }
            }
            if !advance(&mut rho, |j| self.positions(j)) {
                return out;
            }
        }
    }

    /// `‖𝓔_κ f‖_{L_2}`.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Coefficients against the unnormalized functions `φ_i(2^{κ-χ_J} x - ρ)`,
    /// i.e. the orthonormal ones times `2^{(κ-χ_J, e)/2}`.
    pub fn amplitudes(&self) -> Vec<f64> {
        let s = 2f64.powf(self.kappa.minus_support().sum() as f64 / 2.0);
        self.coeffs.iter().map(|c| c * s).collect()
    }
}

/// Blocks `κ ↦ 𝓔_κ f` over an index set.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub grid: Arc<Grid>,
    pub degree: DegreeVector,
    pub index_set: IndexSet,
    pub blocks: BTreeMap<MultiIndex, DetailCoeffs>,
}

impl Decomposition {
    /// Decomposition with no blocks (synthesizes to zero).
    pub fn empty(grid: &Arc<Grid>, degree: &DegreeVector, index_set: IndexSet) -> Self {
        Self {
            grid: Arc::clone(grid),
            degree: degree.clone(),
            index_set,
            blocks: BTreeMap::new(),
        }
    }

    /// `Σ_κ ‖𝓔_κ f‖²`.
    pub fn energy(&self) -> f64 {
        self.blocks
            .values()
            .map(|b| b.coeffs.iter().map(|c| c * c).sum::<f64>())
            .sum()
    }
}

/// Multiwavelet analysis and synthesis on one grid for one degree vector.
#[derive(Debug, Clone)]
pub struct Transform {
    grid: Arc<Grid>,
    degree: DegreeVector,
    wavelets: Vec<WaveletBasis1D>,
    /// `detail[j][k]`: level-`k` detail functions on axis `j`.
    detail: Vec<Vec<AxisBasis>>,
}

impl Transform {
    pub fn new(grid: &Arc<Grid>, degree: &DegreeVector) -> Result<Self> {
        if degree.dim() != grid.dim() {
            return invalid("degree and grid dimensions differ");
        }
        for j in 0..grid.dim() {
            if grid.nodes_per_cell(j) < degree.get(j) + 1 {
                return invalid(format!(
                    "axis {j}: {} nodes per cell are too few for degree {}",
                    grid.nodes_per_cell(j),
                    degree.get(j)
                ));
            }
        }
        let wavelets: Vec<WaveletBasis1D> = degree.as_slice().iter().map(|&l| wavelet_basis_1d(l)).collect();
        let detail = (0..grid.dim())
            .map(|j| {
                (0..=grid.level())
                    .map(|k| AxisBasis::detail(grid, j, k, &wavelets[j]))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: Arc::clone(grid),
            degree: degree.clone(),
            wavelets,
            detail,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn degree(&self) -> &DegreeVector {
        &self.degree
    }

    pub fn wavelets(&self, axis: usize) -> &WaveletBasis1D {
        &self.wavelets[axis]
    }

    fn check(&self, f: &GridFunction, kappa: &MultiIndex) -> Result<()> {
        if !f.grid().as_ref().eq(self.grid.as_ref()) {
            return invalid("function lives on a different grid");
        }
        check_resolution(&self.grid, kappa)
    }

    /// Coefficients of `𝓔_κ f` in the orthonormal detail basis.
    pub fn analyze_block(&self, f: &GridFunction, kappa: &MultiIndex) -> Result<DetailCoeffs> {
        self.check(f, kappa)?;
        let mut shape: Vec<usize> = (0..self.grid.dim()).map(|j| self.grid.axis_len(j)).collect();
        let mut data = f.values().to_vec();
        for j in 0..self.grid.dim() {
            let b = &self.detail[j][kappa.get(j) as usize].weighted;
            data = contract(&data, &shape, j, b);
            shape[j] = b.rows();
        }
        Ok(DetailCoeffs {
            kappa: kappa.clone(),
            degree: self.degree.clone(),
            coeffs: data,
        })
    }

    /// `Σ c(ρ,i) 2^{(κ-χ_J,e)/2} φ_i(2^{κ-χ_J} x - ρ)` on the grid.
    pub fn synthesize_block(&self, block: &DetailCoeffs) -> Result<GridFunction> {
        check_resolution(&self.grid, &block.kappa)?;
        if block.degree != self.degree || block.len() != crate::basis::detail_dim(&block.kappa, &self.degree) {
            return invalid("block does not match transform degree");
        }
        let mut shape = block.shape();
        let mut data = block.coeffs.clone();
        for j in 0..self.grid.dim() {
            let b = &self.detail[j][block.kappa.get(j) as usize].values;
            data = contract(&data, &shape, j, &b.transpose());
            shape[j] = b.cols();
        }
        GridFunction::from_values(&self.grid, data)
    }

    /// `𝓔_κ f` through the basis.
    pub fn detail(&self, f: &GridFunction, kappa: &MultiIndex) -> Result<GridFunction> {
        self.synthesize_block(&self.analyze_block(f, kappa)?)
    }

    /// `E_k f` as a product of 1D level projectors.
    pub fn level(&self, f: &GridFunction, k: &MultiIndex) -> Result<GridFunction> {
        self.check(f, k)?;
        let mut g = f.clone();
        for j in 0..self.grid.dim() {
            let p = AxisProjector::level(&self.grid, j, k.get(j), self.degree.get(j))?;
            g = super::apply_axis(&p, j, &g)?;
        }
        Ok(g)
    }

    pub fn analyze(&self, f: &GridFunction, index_set: &IndexSet) -> Result<Decomposition> {
        if index_set.dim() != self.grid.dim() {
            return invalid("index set and grid dimensions differ");
        }
        let indices = index_set.indices();
        for k in &indices {
            check_resolution(&self.grid, k)?;
        }
        let blocks = indices
            .par_iter()
            .map(|k| self.analyze_block(f, k).map(|b| (k.clone(), b)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Decomposition {
            grid: Arc::clone(&self.grid),
            degree: self.degree.clone(),
            index_set: index_set.clone(),
            blocks: blocks.into_iter().collect(),
        })
    }

    /// Sum of all blocks, accumulated in key order.
    pub fn synthesize(&self, dec: &Decomposition) -> Result<GridFunction> {
        let parts = dec
            .blocks
            .values()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|b| self.synthesize_block(b))
            .collect::<Result<Vec<_>>>()?;
        let mut out = GridFunction::zeros(&self.grid);
        for p in &parts {
            out.axpy(1.0, p)?;
        }
        Ok(out)
    }
}

/// Blocks of `f` over `index_set` in the degree-`l` multiwavelet basis.
pub fn analyze(f: &GridFunction, index_set: &IndexSet, l: &DegreeVector) -> Result<Decomposition> {
    Transform::new(f.grid(), l)?.analyze(f, index_set)
}

/// Function represented by a decomposition.
pub fn synthesize(dec: &Decomposition) -> Result<GridFunction> {
    if dec.blocks.is_empty() {
        return Ok(GridFunction::zeros(&dec.grid));
    }
    Transform::new(&dec.grid, &dec.degree)?.synthesize(dec)
}

/// `|‖E_k f‖² - Σ_{κ≤k} ‖𝓔_κ f‖²|`, with `E_k f` from direct cellwise
/// projection and the block norms from the basis coefficients.
pub fn parseval_gap(f: &GridFunction, k: &MultiIndex, l: &DegreeVector) -> Result<f64> {
    let top = project_level(f, k, l)?.l2_norm_sq();
    let dec = analyze(f, &IndexSet::Box(k.clone()), l)?;
    Ok((top - dec.energy()).abs())
}
