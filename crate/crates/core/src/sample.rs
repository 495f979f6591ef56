//! Seeded random test functions.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dyadic::{enum_box, DyadicCube, MultiIndex};
use crate::error::Result;
use crate::grid::{Grid, GridFunction};
use crate::projectors::{DetailCoeffs, PiecewisePoly, Transform};
use crate::quadrature::{DegreeVector, LocalPoly};

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Element of `𝒫_κ` with independent standard normal coefficients.
pub fn random_piecewise_poly<R: Rng + ?Sized>(kappa: &MultiIndex, l: &DegreeVector, rng: &mut R) -> PiecewisePoly {
    let top = MultiIndex::new(kappa.as_slice().iter().map(|&k| (1u32 << k) - 1).collect());
    let cells = enum_box(&top)
        .into_iter()
        .map(|nu| LocalPoly {
            cube: DyadicCube::new(kappa.clone(), nu.as_slice().iter().map(|&p| p as i64).collect())
                .expect("valid cube"),
            degree: l.clone(),
            coeffs: (0..l.block_size()).map(|_| normal(rng)).collect(),
        })
        .collect();
    PiecewisePoly {
        level: kappa.clone(),
        degree: l.clone(),
        cells,
    }
}

/// Random piecewise polynomial at level `κ`, sampled on `grid`.
pub fn random_piecewise_fn<R: Rng + ?Sized>(
    grid: &Arc<Grid>,
    kappa: &MultiIndex,
    l: &DegreeVector,
    rng: &mut R,
) -> Result<GridFunction> {
    random_piecewise_poly(kappa, l, rng).to_grid(grid)
}

/// Smooth non-polynomial function: a short random sum of products of sines.
pub fn random_smooth<R: Rng + ?Sized>(grid: &Arc<Grid>, rng: &mut R) -> GridFunction {
    let dim = grid.dim();
    let terms: Vec<(f64, Vec<(f64, f64)>)> = (0..4)
        .map(|_| {
            let amp = normal(rng);
            let axes = (0..dim)
                .map(|_| (rng.random_range(0.5..6.0), rng.random_range(0.0..std::f64::consts::TAU)))
                .collect();
            (amp, axes)
        })
        .collect();
    GridFunction::from_fn(grid, |x| {
        terms
            .iter()
            .map(|(a, axes)| a * axes.iter().zip(x).map(|((w, ph), t)| (w * t + ph).sin()).product::<f64>())
            .sum()
    })
}

/// Families of random functions used by the empirical sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ensemble {
    /// Gaussian detail coefficients damped by `2^{-|κ|/2}` per block.
    Decaying,
    /// A handful of random single coefficients in random blocks.
    Sparse,
    /// Gaussian piecewise polynomial on the finest cells.
    Cellwise,
}

impl Ensemble {
    pub const ALL: [Ensemble; 3] = [Ensemble::Decaying, Ensemble::Sparse, Ensemble::Cellwise];

    /// Ensemble assigned to trial number `trial` (cycling through [`Ensemble::ALL`]).
    pub fn for_trial(trial: usize) -> Self {
        Self::ALL[trial % Self::ALL.len()]
    }
}

/// Random function in `𝒫_k` drawn from `ensemble`, built through `transform`.
pub fn random_detail_fn<R: Rng + ?Sized>(
    transform: &Transform,
    k: &MultiIndex,
    ensemble: Ensemble,
    rng: &mut R,
) -> Result<GridFunction> {
    let grid = transform.grid();
    let l = transform.degree();
    match ensemble {
        Ensemble::Cellwise => random_piecewise_fn(grid, k, l, rng),
        Ensemble::Decaying | Ensemble::Sparse => {
            let blocks = enum_box(k);
            let mut out = GridFunction::zeros(grid);
            let picks: Vec<usize> = if ensemble == Ensemble::Sparse {
                let n = rng.random_range(1..=4);
                (0..n).map(|_| rng.random_range(0..blocks.len())).collect()
            } else {
                (0..blocks.len()).collect()
            };
            for b in picks {
                let kappa = &blocks[b];
                let mut c = DetailCoeffs::zeros(kappa, l);
                if ensemble == Ensemble::Sparse {
                    let at = rng.random_range(0..c.len());
                    c.coeffs[at] = normal(rng);
                } else {
                    let damp = 2f64.powf(-(kappa.sum() as f64) / 2.0);
                    c.coeffs.iter_mut().for_each(|v| *v = damp * normal(rng));
                }
                out.axpy(1.0, &transform.synthesize_block(&c)?)?;
            }
            Ok(out)
        }
    }
}
