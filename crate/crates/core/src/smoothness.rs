//! Mixed differences and moduli of continuity, Hölder/Besov mixed-smoothness
//! seminorms, block-decay checks and class-extremal test functions.
//!
//! Shifts are always multiples of the finest cell side `2^{-K}`: a shift by
//! `s_j` cells along axis `j` maps every grid node to the same Gauss node of
//! another cell, so differences are computed on the samples without any
//! interpolation.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dyadic::{enum_box, min_with_multiplicity, MultiIndex};
use crate::error::{invalid, Result};
use crate::grid::{Grid, GridFunction};
use crate::projectors::{Decomposition, DetailCoeffs, IndexSet, Transform};
use crate::quadrature::DegreeVector;
use crate::sample::trial_rng;

/// Default number of sampled shifts per axis in a modulus table.
pub const DEFAULT_SHIFT_CAP: usize = 64;

/// Integrability index `θ ∈ [1,∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Theta {
    Finite(f64),
    Infinite,
}

impl Theta {
    pub fn new(theta: f64) -> Result<Self> {
        if theta == f64::INFINITY {
            Ok(Theta::Infinite)
        } else if theta.is_finite() && theta >= 1.0 {
            Ok(Theta::Finite(theta))
        } else {
            invalid(format!("theta must lie in [1,inf], got {theta}"))
        }
    }

    /// `1/θ`.
    pub fn recip(self) -> f64 {
        match self {
            Theta::Finite(t) => 1.0 / t,
            Theta::Infinite => 0.0,
        }
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theta::Finite(t) => write!(f, "{t}"),
            Theta::Infinite => write!(f, "inf"),
        }
    }
}

/// Smoothness vector `α`, integrability `p` and `θ` of a mixed-smoothness class.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessParams {
    pub alpha: Vec<f64>,
    pub p: f64,
    pub theta: Theta,
}

impl SmoothnessParams {
    pub fn new(alpha: Vec<f64>, p: f64, theta: Theta) -> Result<Self> {
        if alpha.is_empty() {
            return invalid("alpha must have at least one entry");
        }
        if alpha.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return invalid("alpha entries must be positive and finite");
        }
        if !(p >= 1.0) || !p.is_finite() {
            return invalid(format!("p must lie in [1,inf), got {p}"));
        }
        Ok(Self { alpha, p, theta })
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// `l(α)`: the least integer strictly above each `α_j`.
    pub fn order(&self) -> MultiIndex {
        MultiIndex::new(self.alpha.iter().map(|&a| a.floor() as u32 + 1).collect())
    }

    /// Polynomial degree `l(α) - e` of the associated multiwavelet library.
    pub fn degree(&self) -> DegreeVector {
        DegreeVector::new(self.order().as_slice().iter().map(|&l| l as usize - 1).collect())
            .expect("nonempty")
    }

    /// `(𝔪(α), 𝔠(α))`.
    pub fn min_alpha(&self) -> (f64, usize) {
        min_with_multiplicity(&self.alpha)
    }

    /// `(κ, α - (1/p - 1/q)_+ e)`.
    pub fn decay_exponent(&self, kappa: &MultiIndex, q: f64) -> f64 {
        let shift = (1.0 / self.p - 1.0 / q).max(0.0);
        kappa
            .as_slice()
            .iter()
            .zip(&self.alpha)
            .map(|(&k, a)| k as f64 * (a - shift))
            .sum()
    }
}

/// Snaps a real shift vector to whole finest cells.
pub fn shift_steps(grid: &Grid, h: &[f64]) -> Result<Vec<i64>> {
    if h.len() != grid.dim() {
        return invalid("shift and grid dimensions differ");
    }
    let cells = (1u64 << grid.level()) as f64;
    h.iter()
        .map(|&x| {
            let s = x * cells;
            let r = s.round();
            if !s.is_finite() || (s - r).abs() > 1e-9 * s.abs().max(1.0) {
                invalid(format!("shift {x} is not a multiple of 2^-{}", grid.level()))
            } else {
                Ok(r as i64)
            }
        })
        .collect()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn check_order(grid: &Grid, l: &MultiIndex) -> Result<()> {
    if l.dim() != grid.dim() {
        return invalid("difference order and grid dimensions differ");
    }
    Ok(())
}

/// Cell-index window `[lo, hi)` whose points stay inside `I` under shifts `0, s, .., l s`.
fn valid_cells(cells: i64, s: i64, l: u32) -> (i64, i64) {
    let reach = s * l as i64;
    (0.max(-reach), cells.min(cells - reach))
}

/// `Δ_h^l f` for a shift of `steps[j]` finest cells per axis, zero outside `D_h^l`.
///
/// Evaluated as the binomial sum `Σ_{k≤l} (-1)^{|l-k|} C_l^k f(x + k h)`.
pub fn mixed_difference_steps(f: &GridFunction, steps: &[i64], l: &MultiIndex) -> Result<GridFunction> {
    let grid = f.grid();
    check_order(grid, l)?;
    if steps.len() != grid.dim() {
        return invalid("shift and grid dimensions differ");
    }
    let dim = grid.dim();
    let cells = 1i64 << grid.level();
    let windows: Vec<(i64, i64)> = (0..dim).map(|j| valid_cells(cells, steps[j], l.get(j))).collect();
    let terms: Vec<(isize, f64)> = enum_box(l)
        .into_iter()
        .map(|k| {
            let mut offset = 0isize;
            let mut c = 1.0;
            for j in 0..dim {
                let (kj, lj) = (k.get(j), l.get(j));
                offset += (kj as i64 * steps[j]) as isize * (grid.nodes_per_cell(j) * grid.strides()[j]) as isize;
                c *= binomial(lj, kj) * if (lj - kj) % 2 == 1 { -1.0 } else { 1.0 };
            }
            (offset, c)
        })
        .collect();
    let src = f.values();
    let mut out = vec![0.0; src.len()];
    out.par_iter_mut().enumerate().for_each_init(
        || vec![0usize; dim],
        |idx, (i, v)| {
            grid.unflatten(i, idx);
            let inside = (0..dim).all(|j| {
                let c = grid.cell_of(j, idx[j]) as i64;
                c >= windows[j].0 && c < windows[j].1
            });
            if inside {
                *v = terms
                    .iter()
                    .map(|&(o, c)| c * src[(i as isize + o) as usize])
                    .sum();
            }
        },
    );
    GridFunction::from_values(grid, out)
}

/// [`mixed_difference_steps`] for a real shift vector commensurate with the grid.
pub fn mixed_difference(f: &GridFunction, h: &[f64], l: &MultiIndex) -> Result<GridFunction> {
    let steps = shift_steps(f.grid(), h)?;
    mixed_difference_steps(f, &steps, l)
}

/// Same operator computed as the product `∏_j Δ_{h_j e_j}^{l_j}`, one axis at a time.
pub fn mixed_difference_axiswise(f: &GridFunction, h: &[f64], l: &MultiIndex) -> Result<GridFunction> {
    let grid = f.grid();
    check_order(grid, l)?;
    let steps = shift_steps(grid, h)?;
    let cells = 1i64 << grid.level();
    let mut cur = f.values().to_vec();
    let mut idx = vec![0usize; grid.dim()];
    for j in 0..grid.dim() {
        let lj = l.get(j);
        if lj == 0 {
            continue;
        }
        let (lo, hi) = valid_cells(cells, steps[j], lj);
        let stride = (steps[j] * (grid.nodes_per_cell(j) * grid.strides()[j]) as i64) as isize;
        let mut next = vec![0.0; cur.len()];
        for (i, v) in next.iter_mut().enumerate() {
            grid.unflatten(i, &mut idx);
            let c = grid.cell_of(j, idx[j]) as i64;
            if c < lo || c >= hi {
                continue;
            }
            // Repeated first differences: Δ^{l} = Δ(Δ^{l-1}).
            let mut window: Vec<f64> = (0..=lj as isize)
                .map(|k| cur[(i as isize + k * stride) as usize])
                .collect();
            for _ in 0..lj {
                for k in 0..window.len() - 1 {
                    window[k] = window[k + 1] - window[k];
                }
                window.pop();
            }
            *v = window[0];
        }
        cur = next;
    }
    GridFunction::from_values(grid, cur)
}

fn mask_order(l: &MultiIndex, mask: u32) -> MultiIndex {
    MultiIndex::new(
        (0..l.dim())
            .map(|j| if mask >> j & 1 == 1 { l.get(j) } else { 0 })
            .collect(),
    )
}

fn mask_axes(dim: usize, mask: u32) -> Vec<usize> {
    (0..dim).filter(|j| mask >> j & 1 == 1).collect()
}

fn check_mask(dim: usize, mask: u32) -> Result<()> {
    if mask == 0 || mask >> dim != 0 {
        return invalid(format!("axis set {mask:#b} is empty or out of range"));
    }
    Ok(())
}

/// Non-negative shifts `0..=max` sampled for one axis: all of them when there
/// are at most `cap + 1`, otherwise an even spread plus every power of two.
fn sampled_shifts(max: i64, cap: usize) -> Vec<i64> {
    if max <= cap as i64 {
        return (0..=max).collect();
    }
    let mut v: Vec<i64> = (0..=cap as i64)
        .map(|k| ((k as f64) * max as f64 / cap as f64).round() as i64)
        .collect();
    let mut p = 1;
    while p <= max {
        v.push(p);
        p *= 2;
    }
    v.sort_unstable();
    v.dedup();
    v
}

/// Shift lattice over the axes of `mask`, with per-axis bounds.
fn shift_lattice(dim: usize, axes: &[usize], bounds: &[i64], cap: usize) -> Vec<Vec<i64>> {
    let per_axis: Vec<Vec<i64>> = bounds.iter().map(|&b| sampled_shifts(b, cap)).collect();
    let top = MultiIndex::new(per_axis.iter().map(|v| v.len() as u32 - 1).collect());
    enum_box(&top)
        .into_iter()
        .map(|pick| {
            let mut s = vec![0i64; dim];
            for (n, &j) in axes.iter().enumerate() {
                s[j] = per_axis[n][pick.get(n) as usize];
            }
            s
        })
        .collect()
}

fn difference_norms(f: &GridFunction, l: &MultiIndex, shifts: &[Vec<i64>], p: f64) -> Result<Vec<f64>> {
    shifts
        .par_iter()
        .map(|s| mixed_difference_steps(f, s, l)?.lp_norm(p))
        .collect()
}

/// `Ω^{lχ_J}(f, t^J)_{L_p}`: the largest `‖Δ_h^{lχ_J} f‖_{L_p(D_h)}` over sampled
/// grid shifts with `0 ≤ h_j ≤ t_j` for `j ∈ J` (the axes set in `mask`).
///
/// Only non-negative shifts are needed: `Δ_{-h}` is `Δ_h` reflected and
/// translated, with the same norm on its own domain.
pub fn mixed_modulus(f: &GridFunction, mask: u32, t: &[f64], l: &MultiIndex, p: f64) -> Result<f64> {
    let grid = f.grid();
    check_order(grid, l)?;
    check_mask(grid.dim(), mask)?;
    if t.len() != grid.dim() {
        return invalid("scale and grid dimensions differ");
    }
    let axes = mask_axes(grid.dim(), mask);
    if axes.iter().any(|&j| !(t[j] > 0.0)) {
        return invalid("scales must be positive");
    }
    let cells = (1u64 << grid.level()) as f64;
    let bounds: Vec<i64> = axes
        .iter()
        .map(|&j| ((t[j].min(1.0) * cells) + 1e-9).floor() as i64)
        .collect();
    let shifts = shift_lattice(grid.dim(), &axes, &bounds, DEFAULT_SHIFT_CAP);
    let norms = difference_norms(f, &mask_order(l, mask), &shifts, p)?;
    Ok(norms.into_iter().fold(0.0, f64::max))
}

/// `Ω^{lχ_J}(f, 2^{-m})` for every nonempty `J` and every `m ∈ {0..K}^J`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusTable {
    dim: usize,
    level: u32,
    p: f64,
    order: MultiIndex,
    /// Per axis mask, values over `{0..K}^J` in row-major order of the axes of `J`.
    parts: BTreeMap<u32, Vec<f64>>,
}

impl ModulusTable {
    /// Samples at most `cap + 1 + K` shifts per axis (all of them when `2^K ≤ cap`).
    pub fn new(f: &GridFunction, order: &MultiIndex, p: f64, cap: usize) -> Result<Self> {
        let grid = f.grid();
        check_order(grid, order)?;
        if cap == 0 {
            return invalid("shift cap must be positive");
        }
        let dim = grid.dim();
        let level = grid.level();
        let full = 1i64 << level;
        let mut parts = BTreeMap::new();
        for mask in 1u32..(1 << dim) {
            let axes = mask_axes(dim, mask);
            let shifts = shift_lattice(dim, &axes, &vec![full; axes.len()], cap);
            let norms = difference_norms(f, &mask_order(order, mask), &shifts, p)?;
            let values = enum_box(&MultiIndex::uniform(axes.len(), level))
                .into_iter()
                .map(|m| {
                    shifts
                        .iter()
                        .zip(&norms)
                        .filter(|(s, _)| {
                            axes.iter()
                                .enumerate()
                                .all(|(n, &j)| s[j] <= full >> m.get(n))
                        })
                        .map(|(_, &v)| v)
                        .fold(0.0, f64::max)
                })
                .collect();
            parts.insert(mask, values);
        }
        Ok(Self {
            dim,
            level,
            p,
            order: order.clone(),
            parts,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn order(&self) -> &MultiIndex {
        &self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Ω^{lχ_J}(f, 2^{-m})`, `m` listing the exponents of the axes of `J` in order.
    pub fn get(&self, mask: u32, m: &[u32]) -> f64 {
        let values = &self.parts[&mask];
        let side = self.level as usize + 1;
        let at = m.iter().fold(0usize, |acc, &x| {
            assert!(x <= self.level, "scale exponent {x} beyond level {}", self.level);
            acc * side + x as usize
        });
        values[at]
    }

    pub fn masks(&self) -> impl Iterator<Item = u32> + '_ {
        self.parts.keys().copied()
    }
}

/// Exponent of one dyadic `t`-block along one axis: `Some(m)` for
/// `t ∈ (2^{-m-1}, 2^{-m}]`, `None` for `t > 1`.
type Block = Option<u32>;

fn blocks(level: u32) -> Vec<Block> {
    std::iter::once(None).chain((0..=level).map(Some)).collect()
}

fn log2_sum(logs: &[f64]) -> f64 {
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + logs.iter().map(|x| (x - top).exp2()).sum::<f64>().log2()
}

/// Seminorm part for one axis set `J` from a modulus table.
///
/// The `t`-integral is split into dyadic blocks `(2^{-m-1}, 2^{-m}]`,
/// `m = 0..K`, plus `t > 1`; on each block the modulus is replaced by its
/// value at the right end. Blocks below `2^{-K-1}` are not resolved and
/// contribute nothing. For `θ = ∞` the block supremum of `t^{-α}` is used.
pub fn seminorm_part(table: &ModulusTable, alpha: &[f64], theta: Theta, mask: u32) -> Result<f64> {
    if alpha.len() != table.dim {
        return invalid("alpha and table dimensions differ");
    }
    check_mask(table.dim, mask)?;
    let axes = mask_axes(table.dim, mask);
    let choices = blocks(table.level);
    let top = MultiIndex::uniform(axes.len(), choices.len() as u32 - 1);
    let mut logs = Vec::new();
    for pick in enum_box(&top) {
        let block: Vec<Block> = pick.as_slice().iter().map(|&c| choices[c as usize]).collect();
        let m: Vec<u32> = block.iter().map(|b| b.unwrap_or(0)).collect();
        let omega = table.get(mask, &m);
        if omega <= 0.0 {
            continue;
        }
        let mut log_w = 0.0;
        for (n, &j) in axes.iter().enumerate() {
            let a = alpha[j];
            log_w += match (theta, block[n]) {
                (Theta::Infinite, Some(m)) => a * (m + 1) as f64,
                (Theta::Infinite, None) => 0.0,
                (Theta::Finite(th), Some(m)) => {
                    let x = th * a;
                    x * (m + 1) as f64 + (-(-x).exp2()).ln_1p() / std::f64::consts::LN_2 - x.log2()
                }
                (Theta::Finite(th), None) => -(th * a).log2(),
            };
        }
        logs.push(match theta {
            Theta::Infinite => log_w + omega.log2(),
            Theta::Finite(th) => log_w + th * omega.log2(),
        });
    }
    Ok(match theta {
        _ if logs.is_empty() => 0.0,
        Theta::Infinite => logs.iter().copied().fold(f64::NEG_INFINITY, f64::max).exp2(),
        Theta::Finite(th) => (log2_sum(&logs) / th).exp2(),
    })
}

/// Largest [`seminorm_part`] over nonempty `J`, with the parts themselves.
pub fn seminorm_from_table(table: &ModulusTable, alpha: &[f64], theta: Theta) -> Result<(f64, Vec<(u32, f64)>)> {
    let parts = table
        .masks()
        .map(|mask| seminorm_part(table, alpha, theta, mask).map(|v| (mask, v)))
        .collect::<Result<Vec<_>>>()?;
    let value = parts.iter().map(|&(_, v)| v).fold(0.0, f64::max);
    Ok((value, parts))
}

/// Discretized class seminorm: `f` is in the unit ball iff the value is `≤ 1`.
pub fn besov_seminorm(f: &GridFunction, params: &SmoothnessParams) -> Result<f64> {
    if params.dim() != f.grid().dim() {
        return invalid("parameter and grid dimensions differ");
    }
    let table = ModulusTable::new(f, &params.order(), params.p, DEFAULT_SHIFT_CAP)?;
    Ok(seminorm_from_table(&table, &params.alpha, params.theta)?.0)
}

/// `f` scaled to unit seminorm, together with the original seminorm.
/// Functions with zero seminorm are returned unchanged.
pub fn normalize_to_class(f: &GridFunction, params: &SmoothnessParams) -> Result<(GridFunction, f64)> {
    let s = besov_seminorm(f, params)?;
    let mut g = f.clone();
    if s > 0.0 {
        g.scale(1.0 / s);
    }
    Ok((g, s))
}

/// One block of a decay report.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub kappa: MultiIndex,
    /// `‖𝓔_κ f‖_{L_q}`.
    pub norm: f64,
    /// `2^{-(κ, α - (1/p - 1/q)_+ e)}`.
    pub model: f64,
    pub ratio: f64,
}

/// Block norms against the decay model for every `κ ≠ 0` up to the grid level.
pub fn decay_check(
    transform: &Transform,
    f: &GridFunction,
    params: &SmoothnessParams,
    q: f64,
) -> Result<Vec<DecayRow>> {
    if transform.degree() != &params.degree() {
        return invalid("transform degree must be l(alpha) - e");
    }
    let top = MultiIndex::uniform(params.dim(), transform.grid().level());
    enum_box(&top)
        .into_par_iter()
        .filter(|k| k.sum() > 0)
        .map(|k| {
            let norm = transform.detail(f, &k)?.lp_norm(q)?;
            let model = (-params.decay_exponent(&k, q)).exp2();
            Ok(DecayRow {
                ratio: norm / model,
                kappa: k,
                norm,
                model,
            })
        })
        .collect()
}

/// Largest ratio of a decay report (0 when empty).
pub fn max_ratio(rows: &[DecayRow]) -> f64 {
    rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
}

/// Gaussian detail blocks for every `κ ≤ K e`, each scaled so that
/// `‖𝓔_κ f‖_{L_p} = 2^{-(κ,α)}`.
pub fn extremal_decomposition(params: &SmoothnessParams, level: u32, seed: u64) -> Result<Decomposition> {
    let degree = params.degree();
    let grid = Grid::for_degree(level, &degree, None)?;
    let t = Transform::new(&grid, &degree)?;
    let top = MultiIndex::uniform(params.dim(), level);
    let indices = enum_box(&top);
    let blocks = indices
        .par_iter()
        .enumerate()
        .map(|(n, k)| {
            let mut rng = trial_rng(seed, n as u64);
            let mut c = DetailCoeffs::zeros(k, &degree);
            c.coeffs.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
            let norm = t.synthesize_block(&c)?.lp_norm(params.p)?;
            let target = (-k.dot(&params.alpha)).exp2();
            c.coeffs.iter_mut().for_each(|v| *v *= target / norm);
            Ok((k.clone(), c))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Decomposition {
        grid: Arc::clone(&grid),
        degree,
        index_set: IndexSet::Box(top),
        blocks: blocks.into_iter().collect(),
    })
}

/// The function of [`extremal_decomposition`] on its grid.
pub fn synthesize_extremal(params: &SmoothnessParams, level: u32, seed: u64) -> Result<GridFunction> {
    crate::projectors::synthesize(&extremal_decomposition(params, level, seed)?)
}
