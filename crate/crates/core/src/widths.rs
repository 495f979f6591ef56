//! Hyperbolic-cross truncation, dimension counts, block-budget allocation and
//! empirical width-rate fits.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::detail_dim;
use crate::dyadic::{cross_real, enum_shell, in_cross, min_with_multiplicity, sum_outside_cross, MultiIndex};
use crate::error::{invalid, Error, Result};
use crate::grid::GridFunction;
use crate::projectors::{Decomposition, IndexSet, Transform};
use crate::quadrature::DegreeVector;
use crate::smoothness::{extremal_decomposition, SmoothnessParams, Theta};

const TIE: f64 = 1e-12;

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

fn check_q(q: f64) -> Result<()> {
    if !(q >= 1.0) || !q.is_finite() {
        return invalid(format!("q must lie in [1,inf), got {q}"));
    }
    Ok(())
}

/// `α - (1/p - 1/q)_+ e`.
fn shifted_alpha(params: &SmoothnessParams, q: f64) -> Vec<f64> {
    let s = pos(1.0 / params.p - 1.0 / q);
    params.alpha.iter().map(|a| a - s).collect()
}

/// `α - (1/p - 1/q)_+ e > 0`.
pub fn decay_condition(params: &SmoothnessParams, q: f64) -> bool {
    shifted_alpha(params, q).iter().all(|&a| a > 0.0)
}

/// Axes where `α` attains its minimum.
pub fn minimal_axes(alpha: &[f64]) -> Vec<bool> {
    let (m, _) = min_with_multiplicity(alpha);
    alpha.iter().map(|&a| (a - m).abs() <= TIE * m.abs().max(1.0)).collect()
}

/// Weights for the cross: `1` on the minimal axes of `α`, and for the other
/// axes the midpoint of the open interval `1 < β_j < A_j / 𝔪(A)` with
/// `A = α - (1/p - 1/q)_+ e`.
pub fn choose_beta(params: &SmoothnessParams, q: f64) -> Result<Vec<f64>> {
    check_q(q)?;
    if !decay_condition(params, q) {
        return invalid("alpha - (1/p - 1/q)_+ e must be positive");
    }
    let a = shifted_alpha(params, q);
    let (m, _) = min_with_multiplicity(&a);
    Ok(minimal_axes(&params.alpha)
        .iter()
        .zip(&a)
        .map(|(&min, &aj)| if min { 1.0 } else { 0.5 * (1.0 + aj / m) })
        .collect())
}

/// `Σ_{(κ,β) ≤ r} dim 𝔓_κ` for the given degree.
pub fn cross_dimension(beta: &[f64], r: f64, degree: &DegreeVector) -> usize {
    cross_real(beta, r).iter().map(|k| detail_dim(k, degree)).sum()
}

/// Error of the cross truncation and the dimension of the cross subspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    /// `‖Σ_{(κ,β) > r, κ ≤ K e} 𝓔_κ f‖_{L_q}`.
    pub error: f64,
    pub n: usize,
}

fn check_beta(beta: &[f64], dim: usize) -> Result<()> {
    if beta.len() != dim {
        return invalid("beta and grid dimensions differ");
    }
    if beta.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
        return invalid("beta entries must be positive and finite");
    }
    Ok(())
}

/// Truncation error of an already analysed function (blocks over `K e`).
pub fn truncation_from_decomposition(
    transform: &Transform,
    dec: &Decomposition,
    beta: &[f64],
    r: u32,
    q: f64,
) -> Result<Truncation> {
    check_q(q)?;
    check_beta(beta, dec.grid.dim())?;
    let rf = r as f64;
    let n = cross_dimension(beta, rf, &dec.degree);
    let outside = dec.blocks.iter().filter(|(k, _)| !in_cross(k, beta, rf));
    let error = if q == 2.0 {
        outside
            .map(|(_, b)| b.coeffs.iter().map(|c| c * c).sum::<f64>())
            .sum::<f64>()
            .sqrt()
            // an empty f64 sum is -0.0
            .abs()
    } else {
        let parts = outside
            .map(|(_, b)| b)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|b| transform.synthesize_block(b))
            .collect::<Result<Vec<_>>>()?;
        let mut tail = GridFunction::zeros(&dec.grid);
        for p in &parts {
            tail.axpy(1.0, p)?;
        }
        tail.lp_norm(q)?
    };
    Ok(Truncation { error, n })
}

/// `‖Σ_{(κ,β) > r} 𝓔_κ f‖_{L_q}` over the blocks resolved by the grid, and
/// the exact dimension of `Σ_{(κ,β) ≤ r} 𝔓_κ`.
pub fn truncation_error(f: &GridFunction, degree: &DegreeVector, beta: &[f64], r: u32, q: f64) -> Result<Truncation> {
    let t = Transform::new(f.grid(), degree)?;
    let dec = t.analyze(f, &IndexSet::Box(MultiIndex::uniform(f.grid().dim(), f.grid().level())))?;
    truncation_from_decomposition(&t, &dec, beta, r, q)
}

/// Model of the truncation tail of a unit-ball function:
/// `2^{-𝔪(α - (1/p-1/q) e) r} r^{(𝔠-1)(1/q* - 1/θ)_+}` for `p ≤ q`,
/// `2^{-𝔪(α) r} r^{(𝔠-1)(1/p* - 1/θ)_+}` for `q < p`.
pub fn tail_model(params: &SmoothnessParams, q: f64, r: f64) -> f64 {
    let (_, c) = params.min_alpha();
    let (rate, star) = if params.p <= q {
        let s = 1.0 / params.p - 1.0 / q;
        let m = params.alpha.iter().map(|a| a - s).fold(f64::INFINITY, f64::min);
        (m, q.min(2.0))
    } else {
        (params.min_alpha().0, params.p.min(2.0))
    };
    let log = (c as f64 - 1.0) * pos(1.0 / star - params.theta.recip());
    (-rate * r).exp2() * r.powf(log)
}

/// Truncation error divided by [`tail_model`].
pub fn tail_bound_check(
    f: &GridFunction,
    beta: &[f64],
    r: u32,
    params: &SmoothnessParams,
    q: f64,
) -> Result<f64> {
    let t = truncation_error(f, &params.degree(), beta, r, q)?;
    Ok(t.error / tail_model(params, q, r as f64))
}

/// Which bound of the width theorem applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WidthCase {
    /// `q ≤ p`, or `p < q ≤ 2` with the decay condition.
    Truncation,
    /// `q ≥ max(2,p)` with `α - (1/p) e - (1/2 - 1/p)_+ e > 0`.
    Budget,
}

/// Upper-bound exponents: `d_n ≲ n^{-rate} (log n)^{log_exponent}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthExponents {
    pub case: WidthCase,
    pub rate: f64,
    pub log_exponent: f64,
}

fn second_case_margin(params: &SmoothnessParams) -> Vec<f64> {
    let p = params.p;
    params.alpha.iter().map(|a| a - 1.0 / p - pos(0.5 - 1.0 / p)).collect()
}

/// Exponents of the upper width bound for `(α,p,θ)` in `L_q`.
pub fn width_exponents(params: &SmoothnessParams, q: f64) -> Result<WidthExponents> {
    check_q(q)?;
    let p = params.p;
    let (_, c) = params.min_alpha();
    let c1 = c as f64 - 1.0;
    if q <= p || (q <= 2.0 && decay_condition(params, q)) {
        let rate = min_with_multiplicity(&shifted_alpha(params, q)).0;
        let frak_q = p.max(q).min(2.0);
        return Ok(WidthExponents {
            case: WidthCase::Truncation,
            rate,
            log_exponent: (rate + pos(1.0 / frak_q - params.theta.recip())) * c1,
        });
    }
    if q >= p.max(2.0) && second_case_margin(params).iter().all(|&b| b > 0.0) {
        let s = pos(1.0 / p - 0.5);
        let rate = params.alpha.iter().map(|a| a - s).fold(f64::INFINITY, f64::min);
        return Ok(WidthExponents {
            case: WidthCase::Budget,
            rate,
            log_exponent: (rate + pos(0.5 - params.theta.recip())) * c1,
        });
    }
    Err(Error::Unsupported(format!(
        "no width bound for alpha={:?}, p={p}, q={q}",
        params.alpha
    )))
}

/// Block allocation for the second case of the width theorem.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetPlan {
    pub r: u32,
    pub beta: Vec<f64>,
    /// `𝔪(α - (1/p) e - (1/2 - 1/p)_+ e)`.
    pub mu: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub j0: u32,
    /// `max_J dim 𝔓_{χ_J}`.
    pub c0: usize,
    /// `𝔠(α)`.
    pub c: usize,
    /// `Σ_{(κ,β) ≤ r} dim 𝔓_κ`.
    pub head: usize,
    /// `n_κ` for `r < (κ,β) ≤ r + j0`.
    pub allocation: BTreeMap<MultiIndex, usize>,
    /// `dim 𝔓_κ` for the same blocks.
    pub block_dims: BTreeMap<MultiIndex, usize>,
}

impl BudgetPlan {
    /// `head + Σ n_κ`.
    pub fn total(&self) -> usize {
        self.head + self.allocation.values().sum::<usize>()
    }

    /// `total / (2^r r^{𝔠-1})`.
    pub fn audit(&self) -> f64 {
        let r = self.r as f64;
        self.total() as f64 / (r.exp2() * r.powi(self.c as i32 - 1))
    }
}

fn second_case_check(params: &SmoothnessParams, q: f64) -> Result<Vec<f64>> {
    check_q(q)?;
    if q < params.p.max(2.0) {
        return invalid("the budget plan needs q >= max(2, p)");
    }
    let b = second_case_margin(params);
    if b.iter().any(|&x| x <= 0.0) {
        return invalid("alpha - (1/p) e - (1/2 - 1/p)_+ e must be positive");
    }
    Ok(b)
}

/// Weights admissible for the budget plan: `1` on the minimal axes, else the
/// midpoint of `1 < β_j < min(A_j/𝔪(A), B_j/𝔪(B))` with `A` as in
/// [`choose_beta`] and `B = α - (1/p) e - (1/2 - 1/p)_+ e`.
pub fn budget_beta(params: &SmoothnessParams, q: f64) -> Result<Vec<f64>> {
    let b = second_case_check(params, q)?;
    let a = shifted_alpha(params, q);
    let (ma, _) = min_with_multiplicity(&a);
    let (mb, _) = min_with_multiplicity(&b);
    Ok(minimal_axes(&params.alpha)
        .iter()
        .enumerate()
        .map(|(j, &min)| if min { 1.0 } else { 0.5 * (1.0 + (a[j] / ma).min(b[j] / mb)) })
        .collect())
}

/// Allocation `n_κ = min(⌊c0 2^{r - γ j - γ'(κ^{J'},β^{J'})}⌋ + 1, dim 𝔓_κ)` on
/// the shells `r + j - 1 < (κ,β) ≤ r + j`, `j = 1..j0`, `j0 = ⌊r/(3γ)⌋`.
///
/// `ε`, `γ`, `γ'` are midpoints of their admissible open intervals, taken in
/// that order; `ε = 1` when every axis is minimal.
pub fn budget_plan(r: u32, beta: &[f64], params: &SmoothnessParams, q: f64) -> Result<BudgetPlan> {
    let b = second_case_check(params, q)?;
    if r == 0 {
        return invalid("radius must be at least 1");
    }
    check_beta(beta, params.dim())?;
    let minimal = minimal_axes(&params.alpha);
    let a = shifted_alpha(params, q);
    let (ma, c) = min_with_multiplicity(&a);
    let (mu, _) = min_with_multiplicity(&b);
    let mut eps_cap = f64::INFINITY;
    for j in 0..params.dim() {
        if minimal[j] {
            if (beta[j] - 1.0).abs() > TIE {
                return invalid(format!("beta_{j} must be 1 on a minimal axis"));
            }
            continue;
        }
        if !(beta[j] > 1.0 && a[j] / beta[j] > ma && b[j] / beta[j] > mu) {
            return invalid(format!("beta_{j} = {} is not admissible", beta[j]));
        }
        eps_cap = eps_cap.min(b[j] / beta[j] - mu);
    }
    let epsilon = if eps_cap.is_finite() { 0.5 * eps_cap } else { 1.0 };
    let m1 = ma;
    let m2 = params.alpha.iter().map(|x| x - pos(1.0 / params.p - 0.5)).fold(f64::INFINITY, f64::min);
    let mut gamma_cap = (1.0f64 / 3.0).min(2.0 * mu);
    if m2 > m1 {
        gamma_cap = gamma_cap.min(1.0 / (3.0 * (m2 / m1 - 1.0)));
    }
    let gamma = 0.5 * gamma_cap;
    let gamma_prime = 0.5 * gamma.min(2.0 * epsilon);
    let j0 = (r as f64 / (3.0 * gamma)).floor() as u32;
    let degree = params.degree();
    let c0 = degree.block_size();
    let head = cross_dimension(beta, r as f64, &degree);
    let mut allocation = BTreeMap::new();
    let mut block_dims = BTreeMap::new();
    for j in 1..=j0 {
        for k in enum_shell(beta, r + j)? {
            let off: f64 = (0..params.dim())
                .filter(|&i| !minimal[i])
                .map(|i| k.get(i) as f64 * beta[i])
                .sum();
            let e = r as f64 - gamma * j as f64 - gamma_prime * off;
            let dim = detail_dim(&k, &degree);
            let want = (c0 as f64 * e.exp2()).floor();
            let n = if want >= dim as f64 { dim } else { want as usize + 1 }.min(dim);
            allocation.insert(k.clone(), n);
            block_dims.insert(k, dim);
        }
    }
    Ok(BudgetPlan {
        r,
        beta: beta.to_vec(),
        mu,
        epsilon,
        gamma,
        gamma_prime,
        j0,
        c0,
        c,
        head,
        allocation,
        block_dims,
    })
}

/// Least-squares fit `ln e = a + s ln n + λ ln ln n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub intercept: f64,
    pub slope: f64,
    pub log_exponent: f64,
    /// Root-mean-square residual of `ln e`.
    pub rms: f64,
}

/// Fits `(n, error)` points; needs at least four, `n` strictly increasing and
/// above 1, errors positive.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 points, got {}", points.len())));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Fit("n must be strictly increasing".into()));
    }
    if points.iter().any(|&(n, e)| !(n > 1.0) || !(e > 0.0) || !n.is_finite() || !e.is_finite()) {
        return Err(Error::Fit("need n > 1 and positive finite errors".into()));
    }
    let rows = points.len();
    let x = DMatrix::from_fn(rows, 3, |i, c| {
        let ln = points[i].0.ln();
        match c {
            0 => 1.0,
            1 => ln,
            _ => ln.ln(),
        }
    });
    let y = DVector::from_iterator(rows, points.iter().map(|p| p.1.ln()));
    let svd = x.clone().svd(true, true);
    let sv = &svd.singular_values;
    if sv.min() <= 1e-12 * sv.max() {
        return Err(Error::Fit("design matrix is rank deficient".into()));
    }
    let coef = svd.solve(&y, 0.0).map_err(|e| Error::Fit(e.to_string()))?;
    let resid = &y - &x * &coef;
    Ok(RateFit {
        intercept: coef[0],
        slope: coef[1],
        log_exponent: coef[2],
        rms: (resid.norm_squared() / rows as f64).sqrt(),
    })
}

/// Settings of a width-rate experiment on the extremal profile.
#[derive(Debug, Clone, PartialEq)]
pub struct WidthExperimentConfig {
    pub params: SmoothnessParams,
    pub q: f64,
    pub level: u32,
    pub r_min: u32,
    pub r_max: u32,
    pub trials: usize,
    pub seed: u64,
}

impl WidthExperimentConfig {
    /// Stable 64-bit FNV-1a hash of the configuration.
    pub fn hash(&self) -> u64 {
        let text = format!(
            "{:?}|{}|{}|{}|{}|{}|{}|{}",
            self.params.alpha, self.params.p, self.params.theta, self.q, self.level, self.r_min, self.r_max, self.trials
        ) + &format!("|{}", self.seed);
        text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

/// One radius of a width experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct WidthRow {
    pub r: u32,
    pub n: usize,
    /// Largest truncation error over the trials, sub-resolution tail included.
    pub error: f64,
    /// The part of `error` measured on the grid.
    pub grid_error: f64,
    pub model: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WidthReport {
    pub config_hash: u64,
    pub beta: Vec<f64>,
    pub exponents: Option<WidthExponents>,
    /// Whether the closed-form tail beyond the grid was added (only when `q = p`).
    pub analytic_tail: bool,
    pub rows: Vec<WidthRow>,
    pub fit: Option<RateFit>,
    pub warnings: Vec<String>,
}

/// Norm of the extremal blocks beyond the grid that lie outside the cross:
/// `(Σ 4^{-(κ,α)})^{1/2}` for `q = 2`, `Σ 2^{-(κ,α)}` otherwise.
pub fn extremal_tail(alpha: &[f64], beta: &[f64], r: u32, level: u32, q: f64) -> f64 {
    let top = MultiIndex::uniform(alpha.len(), level);
    let beyond = |k: &MultiIndex| !k.le(&top);
    if q == 2.0 {
        sum_outside_cross(beta, alpha, r as f64, 40.0, |k| {
            if beyond(k) {
                (-2.0 * k.dot(alpha)).exp2()
            } else {
                0.0
            }
        })
        .sqrt()
    } else {
        sum_outside_cross(beta, alpha, r as f64, 60.0, |k| {
            if beyond(k) {
                (-k.dot(alpha)).exp2()
            } else {
                0.0
            }
        })
    }
}

/// Truncation errors of the extremal profile over `r_min..=r_max` and a rate fit.
pub fn run_width_experiment(cfg: &WidthExperimentConfig) -> Result<WidthReport> {
    check_q(cfg.q)?;
    if cfg.trials == 0 {
        return invalid("at least one trial is required");
    }
    if cfg.r_min == 0 || cfg.r_min > cfg.r_max {
        return invalid("need 1 <= r_min <= r_max");
    }
    let params = &cfg.params;
    let beta = choose_beta(params, cfg.q)?;
    let mut warnings = Vec::new();
    let exponents = match width_exponents(params, cfg.q) {
        Ok(e) => {
            if e.case == WidthCase::Budget {
                warnings.push("second-case bound: truncation errors are not width estimates".to_string());
            }
            Some(e)
        }
        Err(e) => {
            warnings.push(e.to_string());
            None
        }
    };
    if params.theta != Theta::Infinite {
        warnings.push("extremal profile has bounded block ratios; it is normalized for theta = inf".to_string());
    }
    let analytic_tail = cfg.q == params.p;
    if !analytic_tail {
        warnings.push("q != p: sub-resolution tail omitted".to_string());
    }
    let degree = params.degree();
    let radii: Vec<u32> = (cfg.r_min..=cfg.r_max).collect();
    let mut grid_err = vec![0.0f64; radii.len()];
    let mut dims = vec![0usize; radii.len()];
    for trial in 0..cfg.trials {
        let dec = extremal_decomposition(params, cfg.level, cfg.seed.wrapping_add(trial as u64))?;
        let t = Transform::new(&dec.grid, &degree)?;
        let res = radii
            .par_iter()
            .map(|&r| truncation_from_decomposition(&t, &dec, &beta, r, cfg.q))
            .collect::<Result<Vec<_>>>()?;
        for (i, tr) in res.into_iter().enumerate() {
            grid_err[i] = grid_err[i].max(tr.error);
            dims[i] = tr.n;
        }
    }
    let rows: Vec<WidthRow> = radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let tail = if analytic_tail {
                extremal_tail(&params.alpha, &beta, r, cfg.level, cfg.q)
            } else {
                0.0
            };
            let error = if cfg.q == 2.0 {
                grid_err[i].hypot(tail)
            } else {
                grid_err[i] + tail
            };
            let model = tail_model(params, cfg.q, r as f64);
            WidthRow {
                r,
                n: dims[i],
                error,
                grid_error: grid_err[i],
                model,
                ratio: error / model,
            }
        })
        .collect();
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.error)).collect();
    let fit = match rate_fit(&points) {
        Ok(f) => Some(f),
        Err(e) => {
            warnings.push(e.to_string());
            None
        }
    };
    Ok(WidthReport {
        config_hash: cfg.hash(),
        beta,
        exponents,
        analytic_tail,
        rows,
        fit,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: &[f64], p: f64, theta: f64) -> SmoothnessParams {
        SmoothnessParams::new(alpha.to_vec(), p, Theta::new(theta).unwrap()).unwrap()
    }

    #[test]
    fn beta_examples() {
        assert_eq!(choose_beta(&params(&[1.0, 1.0], 2.0, 2.0), 2.0).unwrap(), vec![1.0, 1.0]);
        assert_eq!(choose_beta(&params(&[1.0, 2.0], 2.0, 2.0), 2.0).unwrap(), vec![1.0, 1.5]);
        assert_eq!(choose_beta(&params(&[1.0, 3.0], 2.0, 2.0), 2.0).unwrap(), vec![1.0, 2.0]);
        assert!(choose_beta(&params(&[0.4, 1.0], 1.0, 2.0), 2.0).is_err());
    }

    #[test]
    fn fit_recovers_synthetic_exponents() {
        let pts: Vec<(f64, f64)> = (3..12).map(|k| (2f64.powi(k), 2f64.powi(-k))).collect();
        let f = rate_fit(&pts).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-6 && f.log_exponent.abs() < 1e-6);
        let pts: Vec<(f64, f64)> = (3..12)
            .map(|k| {
                let n = 2f64.powi(k);
                (n, n.ln().sqrt() / n)
            })
            .collect();
        let f = rate_fit(&pts).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-6 && (f.log_exponent - 0.5).abs() < 1e-6);
        assert!(rate_fit(&pts[..3]).is_err());
        let mut bad = pts.clone();
        bad.swap(1, 2);
        assert!(matches!(rate_fit(&bad), Err(Error::Fit(_))));
    }

    #[test]
    fn one_dimensional_haar_dimensions() {
        let deg = DegreeVector::uniform(1, 0);
        for r in 0..8u32 {
            assert_eq!(cross_dimension(&[1.0], r as f64, &deg), 1 << r);
        }
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let cfg = WidthExperimentConfig {
            params: params(&[1.0], 2.0, 2.0),
            q: 2.0,
            level: 4,
            r_min: 1,
            r_max: 4,
            trials: 1,
            seed: 0,
        };
        let mut other = cfg.clone();
        other.seed = 1;
        assert_eq!(cfg.hash(), cfg.clone().hash());
        assert_ne!(cfg.hash(), other.hash());
    }
}
