//! Square function, sign series, the Rademacher system and empirical
//! Littlewood–Paley sweeps.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::dyadic::{enum_box, MultiIndex};
use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::projectors::axis::{contract, LineOperator};
use crate::projectors::{Decomposition, IndexSet, Transform};
use crate::quadrature::DegreeVector;
use crate::sample::{random_detail_fn, trial_rng, Ensemble};

fn check_open_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return invalid(format!("p = {p} must lie in (1, ∞)"));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return invalid(format!("p = {p} must lie in [1, ∞)"));
    }
    Ok(())
}

/// `p* = min(2, p)`.
pub fn p_star(p: f64) -> f64 {
    p.min(2.0)
}

/// The blocks `𝓔_κ f` of a decomposition, sampled on its grid.
pub fn block_functions(dec: &Decomposition) -> Result<Vec<(MultiIndex, GridFunction)>> {
    let t = Transform::new(&dec.grid, &dec.degree)?;
    dec.blocks
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(k, b)| Ok(((*k).clone(), t.synthesize_block(b)?)))
        .collect()
}

fn square_of(grid: &std::sync::Arc<Grid>, blocks: &[(MultiIndex, GridFunction)]) -> GridFunction {
    let mut acc = vec![0.0; grid.len()];
    for (_, g) in blocks {
        acc.iter_mut().zip(g.values()).for_each(|(a, v)| *a += v * v);
    }
    GridFunction::from_values(grid, acc.into_iter().map(f64::sqrt).collect()).expect("grid length")
}

fn sum_of(grid: &std::sync::Arc<Grid>, blocks: &[(MultiIndex, GridFunction)], sign: impl Fn(&MultiIndex) -> f64) -> GridFunction {
    let mut out = GridFunction::zeros(grid);
    for (k, g) in blocks {
        out.axpy(sign(k), g).expect("same grid");
    }
    out
}

/// `S f = (Σ_κ (𝓔_κ f)²)^{1/2}` pointwise.
pub fn square_function(dec: &Decomposition) -> Result<GridFunction> {
    Ok(square_of(&dec.grid, &block_functions(dec)?))
}

/// `‖S f‖_p / ‖E_k f‖_p` with `S` summed over `κ ≤ k`.
pub fn lp_equivalence(f: &GridFunction, p: f64, k: &MultiIndex, l: &DegreeVector) -> Result<f64> {
    check_open_p(p)?;
    let t = Transform::new(f.grid(), l)?;
    let dec = t.analyze(f, &IndexSet::Box(k.clone()))?;
    let blocks = block_functions(&dec)?;
    let ek = sum_of(f.grid(), &blocks, |_| 1.0);
    Ok(square_of(f.grid(), &blocks).lp_norm(p)? / ek.lp_norm(p)?)
}

/// Signs `σ_κ` attached to the blocks of a sign series.
#[derive(Debug, Clone, PartialEq)]
pub enum SignFamily {
    /// `σ_κ = ∏_j σ^j_{κ_j}`; `axes[j][k]` is `σ^j_k`.
    Product(Vec<Vec<i8>>),
    /// Arbitrary per-block signs; outside the hypotheses of the sign theorem.
    Arbitrary(BTreeMap<MultiIndex, i8>),
}

impl SignFamily {
    pub fn product(axes: Vec<Vec<i8>>) -> Result<Self> {
        if axes.iter().flatten().any(|&s| s != 1 && s != -1) {
            return invalid("signs must be ±1");
        }
        Ok(Self::Product(axes))
    }

    pub fn arbitrary(signs: BTreeMap<MultiIndex, i8>) -> Result<Self> {
        if signs.values().any(|&s| s != 1 && s != -1) {
            return invalid("signs must be ±1");
        }
        Ok(Self::Arbitrary(signs))
    }

    /// All `+1` on the box `k`.
    pub fn ones(k: &MultiIndex) -> Self {
        Self::Product(k.as_slice().iter().map(|&kj| vec![1; kj as usize + 1]).collect())
    }

    /// Independent fair signs per axis and level, covering the box `k`.
    pub fn random<R: Rng + ?Sized>(k: &MultiIndex, rng: &mut R) -> Self {
        Self::Product(
            k.as_slice()
                .iter()
                .map(|&kj| (0..=kj).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
                .collect(),
        )
    }

    pub fn is_product_form(&self) -> bool {
        matches!(self, Self::Product(_))
    }

    pub fn sign(&self, kappa: &MultiIndex) -> Result<f64> {
        match self {
            Self::Product(axes) => {
                if axes.len() != kappa.dim() {
                    return invalid("sign family dimension differs");
                }
                let mut s = 1i8;
                for (j, a) in axes.iter().enumerate() {
                    let k = kappa.get(j) as usize;
                    s *= *a
                        .get(k)
                        .ok_or_else(|| Error::InvalidArgument(format!("no sign for level {k} on axis {j}")))?;
                }
                Ok(s as f64)
            }
            Self::Arbitrary(map) => map
                .get(kappa)
                .map(|&s| s as f64)
                .ok_or_else(|| Error::InvalidArgument(format!("no sign for block {kappa}"))),
        }
    }
}

/// `‖Σ_{κ≤k} σ_κ 𝓔_κ f‖_p`.
pub fn sign_series(f: &GridFunction, signs: &SignFamily, p: f64, k: &MultiIndex, l: &DegreeVector) -> Result<f64> {
    check_open_p(p)?;
    let dec = Transform::new(f.grid(), l)?.analyze(f, &IndexSet::Box(k.clone()))?;
    let blocks = block_functions(&dec)?;
    let mut out = GridFunction::zeros(f.grid());
    for (kk, g) in &blocks {
        out.axpy(signs.sign(kk)?, g)?;
    }
    out.lp_norm(p)
}

/// `ω_κ(t) = sign sin(2^{κ+1} π t)` per axis, multiplied over axes.
///
/// Evaluated from the dyadic position of `t`; a coordinate on a breakpoint
/// of level `κ_j + 1` is a boundary error.
pub fn rademacher_eval(kappa: &MultiIndex, t: &[f64]) -> Result<i8> {
    if kappa.dim() != t.len() {
        return invalid("level and point dimensions differ");
    }
    let mut s = 1i8;
    for (j, &x) in t.iter().enumerate() {
        if !(x > 0.0 && x < 1.0) {
            return invalid(format!("coordinate {x} outside (0,1)"));
        }
        let k = kappa.get(j);
        if k > 60 {
            return invalid("level too fine");
        }
        // Exact: scaling by a power of two and flooring are exact in binary.
        let u = x * (1u64 << (k + 1)) as f64;
        if u.fract() == 0.0 {
            return Err(Error::Boundary(format!("t_{j} = {x} at level {}", k + 1)));
        }
        if (u.floor() as u64) % 2 == 1 {
            s = -s;
        }
    }
    Ok(s)
}

/// The three sides of the Khintchine comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Khintchine {
    /// `(Σ a_κ²)^{1/2}`.
    pub l2: f64,
    /// `‖Σ a_κ ω_κ‖_{L_p(I^d)}`, exact.
    pub lp: f64,
}

impl Khintchine {
    pub fn ratio(&self) -> f64 {
        self.lp / self.l2
    }
}

/// Dense matrix of `ω_κ` on the level-`k+1` cells of one axis.
struct RademacherAxis {
    k: u32,
}

impl LineOperator for RademacherAxis {
    fn input_len(&self) -> usize {
        self.k as usize + 1
    }

    fn output_len(&self) -> usize {
        1 << (self.k + 1)
    }

    fn apply(&self, input: &[f64], output: &mut [f64]) {
        for (m, o) in output.iter_mut().enumerate() {
            *o = input
                .iter()
                .enumerate()
                .map(|(kappa, a)| if (m >> (self.k as usize - kappa)) % 2 == 0 { *a } else { -*a })
                .sum();
        }
    }
}

/// Exact values of `Σ_{κ≤k} a_κ ω_κ` on the level-`(k+e)` cells (row-major),
/// `a` in lexicographic box order.
pub fn rademacher_sum_cells(a: &[f64], k: &MultiIndex) -> Result<Vec<f64>> {
    let n: usize = k.as_slice().iter().map(|&x| x as usize + 1).product();
    if a.len() != n {
        return invalid(format!("{} coefficients for a box of {n}", a.len()));
    }
    if k.max() > 24 {
        return invalid("level too fine for exact enumeration");
    }
    let mut shape: Vec<usize> = k.as_slice().iter().map(|&x| x as usize + 1).collect();
    let mut data = a.to_vec();
    for j in 0..k.dim() {
        let op = RademacherAxis { k: k.get(j) };
        data = contract(&data, &shape, j, &op);
        shape[j] = op.output_len();
    }
    Ok(data)
}

/// `‖a‖_2` against `‖Σ a_κ ω_κ‖_p`.
pub fn khintchine_check(a: &[f64], k: &MultiIndex, p: f64) -> Result<Khintchine> {
    check_p(p)?;
    let cells = rademacher_sum_cells(a, k)?;
    let m = cells.len() as f64;
    let lp = (cells.iter().map(|v| v.abs().powf(p)).sum::<f64>() / m).powf(1.0 / p);
    let l2 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(Khintchine { l2, lp })
}

/// Running minimum, maximum and mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

impl Stats {
    pub fn from_values(v: impl IntoIterator<Item = f64>) -> Self {
        let mut s = Stats {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            mean: 0.0,
            count: 0,
        };
        let mut sum = 0.0;
        for x in v {
            s.min = s.min.min(x);
            s.max = s.max.max(x);
            sum += x;
            s.count += 1;
        }
        s.mean = if s.count > 0 { sum / s.count as f64 } else { f64::NAN };
        s
    }

    /// `max / min`.
    pub fn band(&self) -> f64 {
        self.max / self.min
    }
}

/// Settings of a Littlewood–Paley sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSweepConfig {
    pub degree: DegreeVector,
    pub level: u32,
    pub ps: Vec<f64>,
    pub trials: usize,
    pub sign_draws: usize,
    pub seed: u64,
}

/// Per-trial measurements for one `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub p: f64,
    pub trial: usize,
    pub ensemble: Ensemble,
    /// `‖S f‖_p / ‖f‖_p`.
    pub square_ratio: f64,
    /// `‖f‖_p / (Σ ‖𝓔_κ f‖_p^{p*})^{1/p*}`.
    pub pstar_ratio: f64,
    /// Extremes of `‖Σ σ_κ 𝓔_κ f‖_p / ‖f‖_p` over the sign draws.
    pub sign_min: f64,
    pub sign_max: f64,
}

/// Aggregated sweep statistics for one `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct LPReport {
    pub p: f64,
    pub level: u32,
    pub ratio_lower: Stats,
    pub ratio_pstar: Stats,
    pub sign_ratio: Stats,
    /// Set when `p` is outside `(1,∞)`; square-function and sign ratios
    /// are still measured but carry no guarantee.
    pub outside_hypotheses: bool,
}

/// Runs the sweep; trials are independent and seeded by index.
pub fn run_lp_sweep(cfg: &LpSweepConfig) -> Result<(Vec<LPReport>, Vec<TrialRecord>)> {
    for &p in &cfg.ps {
        check_p(p)?;
    }
    if cfg.trials == 0 {
        return invalid("at least one trial is required");
    }
    let grid = Grid::for_degree(cfg.level, &cfg.degree, None)?;
    let t = Transform::new(&grid, &cfg.degree)?;
    let top = MultiIndex::uniform(cfg.degree.dim(), cfg.level);
    let indices = enum_box(&top);
    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<TrialRecord>> {
            let mut rng = trial_rng(cfg.seed, trial as u64);
            let ensemble = Ensemble::for_trial(trial);
            let f = random_detail_fn(&t, &top, ensemble, &mut rng)?;
            let blocks: Vec<(MultiIndex, GridFunction)> = indices
                .iter()
                .map(|k| Ok((k.clone(), t.detail(&f, k)?)))
                .collect::<Result<_>>()?;
            let signs: Vec<SignFamily> = (0..cfg.sign_draws).map(|_| SignFamily::random(&top, &mut rng)).collect();
            let sq = square_of(&grid, &blocks);
            let mut smin = vec![f64::INFINITY; cfg.ps.len()];
            let mut smax = vec![f64::NEG_INFINITY; cfg.ps.len()];
            let norms = cfg.ps.iter().map(|&p| f.lp_norm(p)).collect::<Result<Vec<_>>>()?;
            for s in &signs {
                let g = sum_of(&grid, &blocks, |k| s.sign(k).expect("box covered"));
                for (i, &p) in cfg.ps.iter().enumerate() {
                    let r = g.lp_norm(p)? / norms[i];
                    smin[i] = smin[i].min(r);
                    smax[i] = smax[i].max(r);
                }
            }
            cfg.ps
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    let norm = norms[i];
                    let ps = p_star(p);
                    let pstar_sum: f64 = blocks
                        .iter()
                        .map(|(_, g)| g.lp_norm(p).map(|n| n.powf(ps)))
                        .sum::<Result<f64>>()?;
                    Ok(TrialRecord {
                        p,
                        trial,
                        ensemble,
                        square_ratio: sq.lp_norm(p)? / norm,
                        pstar_ratio: norm / pstar_sum.powf(1.0 / ps),
                        sign_min: smin[i],
                        sign_max: smax[i],
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let reports = cfg
        .ps
        .iter()
        .map(|&p| {
            let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.p == p).collect();
            LPReport {
                p,
                level: cfg.level,
                ratio_lower: Stats::from_values(rows.iter().map(|r| r.square_ratio)),
                ratio_pstar: Stats::from_values(rows.iter().map(|r| r.pstar_ratio)),
                sign_ratio: Stats::from_values(rows.iter().flat_map(|r| [r.sign_min, r.sign_max])),
                outside_hypotheses: p <= 1.0,
            }
        })
        .collect();
    Ok((reports, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rademacher_examples() {
        assert_eq!(rademacher_eval(&MultiIndex::new(vec![0]), &[0.25]).unwrap(), 1);
        assert_eq!(rademacher_eval(&MultiIndex::new(vec![1]), &[0.3]).unwrap(), -1);
        assert_eq!(rademacher_eval(&MultiIndex::new(vec![1, 0]), &[0.3, 0.7]).unwrap(), 1);
        assert!(matches!(
            rademacher_eval(&MultiIndex::new(vec![1]), &[0.25]),
            Err(Error::Boundary(_))
        ));
        assert!(rademacher_eval(&MultiIndex::new(vec![1]), &[1.0]).is_err());
    }

    #[test]
    fn khintchine_examples() {
        let k = MultiIndex::new(vec![1]);
        let r = khintchine_check(&[1.0, 1.0], &k, 4.0).unwrap();
        assert_abs_diff_eq!(r.lp, 8f64.powf(0.25), epsilon = 1e-14);
        let r = khintchine_check(&[0.0, -3.0], &k, 1.5).unwrap();
        assert_abs_diff_eq!(r.lp, 3.0, epsilon = 1e-14);
        let r = khintchine_check(&[0.3, -1.0, 2.0, 0.5], &MultiIndex::new(vec![1, 1]), 2.0).unwrap();
        assert_abs_diff_eq!(r.lp, r.l2, epsilon = 1e-14);
        assert!(khintchine_check(&[1.0], &k, 2.0).is_err());
        assert!(khintchine_check(&[1.0, 1.0], &k, 0.5).is_err());
    }

    #[test]
    fn sign_family_rules() {
        let s = SignFamily::product(vec![vec![1, -1], vec![-1, -1, 1]]).unwrap();
        assert_eq!(s.sign(&MultiIndex::new(vec![1, 2])).unwrap(), -1.0);
        assert_eq!(s.sign(&MultiIndex::new(vec![1, 0])).unwrap(), 1.0);
        assert!(s.sign(&MultiIndex::new(vec![2, 0])).is_err());
        assert!(SignFamily::product(vec![vec![0]]).is_err());
        assert!(s.is_product_form());
        let a = SignFamily::arbitrary(BTreeMap::from([(MultiIndex::new(vec![0]), -1)])).unwrap();
        assert!(!a.is_product_form());
    }

    #[test]
    fn half_indicator_square_function() {
        let l = DegreeVector::uniform(1, 0);
        let grid = Grid::for_degree(3, &l, None).unwrap();
        let f = GridFunction::from_fn(&grid, |x| if x[0] < 0.5 { 1.0 } else { 0.0 });
        let dec = Transform::new(&grid, &l)
            .unwrap()
            .analyze(&f, &IndexSet::Box(MultiIndex::new(vec![3])))
            .unwrap();
        let s = square_function(&dec).unwrap();
        assert!(s.values().iter().all(|v| (v - 0.5f64.sqrt()).abs() < 1e-14));
        let k = MultiIndex::new(vec![1]);
        let signs = SignFamily::product(vec![vec![1, -1]]).unwrap();
        // σ = (+,-) flips the detail: 1 on (0,1/2), 0 on (1/2,1).
        let v = sign_series(&f, &signs, 3.0, &k, &l).unwrap();
        assert_abs_diff_eq!(v, 0.5f64.powf(1.0 / 3.0), epsilon = 1e-14);
        assert!(lp_equivalence(&f, 1.0, &k, &l).is_err());
    }
}
