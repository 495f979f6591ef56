//! Multi-indices, dyadic cubes and the index sets built from them.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{invalid, Result};

/// A level vector `κ ∈ Z_+^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn uniform(dim: usize, k: u32) -> Self {
        Self(vec![k; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, axis: usize) -> u32 {
        self.0[axis]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// `(κ, e)`.
    pub fn sum(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn max(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Support `s(κ) = {j : κ_j ≠ 0}` as a bit mask over axes.
    pub fn support(&self) -> u32 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &k)| k != 0)
            .fold(0, |m, (j, _)| m | (1 << j))
    }

    /// `κ - χ_{s(κ)}`: every nonzero entry lowered by one.
    pub fn minus_support(&self) -> Self {
        Self(self.0.iter().map(|&k| k.saturating_sub(1)).collect())
    }

    /// `κ - ε` for a mask `ε ⊆ s(κ)`.
    pub fn minus_mask(&self, mask: u32) -> Self {
        Self(
            self.0
                .iter()
                .enumerate()
                .map(|(j, &k)| if mask >> j & 1 == 1 { k - 1 } else { k })
                .collect(),
        )
    }

    /// `(κ, β)`.
    pub fn dot(&self, beta: &[f64]) -> f64 {
        self.0.iter().zip(beta).map(|(&k, b)| k as f64 * b).sum()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

/// Exact dyadic rational `num / 2^exp`.
#[derive(Debug, Clone, Copy)]
pub struct Dyadic {
    pub num: i64,
    pub exp: u32,
}

impl Dyadic {
    pub fn new(num: i64, exp: u32) -> Self {
        Self { num, exp }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / (1u64 << self.exp) as f64
    }

    fn scaled(self, exp: u32) -> i128 {
        (self.num as i128) << (exp - self.exp)
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Dyadic {}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exp.max(other.exp);
        self.scaled(e).cmp(&other.scaled(e))
    }
}

/// The open box `Q_{κ,ν} = 2^{-κ}ν + 2^{-κ}(0,1)^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    pub level: MultiIndex,
    pub position: Vec<i64>,
}

/// Relation between two dyadic cubes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nesting {
    Disjoint,
    AInsideB,
    BInsideA,
    Equal,
    /// Interiors meet but neither contains the other; only possible for
    /// anisotropic levels (e.g. a horizontal and a vertical strip).
    Crossing,
}

impl DyadicCube {
    pub fn new(level: MultiIndex, position: Vec<i64>) -> Result<Self> {
        if level.dim() != position.len() {
            return invalid("level and position dimensions differ");
        }
        if level.dim() == 0 {
            return invalid("dimension must be positive");
        }
        if level.as_slice().iter().any(|&k| k > 62) {
            return invalid("level too fine for exact arithmetic");
        }
        Ok(Self { level, position })
    }

    /// Isotropic cube at level `k` on every axis.
    pub fn isotropic(k: u32, position: Vec<i64>) -> Result<Self> {
        Self::new(MultiIndex::uniform(position.len(), k), position)
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }

    pub fn lower(&self, axis: usize) -> Dyadic {
        Dyadic::new(self.position[axis], self.level.get(axis))
    }

    pub fn upper(&self, axis: usize) -> Dyadic {
        Dyadic::new(self.position[axis] + 1, self.level.get(axis))
    }

    pub fn side(&self, axis: usize) -> f64 {
        1.0 / (1u64 << self.level.get(axis)) as f64
    }

    pub fn measure(&self) -> f64 {
        (0..self.dim()).map(|j| self.side(j)).product()
    }

    pub fn diam(&self) -> f64 {
        (0..self.dim()).map(|j| self.side(j).powi(2)).sum::<f64>().sqrt()
    }

    /// Whether the cube is one of the cells of `(0,1)^d`.
    pub fn in_unit_cube(&self) -> bool {
        (0..self.dim()).all(|j| {
            let p = self.position[j];
            p >= 0 && p < (1i64 << self.level.get(j))
        })
    }

    /// Whether `x` lies in the open cube.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|j| {
            let y = x[j] * (1u64 << self.level.get(j)) as f64 - self.position[j] as f64;
            y > 0.0 && y < 1.0
        })
    }

    /// The unique ancestor at `level ≤ self.level`.
    pub fn ancestor(&self, level: &MultiIndex) -> Option<Self> {
        if !level.le(&self.level) {
            return None;
        }
        let position = (0..self.dim())
            .map(|j| self.position[j] >> (self.level.get(j) - level.get(j)))
            .collect();
        Some(Self {
            level: level.clone(),
            position,
        })
    }
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.position.iter().map(|p| p.to_string()).collect();
        write!(f, "Q[{}; ({})]", self.level, parts.join(","))
    }
}

/// Exact geometric relation between two cubes of the same dimension.
pub fn nesting(a: &DyadicCube, b: &DyadicCube) -> Nesting {
    assert_eq!(a.dim(), b.dim(), "cube dimensions differ");
    let (mut all_eq, mut a_in, mut b_in) = (true, true, true);
    for j in 0..a.dim() {
        let (ka, kb) = (a.level.get(j), b.level.get(j));
        let (pa, pb) = (a.position[j], b.position[j]);
        // Dyadic intervals on one axis are either nested or disjoint.
        let rel = match ka.cmp(&kb) {
            Ordering::Equal => {
                if pa == pb {
                    Ordering::Equal
                } else {
                    return Nesting::Disjoint;
                }
            }
            Ordering::Greater => {
                if pa >> (ka - kb) == pb {
                    Ordering::Less
                } else {
                    return Nesting::Disjoint;
                }
            }
            Ordering::Less => {
                if pb >> (kb - ka) == pa {
                    Ordering::Greater
                } else {
                    return Nesting::Disjoint;
                }
            }
        };
        match rel {
            Ordering::Equal => {}
            Ordering::Less => {
                all_eq = false;
                b_in = false;
            }
            Ordering::Greater => {
                all_eq = false;
                a_in = false;
            }
        }
    }
    if all_eq {
        Nesting::Equal
    } else if a_in {
        Nesting::AInsideB
    } else if b_in {
        Nesting::BInsideA
    } else {
        Nesting::Crossing
    }
}

/// All `κ ≤ k` in lexicographic order (first axis slowest).
pub fn enum_box(k: &MultiIndex) -> Vec<MultiIndex> {
    let dim = k.dim();
    let mut out = Vec::new();
    let mut cur = vec![0u32; dim];
    loop {
        out.push(MultiIndex(cur.clone()));
        let mut j = dim;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            if cur[j] < k.get(j) {
                cur[j] += 1;
                break;
            }
            cur[j] = 0;
        }
    }
}

/// Parameters of the hyperbolic cross `{κ : (κ,β) ≤ r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossParams {
    pub beta: Vec<f64>,
    pub radius: u32,
}

const CROSS_TOL: f64 = 1e-12;

impl CrossParams {
    pub fn new(beta: Vec<f64>, radius: u32) -> Result<Self> {
        check_weights("beta", &beta)?;
        Ok(Self { beta, radius })
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    pub fn contains(&self, kappa: &MultiIndex) -> bool {
        in_cross(kappa, &self.beta, self.radius as f64)
    }
}

/// `(κ,β) ≤ r` with relative tolerance `1e-12`, ties included.
pub fn in_cross(kappa: &MultiIndex, beta: &[f64], r: f64) -> bool {
    kappa.dot(beta) <= r + CROSS_TOL * r.abs().max(1.0)
}

fn check_weights(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return invalid(format!("{name} must have at least one entry"));
    }
    if v.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
        return invalid(format!("{name} entries must be positive and finite"));
    }
    Ok(())
}

fn cross_bound(beta: &[f64], r: f64) -> MultiIndex {
    MultiIndex(
        beta.iter()
            .map(|&b| ((r + CROSS_TOL * r.max(1.0)) / b).floor().max(0.0) as u32)
            .collect(),
    )
}

/// All `κ` with `(κ,β) ≤ r`, in lexicographic order.
pub fn enum_cross(params: &CrossParams) -> Vec<MultiIndex> {
    cross_real(&params.beta, params.radius as f64)
}

pub(crate) fn cross_real(beta: &[f64], r: f64) -> Vec<MultiIndex> {
    enum_box(&cross_bound(beta, r))
        .into_iter()
        .filter(|k| in_cross(k, beta, r))
        .collect()
}

/// The shell `s - 1 < (κ,β) ≤ s`.
pub fn enum_shell(beta: &[f64], s: u32) -> Result<Vec<MultiIndex>> {
    check_weights("beta", beta)?;
    if s == 0 {
        return invalid("shell index must be at least 1");
    }
    let outer = s as f64;
    let inner = outer - 1.0;
    Ok(cross_real(beta, outer)
        .into_iter()
        .filter(|k| !in_cross(k, beta, inner))
        .collect())
}

/// `𝔪(x) = min_j x_j` with multiplicity `𝔠(x)`.
pub fn min_with_multiplicity(x: &[f64]) -> (f64, usize) {
    let m = x.iter().copied().fold(f64::INFINITY, f64::min);
    let c = x.iter().filter(|&&v| (v - m).abs() <= 1e-12 * m.abs().max(1.0)).count();
    (m, c)
}

/// `𝔐(x) = max_j x_j` with multiplicity `ℭ(x)`.
pub fn max_with_multiplicity(x: &[f64]) -> (f64, usize) {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c = x.iter().filter(|&&v| (v - m).abs() <= 1e-12 * m.abs().max(1.0)).count();
    (m, c)
}

/// `Σ w(κ)` over `(κ,β) > r`, truncated to `(κ,α) ≤ 𝔪(β⁻¹α) r + slack`.
///
/// Meant for weights bounded by `2^{-(κ,α)}`: the dropped terms are then
/// below `2^{-slack}` relative to the leading ones.
pub fn sum_outside_cross(
    beta: &[f64],
    alpha: &[f64],
    r: f64,
    slack: f64,
    mut w: impl FnMut(&MultiIndex) -> f64,
) -> f64 {
    let ratio: Vec<f64> = alpha.iter().zip(beta).map(|(a, b)| a / b).collect();
    let (m, _) = min_with_multiplicity(&ratio);
    let cap = m * r + slack;
    let bound = cross_bound(alpha, cap);
    let mut sum = 0.0;
    for k in enum_box(&bound) {
        if !in_cross(&k, beta, r) && in_cross(&k, alpha, cap) {
            sum += w(&k);
        }
    }
    sum
}

/// One row of the counting table.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingRow {
    pub r: u32,
    /// `Σ_{(κ,β)≤r} 2^{(κ,α)}`.
    pub head_sum: f64,
    /// `2^{𝔐(β⁻¹α) r} r^{ℭ(β⁻¹α)-1}`.
    pub head_model: f64,
    /// `Σ_{(κ,β)>r} 2^{-(κ,α)}`.
    pub tail_sum: f64,
    /// `2^{-𝔪(β⁻¹α) r} r^{𝔠(β⁻¹α)-1}`.
    pub tail_model: f64,
}

impl CountingRow {
    pub fn head_ratio(&self) -> f64 {
        self.head_sum / self.head_model
    }

    pub fn tail_ratio(&self) -> f64 {
        self.tail_sum / self.tail_model
    }
}

/// Exact head and tail sums against their model expressions for `r = 1..=r_max`.
pub fn counting_ratios(beta: &[f64], alpha: &[f64], r_max: u32) -> Result<Vec<CountingRow>> {
    check_weights("beta", beta)?;
    check_weights("alpha", alpha)?;
    if beta.len() != alpha.len() {
        return invalid("alpha and beta dimensions differ");
    }
    let ratio: Vec<f64> = alpha.iter().zip(beta).map(|(a, b)| a / b).collect();
    let (big_m, big_c) = max_with_multiplicity(&ratio);
    let (m, c) = min_with_multiplicity(&ratio);
    let rows = (1..=r_max)
        .map(|r| {
            let rf = r as f64;
            let head_sum = cross_real(beta, rf)
                .iter()
                .map(|k| 2f64.powf(k.dot(alpha)))
                .sum();
            let tail_sum = sum_outside_cross(beta, alpha, rf, 64.0, |k| 2f64.powf(-k.dot(alpha)));
            CountingRow {
                r,
                head_sum,
                head_model: 2f64.powf(big_m * rf) * rf.powi(big_c as i32 - 1),
                tail_sum,
                tail_model: 2f64.powf(-m * rf) * rf.powi(c as i32 - 1),
            }
        })
        .collect();
    Ok(rows)
}
