//! Shifted Legendre polynomials, Gauss–Legendre rules on `(0,1)` and the
//! local orthogonal projection onto tensor polynomials on a dyadic cube.
//!
//! All polynomial bases are orthonormal in `L_2` of their support; on a cube
//! `Q = 2^{-κ}ν + 2^{-κ}(0,1)^d` the basis function of multi-degree `λ` is
//! `2^{|κ|/2} ∏_j L_{λ_j}(2^{κ_j} x_j - ν_j)`.

use std::f64::consts::PI;
use std::fmt;

use crate::dyadic::DyadicCube;
use crate::error::{invalid, Error, Result};
use crate::grid::GridFunction;

/// Maximal polynomial degree per axis (`l ∈ Z_+^d`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DegreeVector(Vec<usize>);

impl DegreeVector {
    pub fn new(degrees: Vec<usize>) -> Result<Self> {
        if degrees.is_empty() {
            return invalid("degree vector must have at least one axis");
        }
        Ok(Self(degrees))
    }

    /// The same degree on every one of `dim` axes.
    pub fn uniform(dim: usize, degree: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Self(vec![degree; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, axis: usize) -> usize {
        self.0[axis]
    }

    /// Number of tensor Legendre modes, `∏_j (l_j + 1)`.
    pub fn block_size(&self) -> usize {
        self.0.iter().map(|&l| l + 1).product()
    }
}

impl fmt::Display for DegreeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// One-dimensional Gauss–Legendre rule on `(0,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("a Gauss rule needs at least one node");
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        // Roots of P_n on (-1,1) by Newton iteration from Chebyshev-like guesses;
        // only the lower half is computed, the rest follows by symmetry.
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut t = -(PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, t);
                dp = d;
                let step = p / d;
                t -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, t);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - t * t) * dp * dp);
            nodes[i] = 0.5 * (t + 1.0);
            weights[i] = 0.5 * w;
            nodes[n - 1 - i] = 0.5 * (1.0 - t);
            weights[n - 1 - i] = 0.5 * w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.5;
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Highest degree integrated exactly.
    pub fn exactness(&self) -> usize {
        2 * self.len() - 1
    }
}

/// Tensor Gauss rule on `(0,1)^d`: one [`GaussRule`] per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    axes: Vec<GaussRule>,
}

impl QuadratureRule {
    pub fn axes(&self) -> &[GaussRule] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Integrates `f` over `(0,1)^d`.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let dim = self.axes.len();
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        let mut sum = 0.0;
        loop {
            let mut w = 1.0;
            for j in 0..dim {
                x[j] = self.axes[j].nodes[idx[j]];
                w *= self.axes[j].weights[idx[j]];
            }
            sum += w * f(&x);
            if !advance(&mut idx, |j| self.axes[j].len()) {
                return sum;
            }
        }
    }
}

/// Tensor Gauss–Legendre rule with `n_per_axis[j]` nodes on axis `j`.
pub fn gauss_rule(n_per_axis: &[usize]) -> Result<QuadratureRule> {
    if n_per_axis.is_empty() {
        return invalid("quadrature needs at least one axis");
    }
    let axes = n_per_axis
        .iter()
        .map(|&n| GaussRule::new(n))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuadratureRule { axes })
}

fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (t * p1 - p0) / (t * t - 1.0))
}

/// Degree-`k` shifted Legendre polynomial on `(0,1)` with unit `L_2(0,1)` norm.
pub fn legendre_eval(degree: usize, x: f64) -> f64 {
    let t = 2.0 * x - 1.0;
    let mut p0 = 1.0;
    if degree == 0 {
        return 1.0;
    }
    let mut p1 = t;
    for k in 1..degree {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    (2.0 * degree as f64 + 1.0).sqrt() * p1
}

/// Values of the orthonormal shifted Legendre polynomials of degree `0..=max_degree` at `x`.
pub fn legendre_values(max_degree: usize, x: f64, out: &mut [f64]) {
    debug_assert!(out.len() > max_degree);
    let t = 2.0 * x - 1.0;
    let mut p0 = 1.0;
    let mut p1 = t;
    out[0] = 1.0;
    if max_degree >= 1 {
        out[1] = 3f64.sqrt() * t;
    }
    for k in 1..max_degree {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
        out[k + 1] = (2.0 * kf + 3.0).sqrt() * p2;
    }
}

/// Polynomial on a single dyadic cube, stored in the cube's orthonormal tensor
/// Legendre basis. Coefficients are ordered row-major over `λ ∈ Z_+^d(l)`
/// (first axis slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPoly {
    pub cube: DyadicCube,
    pub degree: DegreeVector,
    pub coeffs: Vec<f64>,
}

impl LocalPoly {
    /// Value at `x`; zero outside the open cube.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let dim = self.degree.dim();
        let mut local = vec![0.0; dim];
        let mut scale = 1.0;
        for j in 0..dim {
            let k = self.cube.level.get(j);
            let s = (1u64 << k) as f64;
            let y = s * x[j] - self.cube.position[j] as f64;
            if !(y > 0.0 && y < 1.0) {
                return 0.0;
            }
            local[j] = y;
            scale *= s.sqrt();
        }
        let tables: Vec<Vec<f64>> = (0..dim)
            .map(|j| {
                let l = self.degree.get(j);
                let mut v = vec![0.0; l + 1];
                legendre_values(l, local[j], &mut v);
                v
            })
            .collect();
        let mut lam = vec![0usize; dim];
        let mut sum = 0.0;
        let mut flat = 0;
        loop {
            let mut b = 1.0;
            for j in 0..dim {
                b *= tables[j][lam[j]];
            }
            sum += self.coeffs[flat] * b;
            flat += 1;
            if !advance(&mut lam, |j| self.degree.get(j) + 1) {
                return scale * sum;
            }
        }
    }

    /// `L_2(Q)` norm (coefficients are orthonormal).
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Orthogonal `L_2(Q)` projection of `f` onto polynomials of degree `≤ l` on `cube`.
pub fn local_project(f: &GridFunction, cube: &DyadicCube, l: &DegreeVector) -> Result<LocalPoly> {
    let grid = f.grid();
    let dim = grid.dim();
    if cube.dim() != dim || l.dim() != dim {
        return invalid("cube, degree and grid dimensions differ");
    }
    let finest = grid.level();
    for j in 0..dim {
        let k = cube.level.get(j);
        if k > finest {
            return Err(Error::Domain(cube.to_string()));
        }
        let p = cube.position[j];
        if p < 0 || p >= (1i64 << k) {
            return Err(Error::Domain(cube.to_string()));
        }
        if grid.nodes_per_cell(j) < l.get(j) + 1 {
            return invalid(format!(
                "axis {j}: {} nodes per cell cannot integrate degree {} products exactly",
                grid.nodes_per_cell(j),
                2 * l.get(j)
            ));
        }
    }
    // Per-axis index ranges covering the cube and the basis tables on them.
    let mut ranges = Vec::with_capacity(dim);
    let mut tables: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for j in 0..dim {
        let k = cube.level.get(j);
        let n = grid.nodes_per_cell(j);
        let span = 1usize << (finest - k);
        let first_cell = cube.position[j] as usize * span;
        let start = first_cell * n;
        let len = span * n;
        let lj = l.get(j);
        let s = ((1u64 << k) as f64).sqrt();
        let mut t = vec![0.0; len * (lj + 1)];
        let mut vals = vec![0.0; lj + 1];
        for i in 0..len {
            let y = grid.local_coord(j, start + i, k);
            legendre_values(lj, y, &mut vals);
            let w = grid.weight1d(j, start + i);
            for m in 0..=lj {
                t[i * (lj + 1) + m] = w * s * vals[m];
            }
        }
        ranges.push((start, len));
        tables.push(t);
    }
    let block = l.block_size();
    let mut coeffs = vec![0.0; block];
    let strides = grid.strides();
    let values = f.values();
    let mut idx = vec![0usize; dim];
    let mut lam = vec![0usize; dim];
    loop {
        let mut flat = 0;
        for j in 0..dim {
            flat += (ranges[j].0 + idx[j]) * strides[j];
        }
        let v = values[flat];
        if v != 0.0 {
            lam.iter_mut().for_each(|x| *x = 0);
            let mut c = 0;
            loop {
                let mut b = v;
                for j in 0..dim {
                    let lj = l.get(j);
                    b *= tables[j][idx[j] * (lj + 1) + lam[j]];
                }
                coeffs[c] += b;
                c += 1;
                if !advance(&mut lam, |j| l.get(j) + 1) {
                    break;
                }
            }
        }
        if !advance(&mut idx, |j| ranges[j].1) {
            break;
        }
    }
    Ok(LocalPoly {
        cube: cube.clone(),
        degree: l.clone(),
        coeffs,
    })
}

/// Quadrature approximation of `‖f‖_{L_p((0,1)^d)}`, `1 ≤ p < ∞`.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    f.lp_norm(p)
}

/// Odometer increment of a row-major multi-index (last axis fastest).
/// Returns `false` once every combination has been visited.
pub(crate) fn advance(idx: &mut [usize], len: impl Fn(usize) -> usize) -> bool {
    for j in (0..idx.len()).rev() {
        idx[j] += 1;
        if idx[j] < len(j) {
            return true;
        }
        idx[j] = 0;
    }
    false
}
