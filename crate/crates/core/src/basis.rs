//! Orthonormal scaling and multiwavelet bases.
//!
//! The 1D wavelets of degree `l` span the orthogonal complement of
//! polynomials of degree `≤ l` on `(0,1)` inside piecewise polynomials on the
//! two halves. They are stored in half-cell Legendre coordinates: coordinate
//! `(h, m)` is the function `√2 L_m(2x - h)` on the half `h ∈ {0,1}`.

use crate::dyadic::{DyadicCube, MultiIndex};
use crate::quadrature::{legendre_eval, DegreeVector, GaussRule, LocalPoly};

/// Polynomial on `(0,1)` in monomial coefficients (lowest degree first).
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut c = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly { coeffs: c }
    }

    /// `∫_0^1 p(x) dx`.
    pub fn integral(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c / (i as f64 + 1.0))
            .sum()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Orthonormal shifted Legendre polynomials of degree `0..=l`, from the explicit
/// sum `√(2k+1) Σ_i (-1)^{k+i} C(k,i) C(k+i,i) x^i`.
pub fn scaling_basis_1d(l: usize) -> Vec<Poly> {
    (0..=l)
        .map(|k| {
            let norm = (2.0 * k as f64 + 1.0).sqrt();
            let coeffs = (0..=k)
                .map(|i| {
                    let sign = if (k + i) % 2 == 0 { 1.0 } else { -1.0 };
                    norm * sign * binomial(k, i) * binomial(k + i, i)
                })
                .collect();
            Poly { coeffs }
        })
        .collect()
}

/// Orthonormal basis of the degree-`l` wavelet space on `(0,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis1D {
    degree: usize,
    /// One vector of `2(l+1)` half-cell coordinates per function.
    coords: Vec<Vec<f64>>,
}

impl WaveletBasis1D {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Half-cell Legendre coordinates of function `i`, ordered `(h, m)` with `h` slowest.
    pub fn coords(&self, i: usize) -> &[f64] {
        &self.coords[i]
    }

    /// Function `i` as polynomials on `(0,1/2)` and `(1/2,1)`.
    pub fn halves(&self, i: usize) -> [LocalPoly; 2] {
        let n = self.degree + 1;
        let half = |h: usize| LocalPoly {
            cube: DyadicCube::new(MultiIndex::new(vec![1]), vec![h as i64]).expect("valid cube"),
            degree: DegreeVector::uniform(1, self.degree),
            coeffs: self.coords[i][h * n..(h + 1) * n].to_vec(),
        };
        [half(0), half(1)]
    }

    /// Value of function `i` at `x`; zero outside `(0,1)` and at `1/2`.
    pub fn eval(&self, i: usize, x: f64) -> f64 {
        if !(x > 0.0 && x < 1.0) || x == 0.5 {
            return 0.0;
        }
        let h = usize::from(x > 0.5);
        let y = 2.0 * x - h as f64;
        self.eval_half(i, h, y)
    }

    /// Value on half `h` at local coordinate `y ∈ (0,1)`.
    pub fn eval_half(&self, i: usize, h: usize, y: f64) -> f64 {
        let n = self.degree + 1;
        let c = &self.coords[i][h * n..(h + 1) * n];
        std::f64::consts::SQRT_2
            * c.iter()
                .enumerate()
                .map(|(m, a)| a * legendre_eval(m, y))
                .sum::<f64>()
    }
}

/// Coordinates of `L_k` on `(0,1)` in the half-cell basis.
fn coarse_in_fine(l: usize, k: usize) -> Vec<f64> {
    let n = l + 1;
    let rule = GaussRule::new(l + 2).expect("positive node count");
    let mut v = vec![0.0; 2 * n];
    for h in 0..2 {
        for m in 0..n {
            // ∫_{half h} L_k(x) √2 L_m(2x-h) dx = (1/√2) ∫_0^1 L_k((y+h)/2) L_m(y) dy.
            let s: f64 = rule
                .nodes()
                .iter()
                .zip(rule.weights())
                .map(|(&y, w)| w * legendre_eval(k, 0.5 * (y + h as f64)) * legendre_eval(m, y))
                .sum();
            v[h * n + m] = s / std::f64::consts::SQRT_2;
        }
    }
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(a, b)| *a += c * b);
}

/// Deterministic orthonormal wavelet basis of degree `l`.
///
/// Starting vectors are the right-half Legendre coordinates `e_{(1,m)}`;
/// each is projected off the coarse polynomials and the previously accepted
/// wavelets (two passes), normalized, and signed so that its last coordinate
/// of magnitude above `1e-12` is positive.
pub fn wavelet_basis_1d(l: usize) -> WaveletBasis1D {
    let n = l + 1;
    let coarse: Vec<Vec<f64>> = (0..n).map(|k| coarse_in_fine(l, k)).collect();
    let mut coords: Vec<Vec<f64>> = Vec::with_capacity(n);
    for m in 0..n {
        let mut v = vec![0.0; 2 * n];
        v[n + m] = 1.0;
        for _ in 0..2 {
            for q in coarse.iter().chain(coords.iter()) {
                let c = dot(q, &v);
                axpy(&mut v, -c, q);
            }
        }
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        if let Some(last) = v.iter().rev().find(|x| x.abs() > 1e-12) {
            if *last < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        coords.push(v);
    }
    WaveletBasis1D { degree: l, coords }
}

/// One factor of a tensor detail function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    /// Legendre polynomial of the given degree on `(0,1)`.
    Scaling(usize),
    /// Wavelet of the given index.
    Wavelet(usize),
}

/// Tensor-product basis of the detail space with direction set `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailBasis {
    /// Bit mask of the axes in `J`.
    pub directions: u32,
    pub degree: DegreeVector,
    wavelets: Vec<WaveletBasis1D>,
}

impl DetailBasis {
    pub fn len(&self) -> usize {
        self.degree.block_size()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.degree.dim()
    }

    /// Factors of function `n` (row-major over `Z_+^d(l)`).
    pub fn factors(&self, n: usize) -> Vec<Factor> {
        let dim = self.dim();
        let mut out = vec![Factor::Scaling(0); dim];
        let mut r = n;
        for j in (0..dim).rev() {
            let b = self.degree.get(j) + 1;
            let i = r % b;
            r /= b;
            out[j] = if self.directions >> j & 1 == 1 {
                Factor::Wavelet(i)
            } else {
                Factor::Scaling(i)
            };
        }
        out
    }

    /// Value of function `n` at `x ∈ R^d`; zero outside `(0,1)^d`.
    pub fn eval(&self, n: usize, x: &[f64]) -> f64 {
        self.factors(n)
            .iter()
            .enumerate()
            .map(|(j, f)| {
                let t = x[j];
                match *f {
                    Factor::Scaling(m) if t > 0.0 && t < 1.0 => legendre_eval(m, t),
                    Factor::Scaling(_) => 0.0,
                    Factor::Wavelet(i) => self.wavelets[j].eval(i, t),
                }
            })
            .product()
    }
}

/// Detail basis for direction mask `directions` (the empty mask gives the root scaling basis).
pub fn detail_basis(directions: u32, l: &DegreeVector) -> DetailBasis {
    let wavelets = l.as_slice().iter().map(|&lj| wavelet_basis_1d(lj)).collect();
    DetailBasis {
        directions,
        degree: l.clone(),
        wavelets,
    }
}

/// `dim 𝔓_κ = ∏(l_j+1) · 2^{(κ - χ_{s(κ)}, e)}`.
pub fn detail_dim(kappa: &MultiIndex, l: &DegreeVector) -> usize {
    l.block_size() << kappa.minus_support().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gram_1d(fs: &[&dyn Fn(f64) -> f64]) -> Vec<Vec<f64>> {
        // Composite Gauss on the two halves is exact for piecewise polynomials.
        let rule = GaussRule::new(8).unwrap();
        let mut g = vec![vec![0.0; fs.len()]; fs.len()];
        for h in 0..2 {
            for (y, w) in rule.nodes().iter().zip(rule.weights()) {
                let x = 0.5 * (y + h as f64);
                for a in 0..fs.len() {
                    for b in 0..fs.len() {
                        g[a][b] += 0.5 * w * fs[a](x) * fs[b](x);
                    }
                }
            }
        }
        g
    }

    #[test]
    fn scaling_basis_examples() {
        let b = scaling_basis_1d(1);
        assert_eq!(b[0].coeffs, vec![1.0]);
        assert_abs_diff_eq!(b[1].coeffs[0], -3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(b[1].coeffs[1], 2.0 * 3f64.sqrt(), epsilon = 1e-15);
        let b = scaling_basis_1d(5);
        for i in 0..=5 {
            for j in 0..=5 {
                let ip = b[i].mul(&b[j]).integral();
                assert_abs_diff_eq!(ip, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-10);
            }
            assert_abs_diff_eq!(b[i].eval(0.3), legendre_eval(i, 0.3), epsilon = 1e-12);
        }
    }

    #[test]
    fn haar_is_the_degree_zero_wavelet() {
        let w = wavelet_basis_1d(0);
        assert_eq!(w.len(), 1);
        assert_abs_diff_eq!(w.eval(0, 0.2), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.eval(0, 0.8), 1.0, epsilon = 1e-15);
        assert_eq!(w.eval(0, 1.2), 0.0);
        let [left, right] = w.halves(0);
        assert_abs_diff_eq!(left.eval(&[0.25]), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(right.eval(&[0.75]), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn wavelets_complete_the_scaling_space() {
        for l in 0..=4 {
            let w = wavelet_basis_1d(l);
            let mut fs: Vec<Box<dyn Fn(f64) -> f64>> = Vec::new();
            for k in 0..=l {
                fs.push(Box::new(move |x| legendre_eval(k, x)));
            }
            for i in 0..=l {
                let w = w.clone();
                fs.push(Box::new(move |x| w.eval(i, x)));
            }
            let refs: Vec<&dyn Fn(f64) -> f64> = fs.iter().map(|b| b.as_ref()).collect();
            let g = gram_1d(&refs);
            for a in 0..refs.len() {
                for b in 0..refs.len() {
                    assert_abs_diff_eq!(g[a][b], if a == b { 1.0 } else { 0.0 }, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn degree_one_wavelets_have_two_vanishing_moments() {
        let w = wavelet_basis_1d(1);
        let rule = GaussRule::new(4).unwrap();
        for i in 0..2 {
            let (mut m0, mut m1) = (0.0, 0.0);
            for h in 0..2 {
                for (y, wt) in rule.nodes().iter().zip(rule.weights()) {
                    let x = 0.5 * (y + h as f64);
                    m0 += 0.5 * wt * w.eval(i, x);
                    m1 += 0.5 * wt * x * w.eval(i, x);
                }
            }
            assert_abs_diff_eq!(m0, 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(m1, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn detail_basis_counts_and_factors() {
        let b = detail_basis(0b1, &DegreeVector::uniform(1, 0));
        assert_eq!(b.len(), 1);
        assert_abs_diff_eq!(b.eval(0, &[0.1]), -1.0, epsilon = 1e-15);
        let b = detail_basis(0b01, &DegreeVector::uniform(2, 0));
        assert_eq!(b.len(), 1);
        assert_eq!(b.factors(0), vec![Factor::Wavelet(0), Factor::Scaling(0)]);
        let b = detail_basis(0b11, &DegreeVector::uniform(2, 1));
        assert_eq!(b.len(), 4);
        assert_eq!(b.factors(2), vec![Factor::Wavelet(1), Factor::Wavelet(0)]);
        let b = detail_basis(0b10, &DegreeVector::new(vec![1, 2]).unwrap());
        assert_eq!(b.factors(5), vec![Factor::Scaling(1), Factor::Wavelet(2)]);
        assert_eq!(b.eval(0, &[0.5, 1.5]), 0.0);
    }

    #[test]
    fn detail_dims() {
        let l1 = DegreeVector::uniform(1, 1);
        assert_eq!(detail_dim(&MultiIndex::new(vec![3]), &l1), 8);
        assert_eq!(detail_dim(&MultiIndex::zeros(2), &DegreeVector::uniform(2, 2)), 9);
        assert_eq!(
            detail_dim(&MultiIndex::new(vec![2, 1]), &DegreeVector::uniform(2, 0)),
            2
        );
    }
}
