//! The finest-level tensor Gauss grid and functions sampled on it.
//!
//! Axis `j` carries `N_j = 2^K n_j` points: the `n_j` Gauss nodes of each of
//! the `2^K` finest cells. Points are stored row-major with axis 0 slowest.

use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{DegreeVector, GaussRule};

/// Tensor Gauss grid on `(0,1)^d` at finest dyadic level `K` (same on every axis).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    level: u32,
    rules: Vec<GaussRule>,
    coords: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
    strides: Vec<usize>,
    len: usize,
    point_weights: Vec<f64>,
}

/// Largest supported finest level; keeps `2^K` and cell indices comfortably in range.
pub const MAX_LEVEL: u32 = 24;

impl Grid {
    /// Grid with `nodes_per_axis[j]` Gauss nodes on every finest cell along axis `j`.
    pub fn new(dim: usize, level: u32, nodes_per_axis: &[usize]) -> Result<Arc<Self>> {
        if dim == 0 {
            return invalid("dimension must be positive");
        }
        if nodes_per_axis.len() != dim {
            return invalid(format!(
                "expected {dim} node counts, got {}",
                nodes_per_axis.len()
            ));
        }
        if level > MAX_LEVEL {
            return invalid(format!("level {level} exceeds {MAX_LEVEL}"));
        }
        let rules = nodes_per_axis
            .iter()
            .map(|&n| GaussRule::new(n))
            .collect::<Result<Vec<_>>>()?;
        let cells = 1usize << level;
        let h = 1.0 / cells as f64;
        let mut coords = Vec::with_capacity(dim);
        let mut weights = Vec::with_capacity(dim);
        for rule in &rules {
            let mut c = Vec::with_capacity(cells * rule.len());
            let mut w = Vec::with_capacity(cells * rule.len());
            for cell in 0..cells {
                for (x, wt) in rule.nodes().iter().zip(rule.weights()) {
                    c.push((cell as f64 + x) * h);
                    w.push(wt * h);
                }
            }
            coords.push(c);
            weights.push(w);
        }
        let mut strides = vec![1usize; dim];
        for j in (0..dim - 1).rev() {
            strides[j] = strides[j + 1] * coords[j + 1].len();
        }
        let len = strides[0] * coords[0].len();
        let mut grid = Self {
            level,
            rules,
            coords,
            weights,
            strides,
            len,
            point_weights: Vec::new(),
        };
        let mut w = vec![1.0; len];
        grid.fill_tensor(&mut w, |j, i| grid.weights[j][i]);
        grid.point_weights = w;
        Ok(Arc::new(grid))
    }

    /// Grid whose per-axis node count is `max(2 l_j + 2, min_nodes)`.
    pub fn for_degree(level: u32, degree: &DegreeVector, min_nodes: Option<usize>) -> Result<Arc<Self>> {
        let n: Vec<usize> = degree
            .as_slice()
            .iter()
            .map(|&l| (2 * l + 2).max(min_nodes.unwrap_or(0)))
            .collect();
        Self::new(degree.dim(), level, &n)
    }

    pub fn dim(&self) -> usize {
        self.rules.len()
    }

    /// Finest dyadic level `K`.
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn nodes_per_cell(&self, axis: usize) -> usize {
        self.rules[axis].len()
    }

    pub fn rule(&self, axis: usize) -> &GaussRule {
        &self.rules[axis]
    }

    pub fn axis_len(&self, axis: usize) -> usize {
        self.coords[axis].len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn coords(&self, axis: usize) -> &[f64] {
        &self.coords[axis]
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.coords[axis][i]
    }

    /// 1D quadrature weight of point `i` along `axis` (includes the `2^{-K}` cell length).
    pub fn weight1d(&self, axis: usize, i: usize) -> f64 {
        self.weights[axis][i]
    }

    pub fn weights1d(&self, axis: usize) -> &[f64] {
        &self.weights[axis]
    }

    /// Finest cell containing point `i` along `axis`.
    pub fn cell_of(&self, axis: usize, i: usize) -> usize {
        i / self.rules[axis].len()
    }

    /// Node index within the finest cell.
    pub fn node_of(&self, axis: usize, i: usize) -> usize {
        i % self.rules[axis].len()
    }

    /// Coordinate of point `i` rescaled to the unit interval of its level-`k` ancestor,
    /// computed without cancellation.
    pub fn local_coord(&self, axis: usize, i: usize, k: u32) -> f64 {
        let n = self.rules[axis].len();
        let cell = i / n;
        let t = self.rules[axis].nodes()[i % n];
        let span = 1usize << (self.level - k);
        ((cell % span) as f64 + t) / span as f64
    }

    /// Per-axis indices of a flat point index.
    pub fn unflatten(&self, flat: usize, out: &mut [usize]) {
        let mut r = flat;
        for (j, s) in self.strides.iter().enumerate() {
            out[j] = r / s;
            r %= s;
        }
    }

    /// Tensor quadrature weight of a flat point index.
    pub fn point_weight(&self, flat: usize) -> f64 {
        let mut r = flat;
        let mut w = 1.0;
        for (j, s) in self.strides.iter().enumerate() {
            w *= self.weights[j][r / s];
            r %= s;
        }
        w
    }

    /// All tensor quadrature weights in storage order.
    pub fn point_weights(&self) -> &[f64] {
        &self.point_weights
    }

    fn fill_tensor(&self, out: &mut [f64], factor: impl Fn(usize, usize) -> f64) {
        // Expand axis by axis: block of the trailing axes is repeated.
        let dim = self.dim();
        let mut filled = 1usize;
        out[0] = 1.0;
        for j in (0..dim).rev() {
            let n = self.coords[j].len();
            for i in (0..n).rev() {
                let f = factor(j, i);
                for k in 0..filled {
                    out[i * filled + k] = out[k] * f;
                }
            }
            filled *= n;
        }
    }
}

/// Samples of a function at every point of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            ));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            values,
        })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        let values = (0..grid.len())
            .map(|flat| {
                grid.unflatten(flat, &mut idx);
                for j in 0..dim {
                    x[j] = grid.coord(j, idx[j]);
                }
                f(&x)
            })
            .collect();
        Self {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            invalid("functions live on different grids")
        }
    }

    /// `∫ f g` by quadrature.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        let w = self.grid.point_weights();
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(w)
            .map(|((a, b), w)| a * b * w)
            .sum())
    }

    pub fn integral(&self) -> f64 {
        let w = self.grid.point_weights();
        self.values.iter().zip(w).map(|(a, w)| a * w).sum()
    }

    /// Quadrature `L_p` norm, `1 ≤ p < ∞`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidArgument(format!("p = {p} must lie in [1, ∞)")));
        }
        let w = self.grid.point_weights();
        let s: f64 = if p == 2.0 {
            self.values.iter().zip(w).map(|(a, w)| a * a * w).sum()
        } else if p == 1.0 {
            self.values.iter().zip(w).map(|(a, w)| a.abs() * w).sum()
        } else if p.fract() == 0.0 && p <= 16.0 {
            let n = p as i32;
            self.values.iter().zip(w).map(|(a, w)| a.abs().powi(n) * w).sum()
        } else {
            self.values
                .iter()
                .zip(w)
                .map(|(a, w)| a.abs().powf(p) * w)
                .sum()
        };
        Ok(if p == 1.0 { s } else { s.powf(1.0 / p) })
    }

    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(2.0).expect("p = 2 is valid")
    }

    /// Largest absolute sample (a grid diagnostic, not a true sup norm).
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    /// `self += c · other`.
    pub fn axpy(&mut self, c: f64, other: &Self) -> Result<()> {
        self.check_grid(other)?;
        self.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(a, b)| *a += c * b);
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl Add for &GridFunction {
    type Output = GridFunction;

    fn add(self, rhs: &GridFunction) -> GridFunction {
        let mut out = self.clone();
        out.axpy(1.0, rhs).expect("grids differ");
        out
    }
}

impl Sub for &GridFunction {
    type Output = GridFunction;

    fn sub(self, rhs: &GridFunction) -> GridFunction {
        let mut out = self.clone();
        out.axpy(-1.0, rhs).expect("grids differ");
        out
    }
}

impl Mul<f64> for &GridFunction {
    type Output = GridFunction;

    fn mul(self, c: f64) -> GridFunction {
        let mut out = self.clone();
        out.scale(c);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn layout_is_row_major() {
        let g = Grid::new(2, 1, &[2, 3]).unwrap();
        assert_eq!(g.axis_len(0), 4);
        assert_eq!(g.axis_len(1), 6);
        assert_eq!(g.strides(), &[6, 1]);
        let mut idx = [0; 2];
        g.unflatten(13, &mut idx);
        assert_eq!(idx, [2, 1]);
        assert_eq!(g.cell_of(1, 4), 1);
        assert_eq!(g.node_of(1, 4), 1);
    }

    #[test]
    fn weights_integrate_polynomials() {
        let g = Grid::new(2, 2, &[2, 2]).unwrap();
        let w = g.point_weights();
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        for flat in [0, 7, 31, 63] {
            assert_abs_diff_eq!(w[flat], g.point_weight(flat), epsilon = 1e-16);
        }
        let f = GridFunction::from_fn(&g, |x| x[0] * x[1].powi(3));
        assert_abs_diff_eq!(f.integral(), 1.0 / 8.0, epsilon = 1e-15);
    }

    #[test]
    fn local_coordinates() {
        let g = Grid::new(1, 3, &[1]).unwrap();
        // point 5 is the midpoint of (5/8, 6/8), which is in the level-1 cell (1/2,1).
        assert_abs_diff_eq!(g.coord(0, 5), 11.0 / 16.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.local_coord(0, 5, 1), 3.0 / 8.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.local_coord(0, 5, 3), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g.local_coord(0, 5, 0), 11.0 / 16.0, epsilon = 1e-15);
    }

    #[test]
    fn default_node_counts() {
        let g = Grid::for_degree(2, &DegreeVector::new(vec![0, 2]).unwrap(), None).unwrap();
        assert_eq!(g.nodes_per_cell(0), 2);
        assert_eq!(g.nodes_per_cell(1), 6);
        let g = Grid::for_degree(2, &DegreeVector::uniform(1, 1), Some(7)).unwrap();
        assert_eq!(g.nodes_per_cell(0), 7);
    }

    #[test]
    fn arithmetic_and_mismatch() {
        let g = Grid::new(1, 2, &[2]).unwrap();
        let h = Grid::new(1, 3, &[2]).unwrap();
        let a = GridFunction::from_fn(&g, |x| x[0]);
        let b = GridFunction::from_fn(&g, |_| 1.0);
        let c = &(&a + &b) - &(&a * 2.0);
        assert_abs_diff_eq!(c.integral(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a.inner(&b).unwrap(), 0.5, epsilon = 1e-15);
        assert!(a.inner(&GridFunction::zeros(&h)).is_err());
        assert!(GridFunction::from_values(&g, vec![0.0; 3]).is_err());
        assert!(Grid::new(0, 2, &[]).is_err());
        assert!(Grid::new(1, 2, &[0]).is_err());
    }
}
