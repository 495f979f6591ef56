//! Dyadic piecewise-polynomial multiresolution analysis on the unit cube `(0,1)^d`.
//!
//! The crate is organised bottom-up:
//!
//! * [`quadrature`] – shifted Legendre polynomials, tensor Gauss rules and the
//!   local orthogonal projection onto polynomials on a dyadic cube.
//! * [`dyadic`] – multi-indices, dyadic cubes with exact geometry, box,
//!   hyperbolic-cross and shell index sets, and the counting sums used by the
//!   width estimates.
//! * [`grid`] – [`GridFunction`], samples on the tensor Gauss grid of the
//!   finest dyadic level; every integral in the crate is a weighted sum over it.
//! * [`basis`] – orthonormal scaling and multiwavelet bases and detail-space
//!   dimensions.
//! * [`projectors`] – level projectors `E_κ`, detail projectors `𝓔_κ` (two
//!   independent routes), analysis/synthesis and axis-wise operators.
//! * [`lp`] – square function, sign series, Rademacher system and
//!   Littlewood–Paley sweeps.
//! * [`cz`] – maximal function, Whitney decomposition and the
//!   Calderón–Zygmund split.
//! * [`smoothness`] – mixed differences, mixed moduli, Hölder/Besov
//!   seminorms and block-decay checks.
//! * [`widths`] – hyperbolic-cross truncation, budget allocation and rate fits.

pub mod basis;
pub mod cz;
pub mod dyadic;
mod error;
pub mod grid;
pub mod lp;
pub mod projectors;
pub mod quadrature;
pub mod sample;
pub mod smoothness;
pub mod widths;

pub use dyadic::{DyadicCube, MultiIndex};
pub use error::{Error, Result};
pub use grid::{Grid, GridFunction};
pub use quadrature::DegreeVector;

/// Crate version, embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
