//! Fixed-point acceleration toolkit: Picard, Anderson acceleration (AA),
//! nonlinear GMRES (NGMRES) and the residual-norm Anderson variant (AAg),
//! with gain / rate diagnostics and an adaptive depth controller.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernel`]: dense and banded LU, unrestarted GMRES, regularized SPD solves.
//! * [`inner`]: Euclidean, matrix-weighted and operator-inverse inner products.
//! * [`accel`]: the accelerated steps, their diagnostics and the driver loop.
//! * [`problems`]: Richardson, a quadratic toy and the 2D lid-driven cavity.

pub mod accel;
pub mod error;
pub mod inner;
pub mod kernel;
pub mod problems;

pub use error::{Error, Result};
