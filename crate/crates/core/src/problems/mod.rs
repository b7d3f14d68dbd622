//! Concrete fixed-point problems.

mod cavity;
mod kappa;
mod mac;
mod richardson;
mod toy;

use std::fmt;
use std::str::FromStr;

pub use cavity::CavityProblem;
pub use kappa::{kappa_estimate, kappa_from_residuals, MIN_KAPPA_SAMPLES};
pub use cavity::{CAVITY_MAX_N, CAVITY_MIN_N};
pub use mac::{assemble_oseen, assemble_stokes, stokes_matrix, MacGrid, OseenSystem, StokesOperator};
pub use richardson::RichardsonProblem;
pub use toy::QuadraticToy;

use crate::error::{Error, Result};
use crate::inner::InnerProduct;

/// Named norms a problem can offer for the optimization problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    L2,
    H1,
    VPrime,
}

impl NormKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NormKind::L2 => "l2",
            NormKind::H1 => "h1",
            NormKind::VPrime => "vprime",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l2" => Ok(NormKind::L2),
            "h1" => Ok(NormKind::H1),
            "vprime" | "v'" => Ok(NormKind::VPrime),
            other => Err(Error::InvalidArgument(format!("unknown norm '{other}'"))),
        }
    }
}

/// A fixed-point map `q` together with the residual `g` whose zeros are its
/// fixed points, and the norms measuring the ranges of both.
pub trait FixedPointProblem: Sync {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    fn initial_guess(&self) -> Vec<f64>;

    /// One application of the fixed-point map.
    fn q_apply(&self, u: &[f64]) -> Result<Vec<f64>>;

    /// Nonlinear residual.
    fn g_apply(&self, u: &[f64]) -> Result<Vec<f64>>;

    /// Norm of the range of `q` (used by AA).
    fn q_norm(&self) -> &InnerProduct;

    /// Norm of the range of `g` (monitoring, AAg, NGMRES).
    fn g_norm(&self) -> &InnerProduct;

    /// Resolves a named norm, if the problem supports it.
    fn norm(&self, kind: NormKind) -> Option<InnerProduct> {
        match kind {
            NormKind::L2 => Some(InnerProduct::euclidean()),
            _ => None,
        }
    }

    /// Discrete divergence of a velocity iterate, where that makes sense.
    fn divergence_defect(&self, _u: &[f64]) -> Option<f64> {
        None
    }

    /// Viscosity `ν`, for problems that have one.
    fn viscosity(&self) -> Option<f64> {
        None
    }
}
