//! Dense and banded direct solvers, unrestarted GMRES, and the small
//! regularized SPD solve used for least-squares normal equations.

mod banded;
mod dense;
mod gmres;
mod spd;
pub mod vector;

pub use banded::{BandedLu, BandedMatrix};
pub use dense::{DenseLu, DenseMatrix, PIVOT_REL_TOL};
pub use gmres::{gmres, GmresOutcome};
pub use spd::{pivoted_cholesky, solve_spd_regularized, SpdSolution};

use crate::error::Result;

/// An LU factorization, immutable once built.
#[derive(Debug, Clone)]
pub enum Factorization {
    DenseLu(DenseLu),
    BandedLu(BandedLu),
}

impl Factorization {
    pub fn dim(&self) -> usize {
        match self {
            Factorization::DenseLu(f) => f.dim(),
            Factorization::BandedLu(f) => f.dim(),
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Factorization::DenseLu(f) => f.solve(rhs),
            Factorization::BandedLu(f) => f.solve(rhs),
        }
    }
}

/// Matrices that can be LU-factored.
pub trait Factorize {
    fn lu(&self) -> Result<Factorization>;
}

impl Factorize for DenseMatrix {
    fn lu(&self) -> Result<Factorization> {
        DenseLu::factor(self).map(Factorization::DenseLu)
    }
}

impl Factorize for BandedMatrix {
    fn lu(&self) -> Result<Factorization> {
        BandedLu::factor(self).map(Factorization::BandedLu)
    }
}

pub fn lu_factor<M: Factorize + ?Sized>(matrix: &M) -> Result<Factorization> {
    matrix.lu()
}

pub fn lu_solve(fact: &Factorization, rhs: &[f64]) -> Result<Vec<f64>> {
    fact.solve(rhs)
}
