use std::sync::Arc;

use super::mac::{assemble_oseen, assemble_stokes, MacGrid, StokesOperator};
use super::NormKind;
use crate::error::{check_len, Error, Result};
use crate::inner::{InnerProduct, WeightMatrix};

/// Accepted cells per side.
pub const CAVITY_MIN_N: usize = 8;
pub const CAVITY_MAX_N: usize = 64;

/// Steady 2D lid-driven cavity on a MAC grid with the Picard (Oseen) map.
///
/// States are full saddle vectors whose pressure block is kept at zero.
/// `q_norm` is the velocity `H¹₀` seminorm, `g_norm` the dual norm through
/// the unit-viscosity Stokes operator restricted to velocities.
#[derive(Debug, Clone)]
pub struct CavityProblem {
    grid: MacGrid,
    re: f64,
    nu: f64,
    stokes_unit: StokesOperator,
    stiffness: Arc<WeightMatrix>,
    lid_rhs: Vec<f64>,
    h1: InnerProduct,
    vprime: InnerProduct,
}

impl CavityProblem {
    pub fn new(n: usize, re: f64) -> Result<Self> {
        if !(CAVITY_MIN_N..=CAVITY_MAX_N).contains(&n) {
            return Err(Error::InvalidArgument(format!(
                "cavity needs {CAVITY_MIN_N} <= N <= {CAVITY_MAX_N}, got {n}"
            )));
        }
        if !(re.is_finite() && re > 0.0) {
            return Err(Error::InvalidArgument(format!("Re must be positive, got {re}")));
        }
        let grid = MacGrid::new(n)?;
        let nu = 1.0 / re;
        let stokes_unit = assemble_stokes(&grid, 1.0)?;
        let mask = grid.velocity_mask();
        let stiffness = Arc::new(WeightMatrix::Banded(grid.stiffness()));
        let h1 = InnerProduct::matrix_weighted((*stiffness).clone())
            .with_mask(mask.clone())
            .named("h1");
        let vprime = InnerProduct::operator_inverse(Arc::clone(&stokes_unit.factorization))
            .with_mask(mask)
            .with_energy((*stiffness).clone())
            .named("vprime");
        let lid_rhs = grid.lid_rhs(nu);
        Ok(Self {
            grid,
            re,
            nu,
            stokes_unit,
            stiffness,
            lid_rhs,
            h1,
            vprime,
        })
    }

    pub fn grid(&self) -> &MacGrid {
        &self.grid
    }

    pub fn reynolds(&self) -> f64 {
        self.re
    }

    pub fn stokes(&self) -> &StokesOperator {
        &self.stokes_unit
    }

    pub fn lid_rhs(&self) -> &[f64] {
        &self.lid_rhs
    }

    /// Action of the residual Jacobian `νK + C(u)· + C(·)u` on `d`.
    pub fn jacobian_apply(&self, u: &[f64], d: &[f64]) -> Result<Vec<f64>> {
        check_len(self.grid.dim(), u.len())?;
        check_len(self.grid.dim(), d.len())?;
        let k = match &*self.stiffness {
            WeightMatrix::Banded(k) => k.matvec(d)?,
            WeightMatrix::Dense(k) => k.matvec(d)?,
        };
        let cu_d = self.grid.convection(u)?.matvec(d)?;
        let cd_u = self.grid.convection(d)?.matvec(u)?;
        let mut out: Vec<f64> = k
            .iter()
            .zip(cu_d.iter().zip(&cd_u))
            .map(|(k, (a, b))| self.nu * k + a + b)
            .collect();
        self.grid.zero_pressure(&mut out);
        Ok(out)
    }
}

impl super::FixedPointProblem for CavityProblem {
    fn name(&self) -> String {
        format!("cavity(N={},Re={})", self.grid.cells(), self.re)
    }

    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn initial_guess(&self) -> Vec<f64> {
        vec![0.0; self.grid.dim()]
    }

    fn q_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let sys = assemble_oseen(&self.grid, self.nu, u)?;
        let mut x = sys.solve()?;
        self.grid.zero_pressure(&mut x);
        Ok(x)
    }

    fn g_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let sys = assemble_oseen(&self.grid, self.nu, u)?;
        let mut vel = u.to_vec();
        self.grid.zero_pressure(&mut vel);
        let mut r = sys.matrix.matvec(&vel)?;
        for (ri, fi) in r.iter_mut().zip(&self.lid_rhs) {
            *ri -= fi;
        }
        self.grid.zero_pressure(&mut r);
        Ok(r)
    }

    fn q_norm(&self) -> &InnerProduct {
        &self.h1
    }

    fn g_norm(&self) -> &InnerProduct {
        &self.vprime
    }

    fn norm(&self, kind: NormKind) -> Option<InnerProduct> {
        Some(match kind {
            NormKind::L2 => InnerProduct::euclidean()
                .with_mask(self.grid.velocity_mask())
                .named("l2"),
            NormKind::H1 => self.h1.clone(),
            NormKind::VPrime => self.vprime.clone(),
        })
    }

    fn divergence_defect(&self, u: &[f64]) -> Option<f64> {
        self.grid.divergence_defect(u).ok()
    }

    fn viscosity(&self) -> Option<f64> {
        Some(self.nu)
    }
}
