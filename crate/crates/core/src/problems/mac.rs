use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::kernel::{BandedMatrix, Factorization, Factorize};

/// Staggered (MAC) grid on the unit square with `N × N` cells.
///
/// Unknowns: `u` on interior vertical faces `(i, j)`, `i = 1..N−1`,
/// `j = 0..N−1`; `v` on interior horizontal faces `(i, j)`, `i = 0..N−1`,
/// `j = 1..N−1`; `p` at cell centres, with `p(0, 0)` eliminated.
/// The global ordering interleaves, per cell column `i` and row `j`:
/// `u(i+1, j)`, `v(i, j+1)`, `p(i, j)`, skipping wall faces and the pinned cell.
#[derive(Debug, Clone)]
pub struct MacGrid {
    n: usize,
    h: f64,
    lid_speed: f64,
    u_idx: Vec<Option<usize>>,
    v_idx: Vec<Option<usize>>,
    p_idx: Vec<Option<usize>>,
    dim: usize,
    bandwidth: usize,
}

impl MacGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("MAC grid needs N >= 2".into()));
        }
        let mut u_idx = vec![None; (n + 1) * n];
        let mut v_idx = vec![None; n * (n + 1)];
        let mut p_idx = vec![None; n * n];
        let mut next = 0;
        for i in 0..n {
            for j in 0..n {
                if i + 1 < n {
                    u_idx[(i + 1) * n + j] = Some(next);
                    next += 1;
                }
                if j + 1 < n {
                    v_idx[i * (n + 1) + j + 1] = Some(next);
                    next += 1;
                }
                if (i, j) != (0, 0) {
                    p_idx[i * n + j] = Some(next);
                    next += 1;
                }
            }
        }
        let mut grid = Self {
            n,
            h: 1.0 / n as f64,
            lid_speed: 1.0,
            u_idx,
            v_idx,
            p_idx,
            dim: next,
            bandwidth: 0,
        };
        let ones = vec![1.0; grid.dim];
        let mut bw = 0usize;
        grid.emit_entries(1.0, Some(&ones), &mut |r, c, _| bw = bw.max(r.abs_diff(c)));
        grid.bandwidth = bw;
        Ok(grid)
    }

    pub fn with_lid_speed(mut self, lid_speed: f64) -> Self {
        self.lid_speed = lid_speed;
        self
    }

    pub fn cells(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lid_speed(&self) -> f64 {
        self.lid_speed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_u(&self) -> usize {
        (self.n - 1) * self.n
    }

    pub fn n_v(&self) -> usize {
        self.n * (self.n - 1)
    }

    /// Pressure unknowns after pinning.
    pub fn n_p(&self) -> usize {
        self.n * self.n - 1
    }

    /// Half-bandwidth of the full Oseen sparsity pattern.
    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Global index of `u` on vertical face `x = i h`, row `j`.
    pub fn u_index(&self, i: usize, j: usize) -> Option<usize> {
        (i <= self.n && j < self.n).then(|| self.u_idx[i * self.n + j]).flatten()
    }

    /// Global index of `v` on horizontal face `y = j h`, column `i`.
    pub fn v_index(&self, i: usize, j: usize) -> Option<usize> {
        (i < self.n && j <= self.n)
            .then(|| self.v_idx[i * (self.n + 1) + j])
            .flatten()
    }

    pub fn p_index(&self, i: usize, j: usize) -> Option<usize> {
        (i < self.n && j < self.n).then(|| self.p_idx[i * self.n + j]).flatten()
    }

    /// True on velocity unknowns, false on pressure unknowns.
    pub fn velocity_mask(&self) -> Vec<bool> {
        let mut mask = vec![true; self.dim];
        for k in self.p_idx.iter().flatten() {
            mask[*k] = false;
        }
        mask
    }

    /// Sets the pressure block of a state vector to zero.
    pub fn zero_pressure(&self, x: &mut [f64]) {
        for k in self.p_idx.iter().flatten() {
            x[*k] = 0.0;
        }
    }

    fn u_at(&self, x: &[f64], i: usize, j: usize) -> f64 {
        self.u_index(i, j).map_or(0.0, |k| x[k])
    }

    fn v_at(&self, x: &[f64], i: usize, j: usize) -> f64 {
        self.v_index(i, j).map_or(0.0, |k| x[k])
    }

    /// Discrete divergence per cell, `(u_e − u_w + v_n − v_s) / h`, row-major `(i, j)`.
    pub fn divergence(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, x.len())?;
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let d = self.u_at(x, i + 1, j) - self.u_at(x, i, j) + self.v_at(x, i, j + 1)
                    - self.v_at(x, i, j);
                out.push(d / self.h);
            }
        }
        Ok(out)
    }

    /// `max |h · div u| / max |u|`, zero for a zero velocity.
    pub fn divergence_defect(&self, x: &[f64]) -> Result<f64> {
        let div = self.divergence(x)?;
        let scale = self
            .velocity_mask()
            .iter()
            .zip(x)
            .filter(|(m, _)| **m)
            .fold(0.0_f64, |a, (_, v)| a.max(v.abs()));
        if scale == 0.0 {
            return Ok(div.iter().fold(0.0_f64, |a, d| a.max(d.abs())));
        }
        Ok(div.iter().fold(0.0_f64, |a, d| a.max((d * self.h).abs())) / scale)
    }

    /// Pressure on all `N²` cells (pinned cell = 0), shifted to zero mean.
    pub fn mean_zero_pressure(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, x.len())?;
        let mut p: Vec<f64> = self.p_idx.iter().map(|k| k.map_or(0.0, |k| x[k])).collect();
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        for v in &mut p {
            *v -= mean;
        }
        Ok(p)
    }

    /// Velocity state sampled from `(u(x, y), v(x, y))` at the face midpoints.
    pub fn sample_velocity(&self, fu: impl Fn(f64, f64) -> f64, fv: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let (n, h) = (self.n, self.h);
        let mut x = vec![0.0; self.dim];
        for i in 0..=n {
            for j in 0..=n {
                if let Some(k) = self.u_index(i, j) {
                    x[k] = fu(i as f64 * h, (j as f64 + 0.5) * h);
                }
                if let Some(k) = self.v_index(i, j) {
                    x[k] = fv((i as f64 + 0.5) * h, j as f64 * h);
                }
            }
        }
        x
    }

    /// Momentum right-hand side for a body force, scaled like the matrix rows.
    pub fn forcing_rhs(&self, fu: impl Fn(f64, f64) -> f64, fv: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let h2 = self.h * self.h;
        self.sample_velocity(fu, fv).into_iter().map(|v| h2 * v).collect()
    }

    /// Right-hand side carrying the tangential lid velocity on `y = 1`.
    pub fn lid_rhs(&self, nu: f64) -> Vec<f64> {
        let mut rhs = vec![0.0; self.dim];
        for i in 1..self.n {
            if let Some(k) = self.u_index(i, self.n - 1) {
                rhs[k] += 2.0 * nu * self.lid_speed;
            }
        }
        rhs
    }

    /// Emits every matrix entry `(row, col, value)` of the h²-scaled
    /// system: viscous and pressure couplings first, then convection by `a`.
    fn emit_entries(&self, nu: f64, a: Option<&[f64]>, emit: &mut impl FnMut(usize, usize, f64)) {
        self.emit_stokes(nu, true, emit);
        if let Some(a) = a {
            self.emit_convection(a, emit);
        }
    }

    fn emit_stokes(&self, nu: f64, with_pressure: bool, emit: &mut impl FnMut(usize, usize, f64)) {
        let (n, h) = (self.n, self.h);
        for i in 0..=n {
            for j in 0..=n {
                if let Some(r) = self.u_index(i, j) {
                    let mut diag = 4.0;
                    for (ni, nj) in [(i - 1, j), (i + 1, j)] {
                        if let Some(c) = self.u_index(ni, nj) {
                            emit(r, c, -nu);
                        }
                    }
                    for dj in [-1i64, 1] {
                        let nj = j as i64 + dj;
                        if nj < 0 || nj >= n as i64 {
                            diag += 1.0;
                        } else if let Some(c) = self.u_index(i, nj as usize) {
                            emit(r, c, -nu);
                        }
                    }
                    emit(r, r, nu * diag);
                    if with_pressure {
                        if let Some(c) = self.p_index(i, j) {
                            emit(r, c, h);
                        }
                        if let Some(c) = self.p_index(i - 1, j) {
                            emit(r, c, -h);
                        }
                    }
                }
                if let Some(r) = self.v_index(i, j) {
                    let mut diag = 4.0;
                    for (ni, nj) in [(i, j - 1), (i, j + 1)] {
                        if let Some(c) = self.v_index(ni, nj) {
                            emit(r, c, -nu);
                        }
                    }
                    for di in [-1i64, 1] {
                        let ni = i as i64 + di;
                        if ni < 0 || ni >= n as i64 {
                            diag += 1.0;
                        } else if let Some(c) = self.v_index(ni as usize, j) {
                            emit(r, c, -nu);
                        }
                    }
                    emit(r, r, nu * diag);
                    if with_pressure {
                        if let Some(c) = self.p_index(i, j) {
                            emit(r, c, h);
                        }
                        if let Some(c) = self.p_index(i, j - 1) {
                            emit(r, c, -h);
                        }
                    }
                }
                if with_pressure && i < n && j < n {
                    if let Some(r) = self.p_index(i, j) {
                        if let Some(c) = self.u_index(i + 1, j) {
                            emit(r, c, -h);
                        }
                        if let Some(c) = self.u_index(i, j) {
                            emit(r, c, h);
                        }
                        if let Some(c) = self.v_index(i, j + 1) {
                            emit(r, c, -h);
                        }
                        if let Some(c) = self.v_index(i, j) {
                            emit(r, c, h);
                        }
                    }
                }
            }
        }
    }

    /// Divergence-form central convection `h (F_e − F_w + F_n − F_s)` with
    /// edge-averaged advecting velocities. Wall-normal advecting velocities
    /// vanish, so wall and ghost values never enter.
    fn emit_convection(&self, a: &[f64], emit: &mut impl FnMut(usize, usize, f64)) {
        let (n, h) = (self.n, self.h);
        let half = 0.5 * h;
        let au = |i: usize, j: usize| self.u_at(a, i, j);
        let av = |i: usize, j: usize| self.v_at(a, i, j);
        for i in 0..=n {
            for j in 0..=n {
                if let Some(r) = self.u_index(i, j) {
                    let a_e = 0.5 * (au(i, j) + au(i + 1, j));
                    let a_w = 0.5 * (au(i - 1, j) + au(i, j));
                    let a_n = 0.5 * (av(i - 1, j + 1) + av(i, j + 1));
                    let a_s = 0.5 * (av(i - 1, j) + av(i, j));
                    emit(r, r, half * (a_e - a_w + a_n - a_s));
                    let nbrs = [
                        (self.u_index(i + 1, j), a_e),
                        (self.u_index(i - 1, j), -a_w),
                        (self.u_index(i, j + 1), a_n),
                        (j.checked_sub(1).and_then(|jm| self.u_index(i, jm)), -a_s),
                    ];
                    for (c, coef) in nbrs {
                        if let Some(c) = c {
                            emit(r, c, half * coef);
                        }
                    }
                }
                if let Some(r) = self.v_index(i, j) {
                    let a_n = 0.5 * (av(i, j) + av(i, j + 1));
                    let a_s = 0.5 * (av(i, j - 1) + av(i, j));
                    let a_e = 0.5 * (au(i + 1, j - 1) + au(i + 1, j));
                    let a_w = 0.5 * (au(i, j - 1) + au(i, j));
                    emit(r, r, half * (a_e - a_w + a_n - a_s));
                    let nbrs = [
                        (self.v_index(i, j + 1), a_n),
                        (self.v_index(i, j - 1), -a_s),
                        (self.v_index(i + 1, j), a_e),
                        (i.checked_sub(1).and_then(|im| self.v_index(im, j)), -a_w),
                    ];
                    for (c, coef) in nbrs {
                        if let Some(c) = c {
                            emit(r, c, half * coef);
                        }
                    }
                }
            }
        }
    }

    fn banded(&self) -> BandedMatrix {
        BandedMatrix::zeros(self.dim, self.bandwidth, self.bandwidth).expect("bandwidth below dimension")
    }

    /// Velocity stiffness `K` (unit viscosity), zero on the pressure block.
    pub fn stiffness(&self) -> BandedMatrix {
        let mut m = self.banded();
        self.emit_stokes(1.0, false, &mut |r, c, v| m.add(r, c, v));
        m
    }

    /// Convection matrix `C(a)` alone.
    pub fn convection(&self, a: &[f64]) -> Result<BandedMatrix> {
        check_len(self.dim, a.len())?;
        let mut m = self.banded();
        self.emit_convection(a, &mut |r, c, v| m.add(r, c, v));
        Ok(m)
    }
}

/// Factored Stokes saddle-point operator `[νK Bᵀ; B 0]`.
#[derive(Debug, Clone)]
pub struct StokesOperator {
    pub matrix: BandedMatrix,
    pub factorization: Arc<Factorization>,
    pub nu: f64,
}

/// Oseen system linearized about the convecting field `a`.
#[derive(Debug, Clone)]
pub struct OseenSystem {
    pub matrix: BandedMatrix,
    pub rhs: Vec<f64>,
    pub convecting: Vec<f64>,
}

impl OseenSystem {
    /// Fresh LU factorization and solve; returns the full state (velocity and pressure).
    pub fn solve(&self) -> Result<Vec<f64>> {
        self.matrix
            .lu()
            .and_then(|f| f.solve(&self.rhs))
            .map_err(|e| Error::LinearSolveFailure(Box::new(e)))
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::InvalidArgument(format!("viscosity must be positive, got {nu}")));
    }
    Ok(())
}

pub fn stokes_matrix(grid: &MacGrid, nu: f64) -> Result<BandedMatrix> {
    check_nu(nu)?;
    let mut m = grid.banded();
    grid.emit_entries(nu, None, &mut |r, c, v| m.add(r, c, v));
    Ok(m)
}

/// Assembles and factors the Stokes operator.
pub fn assemble_stokes(grid: &MacGrid, nu: f64) -> Result<StokesOperator> {
    let matrix = stokes_matrix(grid, nu)?;
    let factorization = Arc::new(matrix.lu()?);
    Ok(StokesOperator {
        matrix,
        factorization,
        nu,
    })
}

/// Oseen matrix `[νK + C(a) Bᵀ; B 0]` with the lid data as right-hand side.
pub fn assemble_oseen(grid: &MacGrid, nu: f64, a: &[f64]) -> Result<OseenSystem> {
    check_nu(nu)?;
    check_len(grid.dim(), a.len())?;
    let mut matrix = grid.banded();
    grid.emit_entries(nu, Some(a), &mut |r, c, v| matrix.add(r, c, v));
    Ok(OseenSystem {
        matrix,
        rhs: grid.lid_rhs(nu),
        convecting: a.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::vector::{dot, max_abs};

    #[test]
    fn ordering_is_a_permutation() {
        let g = MacGrid::new(5).unwrap();
        let mut seen = vec![false; g.dim()];
        for i in 0..=5 {
            for j in 0..=5 {
                for k in [g.u_index(i, j), g.v_index(i, j), g.p_index(i, j)].into_iter().flatten() {
                    assert!(!seen[k]);
                    seen[k] = true;
                }
            }
        }
        assert!(seen.iter().all(|s| *s));
        assert_eq!(g.dim(), g.n_u() + g.n_v() + g.n_p());
    }

    #[test]
    fn small_stokes_is_symmetric_with_dim_39() {
        let g = MacGrid::new(4).unwrap();
        let s = assemble_stokes(&g, 0.3).unwrap();
        assert_eq!(s.matrix.dim(), 39);
        assert!(s.matrix.is_symmetric(1e-14));
    }

    #[test]
    fn bandwidth_is_linear_in_n() {
        for n in [4, 8, 16, 32, 64] {
            let g = MacGrid::new(n).unwrap();
            assert!(g.bandwidth() <= 8 * n, "n={n} bw={}", g.bandwidth());
        }
    }

    #[test]
    fn oseen_with_zero_field_is_stokes_bitwise() {
        let g = MacGrid::new(6).unwrap();
        let s = stokes_matrix(&g, 0.05).unwrap();
        let o = assemble_oseen(&g, 0.05, &vec![0.0; g.dim()]).unwrap();
        let a: Vec<u64> = s.bands().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = o.matrix.bands().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn homogeneous_stokes_solution_is_zero() {
        let g = MacGrid::new(4).unwrap().with_lid_speed(0.0);
        let sys = assemble_oseen(&g, 1.0, &vec![0.0; g.dim()]).unwrap();
        let x = sys.solve().unwrap();
        assert_eq!(max_abs(&x), 0.0);
    }

    #[test]
    fn lid_driven_stokes_is_divergence_free() {
        let g = MacGrid::new(8).unwrap();
        let sys = assemble_oseen(&g, 1.0, &vec![0.0; g.dim()]).unwrap();
        let x = sys.solve().unwrap();
        assert!(g.divergence_defect(&x).unwrap() < 1e-12);
        assert!(max_abs(&x) > 0.0);
    }

    #[test]
    fn convection_of_constant_field_has_zero_interior_row_sums() {
        let g = MacGrid::new(8).unwrap();
        let mut a = vec![0.0; g.dim()];
        for i in 1..8 {
            for j in 0..8 {
                a[g.u_index(i, j).unwrap()] = 0.7;
            }
        }
        let c = g.convection(&a).unwrap().to_dense();
        for i in 2..7 {
            for j in 1..7 {
                let r = g.u_index(i, j).unwrap();
                let s: f64 = c.row(r).iter().sum();
                assert!(s.abs() < 1e-15, "row ({i},{j}) sum {s}");
            }
        }
    }

    #[test]
    fn convection_is_skew_for_divergence_free_field() {
        let g = MacGrid::new(8).unwrap();
        let stokes = assemble_oseen(&g, 1.0, &vec![0.0; g.dim()]).unwrap();
        let mut a = stokes.solve().unwrap();
        g.zero_pressure(&mut a);
        let c = g.convection(&a).unwrap().to_dense();
        let ct = c.transpose();
        for (x, y) in c.entries().iter().zip(ct.entries()) {
            assert!((x + y).abs() < 1e-14);
        }
        let u: Vec<f64> = (0..g.dim()).map(|k| ((k * 37 % 11) as f64 - 5.0) / 5.0).collect();
        let cu = c.matvec(&u).unwrap();
        assert!(dot(&cu, &u).abs() < 1e-13);
    }

    #[test]
    fn stiffness_is_spd_on_velocity() {
        let g = MacGrid::new(4).unwrap();
        let k = g.stiffness();
        assert!(k.is_symmetric(0.0));
        let mut x: Vec<f64> = (0..g.dim()).map(|i| (i as f64).sin()).collect();
        g.zero_pressure(&mut x);
        assert!(dot(&x, &k.matvec(&x).unwrap()) > 0.0);
    }
}
