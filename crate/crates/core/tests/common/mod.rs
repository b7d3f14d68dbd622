#![allow(dead_code)]

use std::f64::consts::PI;

use accelkit::kernel::vector::norm2;
use accelkit::problems::{assemble_stokes, FixedPointProblem, MacGrid, QuadraticToy};
use rand::Rng;

/// Map outputs `ũ_{k−m+1} … ũ_{k+1}` (oldest → newest) and weights `α` summing to one.
pub struct Instance {
    pub u_tilde: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
}

impl Instance {
    pub fn random<R: Rng>(rng: &mut R, m: usize, n: usize) -> Self {
        let u_tilde = (0..=m)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut alpha: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let s: f64 = alpha.iter().sum();
        alpha.push(1.0 - s);
        Self { u_tilde, alpha }
    }

    pub fn depth(&self) -> usize {
        self.alpha.len() - 1
    }

    /// `u_{k+1} = Σ α_j ũ_j`
    pub fn combination(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.u_tilde[0].len()];
        for (a, u) in self.alpha.iter().zip(&self.u_tilde) {
            for (o, x) in out.iter_mut().zip(u) {
                *o += a * x;
            }
        }
        out
    }

    /// `ẽ_l = ũ_l − ũ_{l−1}` for local index `l = 1..=m`.
    pub fn e_tilde(&self, l: usize) -> Vec<f64> {
        sub(&self.u_tilde[l], &self.u_tilde[l - 1])
    }

    /// `α_l + … + α_{newest}`
    fn tail_sum(&self, l: usize) -> f64 {
        self.alpha[l..].iter().sum()
    }

    /// Closed-form expansion of `u_{k+1} − ũ_j` in the differences `ẽ`:
    /// coefficient `α_{k+1} + … + α_l` for `l > j` and
    /// `−(1 − α_{k+1} − … − α_l)` for `l ≤ j`.
    pub fn expansion(&self, j: usize) -> (Vec<f64>, f64) {
        let n = self.u_tilde[0].len();
        let mut out = vec![0.0; n];
        let mut scale = 0.0;
        for l in 1..=self.depth() {
            let c = if l > j { self.tail_sum(l) } else { -(1.0 - self.tail_sum(l)) };
            let e = self.e_tilde(l);
            scale += c.abs() * norm2(&e);
            for (o, x) in out.iter_mut().zip(&e) {
                *o += c * x;
            }
        }
        (out, scale)
    }

    /// `Σ |α_i| ‖ũ_i‖`, the magnitude of the operands of `Σ α_i ũ_i`.
    fn operand_scale(&self) -> f64 {
        self.alpha.iter().zip(&self.u_tilde).map(|(a, u)| a.abs() * norm2(u)).sum()
    }

    /// Relative defect of the expansion of `u_{k+1} − ũ_j` against direct arithmetic.
    pub fn expansion_defect(&self, j: usize) -> f64 {
        let direct = sub(&self.combination(), &self.u_tilde[j]);
        let (closed, scale) = self.expansion(j);
        let operands = self.operand_scale() + norm2(&self.u_tilde[j]);
        rel(&direct, &closed, scale.max(operands))
    }

    /// Defects of `u_{k+1} − ũ_{k+1} = −α_k ẽ_{k+1}` and
    /// `u_{k+1} − ũ_k = α_{k+1} ẽ_{k+1}` (depth one).
    pub fn depth_one_defects(&self) -> (f64, f64) {
        assert_eq!(self.depth(), 1);
        let u = self.combination();
        let e = self.e_tilde(1);
        let rhs1: Vec<f64> = e.iter().map(|x| -self.alpha[0] * x).collect();
        let rhs2: Vec<f64> = e.iter().map(|x| self.alpha[1] * x).collect();
        let lhs1 = sub(&u, &self.u_tilde[1]);
        let lhs2 = sub(&u, &self.u_tilde[0]);
        let ops = self.operand_scale();
        (
            rel(&lhs1, &rhs1, (self.alpha[0].abs() * norm2(&e)).max(ops + norm2(&self.u_tilde[1]))),
            rel(&lhs2, &rhs2, (self.alpha[1].abs() * norm2(&e)).max(ops + norm2(&self.u_tilde[0]))),
        )
    }

    /// For `g(u) = A u + B(u, u) − f`: defects of
    /// `g(u_{k+1}) − Σ α_j g(ũ_j) = Σ_j α_j B(u_{k+1} − ũ_j, ũ_j)` and of
    /// `= Σ_{l≥1} Σ_{i≥l} α_i B(ẽ_l, u_{k+1} − ũ_i)`.
    pub fn remainder_defects(&self, toy: &QuadraticToy) -> (f64, f64) {
        let u = self.combination();
        let mut lhs = toy.g_apply(&u).unwrap();
        let mut operands = norm2(&lhs);
        for (a, ut) in self.alpha.iter().zip(&self.u_tilde) {
            let g = toy.g_apply(ut).unwrap();
            operands += a.abs() * norm2(&g);
            for (o, x) in lhs.iter_mut().zip(g) {
                *o -= a * x;
            }
        }
        let n = u.len();
        let mut first = vec![0.0; n];
        let mut scale_first = 0.0;
        for (a, ut) in self.alpha.iter().zip(&self.u_tilde) {
            let b = toy.bilinear(&sub(&u, ut), ut).unwrap();
            scale_first += a.abs() * norm2(&b);
            for (o, x) in first.iter_mut().zip(&b) {
                *o += a * x;
            }
        }
        let mut second = vec![0.0; n];
        let mut scale_second = 0.0;
        for l in 1..=self.depth() {
            let e = self.e_tilde(l);
            for i in l..=self.depth() {
                let b = toy.bilinear(&e, &sub(&u, &self.u_tilde[i])).unwrap();
                scale_second += self.alpha[i].abs() * norm2(&b);
                for (o, x) in second.iter_mut().zip(&b) {
                    *o += self.alpha[i] * x;
                }
            }
        }
        (
            rel(&lhs, &first, scale_first.max(operands)),
            rel(&lhs, &second, scale_second.max(operands)),
        )
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `‖a − b‖ / max(‖a‖, scale)`, zero when both sides vanish. Callers pass the
/// magnitude of the operands summed to form `a` and `b` as `scale`.
pub fn rel(a: &[f64], b: &[f64], scale: f64) -> f64 {
    let d = norm2(&sub(a, b));
    let s = norm2(a).max(scale);
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

/// Velocity of the stream function `ψ = sin²(πx) sin²(πy)`.
pub fn u_exact(x: f64, y: f64) -> f64 {
    PI * (PI * x).sin().powi(2) * (2.0 * PI * y).sin()
}

pub fn v_exact(x: f64, y: f64) -> f64 {
    -PI * (2.0 * PI * x).sin() * (PI * y).sin().powi(2)
}

pub fn lap_u(x: f64, y: f64) -> f64 {
    PI * (2.0 * PI * PI * (2.0 * PI * x).cos() * (2.0 * PI * y).sin()
        - 4.0 * PI * PI * (PI * x).sin().powi(2) * (2.0 * PI * y).sin())
}

pub fn lap_v(x: f64, y: f64) -> f64 {
    -PI * (-4.0 * PI * PI * (2.0 * PI * x).sin() * (PI * y).sin().powi(2)
        + 2.0 * PI * PI * (2.0 * PI * x).sin() * (2.0 * PI * y).cos())
}

/// `(u·∇)u` of the exact velocity.
pub fn adv(x: f64, y: f64) -> (f64, f64) {
    let (u, v) = (u_exact(x, y), v_exact(x, y));
    let ux = PI * PI * (2.0 * PI * x).sin() * (2.0 * PI * y).sin();
    let uy = 2.0 * PI * PI * (PI * x).sin().powi(2) * (2.0 * PI * y).cos();
    let vx = -2.0 * PI * PI * (2.0 * PI * x).cos() * (PI * y).sin().powi(2);
    let vy = -PI * PI * (2.0 * PI * x).sin() * (2.0 * PI * y).sin();
    (u * ux + v * uy, u * vx + v * vy)
}

pub fn velocity_error(grid: &MacGrid, x: &[f64]) -> f64 {
    let exact = grid.sample_velocity(u_exact, v_exact);
    grid.velocity_mask()
        .iter()
        .zip(x.iter().zip(&exact))
        .filter(|(m, _)| **m)
        .map(|(_, (a, b))| (a - b).abs())
        .fold(0.0, f64::max)
}

pub fn stokes_error(n: usize, nu: f64) -> f64 {
    let grid = MacGrid::new(n).unwrap().with_lid_speed(0.0);
    let s = assemble_stokes(&grid, nu).unwrap();
    let rhs = grid.forcing_rhs(|x, y| -nu * lap_u(x, y), |x, y| -nu * lap_v(x, y));
    let x = s.factorization.solve(&rhs).unwrap();
    velocity_error(&grid, &x)
}

