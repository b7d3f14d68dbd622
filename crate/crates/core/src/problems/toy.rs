use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::inner::InnerProduct;
use crate::kernel::DenseMatrix;

/// One entry `c` of a symmetric bilinear map: contributes
/// `c (x_i y_j + x_j y_i) / 2` to output component `l`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct BilinearTerm {
    l: usize,
    i: usize,
    j: usize,
    c: f64,
}

/// `g(u) = A u + B(u, u) − f` with a random diagonally dominant SPD `A`, a
/// sparse symmetric bilinear `B` and `f` built from a known root `u*`.
/// The map is `q(u) = u − ω g(u)`, `ω = 1/λ_max(A)`.
#[derive(Debug, Clone)]
pub struct QuadraticToy {
    a: DenseMatrix,
    terms: Vec<BilinearTerm>,
    f: Vec<f64>,
    u_star: Vec<f64>,
    omega: f64,
    lambda_min_bound: f64,
    seed: u64,
    l2: InnerProduct,
}

/// Fraction of `λ_min(A)` bounding the bilinear term.
const BILINEAR_SCALE: f64 = 0.1;
const TERMS_PER_ROW: usize = 2;

impl QuadraticToy {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("toy problem needs n >= 2".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                if rng.gen_bool(0.5) {
                    let v = rng.gen_range(-1.0..1.0);
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
        }
        let mut lambda_min_bound = f64::INFINITY;
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
            let margin = rng.gen_range(1.0..2.0);
            a[(i, i)] = off + margin;
            lambda_min_bound = lambda_min_bound.min(margin);
        }

        let mut terms = Vec::with_capacity(n * TERMS_PER_ROW);
        for l in 0..n {
            for _ in 0..TERMS_PER_ROW {
                let i = rng.gen_range(0..n);
                let j = rng.gen_range(0..n);
                terms.push(BilinearTerm {
                    l,
                    i: i.min(j),
                    j: i.max(j),
                    c: rng.gen_range(-1.0..1.0),
                });
            }
        }
        // each term is bounded by |c| ‖x‖ ‖y‖
        let bound: f64 = terms.iter().map(|t| t.c.abs()).sum();
        if bound > 0.0 {
            let s = BILINEAR_SCALE * lambda_min_bound / bound;
            for t in &mut terms {
                t.c *= s;
            }
        }

        let u_star: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lambda_max = a.spectral_radius_estimate(10_000, 1e-14)?;
        let mut toy = Self {
            a,
            terms,
            f: vec![0.0; n],
            u_star,
            omega: 1.0 / lambda_max,
            lambda_min_bound,
            seed,
            l2: InnerProduct::euclidean(),
        };
        toy.f = toy.residual_part(&toy.u_star);
        Ok(toy)
    }

    /// Same `A` and `u*` with `B = 0`: a linear Richardson problem.
    pub fn without_bilinear(mut self) -> Self {
        self.terms.clear();
        self.f = self.residual_part(&self.u_star);
        self
    }

    fn residual_part(&self, u: &[f64]) -> Vec<f64> {
        let mut out = self.a.matvec(u).expect("square operator");
        for (o, b) in out.iter_mut().zip(self.bilinear_unchecked(u, u)) {
            *o += b;
        }
        out
    }

    fn bilinear_unchecked(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for t in &self.terms {
            out[t.l] += 0.5 * t.c * (x[t.i] * y[t.j] + x[t.j] * y[t.i]);
        }
        out
    }

    /// The symmetric bilinear term `B(x, y)`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.f.len(), x.len())?;
        check_len(self.f.len(), y.len())?;
        Ok(self.bilinear_unchecked(x, y))
    }

    pub fn linear_part(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn forcing(&self) -> &[f64] {
        &self.f
    }

    pub fn root(&self) -> &[f64] {
        &self.u_star
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Gershgorin lower bound on `λ_min(A)` used to scale `B`.
    pub fn lambda_min_bound(&self) -> f64 {
        self.lambda_min_bound
    }

    pub fn has_bilinear(&self) -> bool {
        !self.terms.is_empty()
    }
}

impl super::FixedPointProblem for QuadraticToy {
    fn name(&self) -> String {
        format!("toy(n={},seed={})", self.f.len(), self.seed)
    }

    fn dim(&self) -> usize {
        self.f.len()
    }

    fn initial_guess(&self) -> Vec<f64> {
        vec![0.0; self.f.len()]
    }

    fn q_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let g = self.g_apply(u)?;
        Ok(u.iter().zip(&g).map(|(x, gi)| x - self.omega * gi).collect())
    }

    fn g_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.f.len(), u.len())?;
        let mut r = self.residual_part(u);
        for (ri, fi) in r.iter_mut().zip(&self.f) {
            *ri -= fi;
        }
        Ok(r)
    }

    fn q_norm(&self) -> &InnerProduct {
        &self.l2
    }

    fn g_norm(&self) -> &InnerProduct {
        &self.l2
    }

    fn norm(&self, kind: super::NormKind) -> Option<InnerProduct> {
        (kind == super::NormKind::L2).then(|| self.l2.clone())
    }
}
