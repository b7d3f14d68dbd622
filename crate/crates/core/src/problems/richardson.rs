use crate::error::{check_len, Error, Result};
use crate::inner::InnerProduct;
use crate::kernel::DenseMatrix;

/// Linear fixed-point problem `q(u) = u + ω (b − A u)`, `g(u) = b − A u`.
#[derive(Debug, Clone)]
pub struct RichardsonProblem {
    a: DenseMatrix,
    b: Vec<f64>,
    omega: f64,
    u0: Vec<f64>,
    l2: InnerProduct,
}

impl RichardsonProblem {
    pub fn new(a: DenseMatrix, b: Vec<f64>, omega: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        check_len(a.rows(), b.len())?;
        if !(omega.is_finite() && omega != 0.0) {
            return Err(Error::InvalidArgument("omega must be finite and nonzero".into()));
        }
        let n = b.len();
        Ok(Self {
            a,
            b,
            omega,
            u0: vec![0.0; n],
            l2: InnerProduct::euclidean(),
        })
    }

    pub fn with_initial_guess(mut self, u0: Vec<f64>) -> Result<Self> {
        check_len(self.b.len(), u0.len())?;
        self.u0 = u0;
        Ok(self)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

impl super::FixedPointProblem for RichardsonProblem {
    fn name(&self) -> String {
        format!("richardson(n={})", self.b.len())
    }

    fn dim(&self) -> usize {
        self.b.len()
    }

    fn initial_guess(&self) -> Vec<f64> {
        self.u0.clone()
    }

    fn q_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let r = self.g_apply(u)?;
        Ok(u.iter().zip(&r).map(|(x, ri)| x + self.omega * ri).collect())
    }

    fn g_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let au = self.a.matvec(u)?;
        Ok(self.b.iter().zip(&au).map(|(b, a)| b - a).collect())
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
