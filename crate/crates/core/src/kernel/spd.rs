use super::dense::DenseMatrix;
use crate::error::{check_len, Error, Result};

/// Solution of a (possibly regularized) SPD system.
#[derive(Debug, Clone)]
pub struct SpdSolution {
    pub x: Vec<f64>,
    /// Relative ridge actually applied (0 when the first attempt succeeded).
    pub ridge_used: f64,
    pub retries: usize,
}

const MAX_RETRIES: usize = 3;
/// Relative ridge tried first when the caller passed zero and Cholesky failed.
const FALLBACK_RIDGE: f64 = 1e-12;

/// Cholesky with diagonal pivoting: `Pᵀ G P = L Lᵀ`.
///
/// Returns `None` when a pivot is not safely positive.
pub fn pivoted_cholesky(g: &DenseMatrix) -> Option<(DenseMatrix, Vec<usize>)> {
    let m = g.rows();
    let mut a = g.clone();
    let mut perm: Vec<usize> = (0..m).collect();
    let max_diag = (0..m).map(|i| g[(i, i)].abs()).fold(0.0_f64, f64::max);
    let tol = (m as f64) * f64::EPSILON * max_diag;
    for k in 0..m {
        let (p, dmax) = (k..m)
            .map(|i| (i, a[(i, i)]))
            .fold((k, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        if !(dmax > tol) {
            return None;
        }
        if p != k {
            // symmetric swap of rows and columns k and p
            for j in 0..m {
                let t = a[(k, j)];
                a[(k, j)] = a[(p, j)];
                a[(p, j)] = t;
            }
            for i in 0..m {
                let t = a[(i, k)];
                a[(i, k)] = a[(i, p)];
                a[(i, p)] = t;
            }
            perm.swap(k, p);
        }
        let d = a[(k, k)].sqrt();
        a[(k, k)] = d;
        for i in k + 1..m {
            a[(i, k)] /= d;
            a[(k, i)] = a[(i, k)];
        }
        for j in k + 1..m {
            let ljk = a[(j, k)];
            for i in j..m {
                a[(i, j)] -= a[(i, k)] * ljk;
                a[(j, i)] = a[(i, j)];
            }
        }
    }
    let mut l = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            l[(i, j)] = a[(i, j)];
        }
    }
    Some((l, perm))
}

fn cholesky_solve(l: &DenseMatrix, perm: &[usize], b: &[f64]) -> Vec<f64> {
    let m = l.rows();
    let mut y: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
    for i in 0..m {
        let s: f64 = (0..i).map(|j| l[(i, j)] * y[j]).sum();
        y[i] = (y[i] - s) / l[(i, i)];
    }
    for i in (0..m).rev() {
        let s: f64 = (i + 1..m).map(|j| l[(j, i)] * y[j]).sum();
        y[i] = (y[i] - s) / l[(i, i)];
    }
    let mut x = vec![0.0; m];
    for (k, &p) in perm.iter().enumerate() {
        x[p] = y[k];
    }
    x
}

/// Solves `(G + ridge · tr(G)/m · I) x = b`.
///
/// On Cholesky failure the ridge is escalated ×10 (starting from 1e-12 when
/// it was zero) at most three times. An all-zero `G` yields `x = 0`.
pub fn solve_spd_regularized(g: &DenseMatrix, b: &[f64], ridge: f64) -> Result<SpdSolution> {
    let m = g.rows();
    check_len(m, g.cols())?;
    check_len(m, b.len())?;
    if !(ridge >= 0.0) {
        return Err(Error::InvalidArgument(format!("ridge must be ≥ 0, got {ridge}")));
    }
    if m == 0 {
        return Ok(SpdSolution {
            x: vec![],
            ridge_used: 0.0,
            retries: 0,
        });
    }
    let trace = g.trace();
    if trace == 0.0 && g.max_abs() == 0.0 {
        return Ok(SpdSolution {
            x: vec![0.0; m],
            ridge_used: ridge,
            retries: 0,
        });
    }
    let unit = if trace > 0.0 { trace / m as f64 } else { 1.0 };
    let mut r = ridge;
    for attempt in 0..=MAX_RETRIES {
        let mut shifted = g.clone();
        for i in 0..m {
            shifted[(i, i)] += r * unit;
        }
        if let Some((l, perm)) = pivoted_cholesky(&shifted) {
            let x = cholesky_solve(&l, &perm, b);
            if x.iter().all(|v| v.is_finite()) {
                return Ok(SpdSolution {
                    x,
                    ridge_used: r,
                    retries: attempt,
                });
            }
        }
        r = if r == 0.0 { FALLBACK_RIDGE } else { r * 10.0 };
    }
    Err(Error::IndefiniteAfterRegularization { ridge: r / 10.0 })
}
