use super::vector::{axpy, dot, norm2};
use crate::error::{check_len, Error, Result};

/// Result of an unrestarted GMRES run.
#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    /// True `‖rhs − A x_j‖₂` for `j = 0, 1, ...` (entry 0 is the initial residual).
    pub residual_norms: Vec<f64>,
    pub converged: bool,
}

/// Orthogonality defect above which a second Gram-Schmidt pass is made.
const REORTH_TOL: f64 = 1e-8;
/// Relative size of the new Arnoldi vector treated as a (happy) breakdown.
const BREAKDOWN_TOL: f64 = 1e-14;

/// Unrestarted GMRES with modified Gram-Schmidt.
///
/// Every step recomputes the iterate and its true residual, so
/// `residual_norms` is exact rather than the Givens estimate.
pub fn gmres<F>(
    apply_a: F,
    rhs: &[f64],
    x0: &[f64],
    rel_tol: f64,
    max_it: usize,
) -> Result<GmresOutcome>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = rhs.len();
    check_len(n, x0.len())?;
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rel_tol must be positive, got {rel_tol}"
        )));
    }
    let residual = |x: &[f64]| -> Vec<f64> {
        let ax = apply_a(x);
        rhs.iter().zip(&ax).map(|(b, a)| b - a).collect()
    };

    let r0 = residual(x0);
    let beta = norm2(&r0);
    let mut residual_norms = vec![beta];
    if beta == 0.0 {
        return Ok(GmresOutcome {
            x: x0.to_vec(),
            residual_norms,
            converged: true,
        });
    }
    let target = rel_tol * beta;

    let mut basis: Vec<Vec<f64>> = vec![r0.iter().map(|v| v / beta).collect()];
    // Hessenberg columns after Givens rotation (upper triangular part only)
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut rotations: Vec<(f64, f64)> = Vec::new();
    let mut g = vec![beta];
    let mut x = x0.to_vec();

    for j in 0..max_it.min(n.max(1)) {
        let mut w = apply_a(&basis[j]);
        check_len(n, w.len())?;
        let w_norm0 = norm2(&w);
        let mut h = vec![0.0; j + 2];
        for (i, v) in basis.iter().enumerate() {
            let c = dot(&w, v);
            h[i] = c;
            axpy(-c, v, &mut w);
        }
        let mut h_next = norm2(&w);
        if h_next > 0.0 {
            let defect = basis
                .iter()
                .map(|v| (dot(&w, v) / h_next).abs())
                .fold(0.0_f64, f64::max);
            if defect > REORTH_TOL {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(&w, v);
                    h[i] += c;
                    axpy(-c, v, &mut w);
                }
                h_next = norm2(&w);
            }
        }
        h[j + 1] = h_next;

        for (i, &(c, s)) in rotations.iter().enumerate() {
            let (a, b) = (h[i], h[i + 1]);
            h[i] = c * a + s * b;
            h[i + 1] = -s * a + c * b;
        }
        let (a, b) = (h[j], h[j + 1]);
        let rho = a.hypot(b);
        let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (a / rho, b / rho) };
        h[j] = rho;
        h[j + 1] = 0.0;
        rotations.push((c, s));
        let gj = g[j];
        g[j] = c * gj;
        g.push(-s * gj);
        h.truncate(j + 1);
        r_cols.push(h);

        // back substitution for the step-j coefficients
        let m = j + 1;
        let mut y = vec![0.0; m];
        for i in (0..m).rev() {
            let mut s = g[i];
            for (k, yk) in y.iter().enumerate().take(m).skip(i + 1) {
                s -= r_cols[k][i] * yk;
            }
            y[i] = s / r_cols[i][i];
        }
        x.copy_from_slice(x0);
        for (yi, v) in y.iter().zip(&basis) {
            axpy(*yi, v, &mut x);
        }
        let res = norm2(&residual(&x));
        residual_norms.push(res);

        let happy = h_next <= BREAKDOWN_TOL * w_norm0.max(f64::MIN_POSITIVE);
        if happy {
            if res <= target.max(1e-8 * beta) {
                return Ok(GmresOutcome {
                    x,
                    residual_norms,
                    converged: true,
                });
            }
            return Err(Error::BreakdownAtStep(j));
        }
        if res <= target {
            return Ok(GmresOutcome {
                x,
                residual_norms,
                converged: true,
            });
        }
        basis.push(w.iter().map(|v| v / h_next).collect());
    }
    Ok(GmresOutcome {
        x,
        residual_norms,
        converged: false,
    })
}
