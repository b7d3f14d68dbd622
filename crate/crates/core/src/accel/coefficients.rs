use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::inner::{gram, GramSystem, InnerProduct};
use crate::kernel::solve_spd_regularized;
use crate::kernel::vector::axpy;

/// Acceleration scheme applied to the fixed-point map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Picard,
    Aa,
    Ngmres,
    Aag,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Picard, Method::Aa, Method::Ngmres, Method::Aag];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Picard => "picard",
            Method::Aa => "aa",
            Method::Ngmres => "ngmres",
            Method::Aag => "aag",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "picard" => Ok(Method::Picard),
            "aa" => Ok(Method::Aa),
            "ngmres" => Ok(Method::Ngmres),
            "aag" => Ok(Method::Aag),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// Combination coefficients of one accelerated step.
///
/// `raw` is in lag order as the algorithms index it (`τ_1..τ_m`, `β_0..β_m`
/// or `ξ_1..ξ_m`, newest difference first). `alpha` is the equivalent
/// constraint form, ordered oldest → newest, and sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub method: Method,
    pub raw: Vec<f64>,
    pub alpha: Vec<f64>,
    pub max_abs_alpha: f64,
}

impl Coefficients {
    pub fn new(method: Method, raw: Vec<f64>) -> Self {
        let alpha = xi_to_alpha(&raw);
        let max_abs_alpha = alpha.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
        Self {
            method,
            raw,
            alpha,
            max_abs_alpha,
        }
    }
}

/// Maps difference-form coefficients to the constraint form:
/// `[−ξ_m, …, −ξ_1, 1 + Σ ξ_i]`, oldest → newest.
pub fn xi_to_alpha(xi: &[f64]) -> Vec<f64> {
    let mut alpha: Vec<f64> = xi.iter().rev().map(|x| -x).collect();
    alpha.push(1.0 + xi.iter().sum::<f64>());
    alpha
}

/// Optimal coefficients and objective of `min ‖base + Σ c_i d_i‖`.
#[derive(Debug, Clone)]
pub struct LsSolution {
    pub raw: Vec<f64>,
    pub objective: f64,
    pub base_norm: f64,
    pub ridge_used: f64,
}

/// Relative ridge handed to the SPD solver on the first attempt.
pub const DEFAULT_RIDGE: f64 = 0.0;

/// Solves the normal equations and evaluates the optimal residual.
///
/// `reps` are Riesz representers of `diffs`, `base_rep` of `base`. The
/// objective is measured on the assembled combination
/// `base + Σ c_i d_i` (its representer is the same combination of
/// representers), which is the same quantity as
/// `sqrt(base_sq + 2cᵀb + cᵀGc)` without the cancellation of that expansion.
pub(crate) fn solve_normal_equations(
    ip: &InnerProduct,
    sys: &GramSystem,
    base: &[f64],
    base_rep: &[f64],
    diffs: &[Vec<f64>],
    reps: &[Vec<f64>],
    ridge: f64,
) -> Result<LsSolution> {
    let rhs: Vec<f64> = sys.b.iter().map(|v| -v).collect();
    let sol = solve_spd_regularized(&sys.g, &rhs, ridge)?;
    let mut comb = base.to_vec();
    let mut comb_rep = base_rep.to_vec();
    for ((c, d), r) in sol.x.iter().zip(diffs).zip(reps) {
        axpy(*c, d, &mut comb);
        axpy(*c, r, &mut comb_rep);
    }
    Ok(LsSolution {
        raw: sol.x,
        objective: ip.norm_with(&comb, &comb_rep),
        base_norm: sys.base_sq.sqrt(),
        ridge_used: sol.ridge_used,
    })
}

/// `argmin_c ‖base + Σ c_i diffs_i‖_ip` and the optimal value.
pub fn ls_coefficients(ip: &InnerProduct, base: &[f64], diffs: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    let sys = gram(ip, base, diffs)?;
    let base_rep = ip.representer(base)?;
    let reps = diffs
        .iter()
        .map(|d| ip.representer(d))
        .collect::<Result<Vec<_>>>()?;
    let sol = solve_normal_equations(ip, &sys, base, &base_rep, diffs, &reps, DEFAULT_RIDGE)?;
    Ok((sol.raw, sol.objective))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_map_examples() {
        assert_eq!(xi_to_alpha(&[]), vec![1.0]);
        assert_eq!(xi_to_alpha(&[-0.5]), vec![0.5, 0.5]);
        let a = xi_to_alpha(&[1.0, 2.0]);
        assert_eq!(a, vec![-2.0, -1.0, 4.0]);
        assert_eq!(a.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("AAg".parse::<Method>().unwrap(), Method::Aag);
        assert!("anderson".parse::<Method>().is_err());
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
    }

    #[test]
    fn ls_empty_and_exact_cancellation() {
        let ip = InnerProduct::euclidean();
        let (raw, obj) = ls_coefficients(&ip, &[3.0, 4.0], &[]).unwrap();
        assert!(raw.is_empty());
        assert_eq!(obj, 5.0);
        let d = vec![0.25, -1.5];
        let base: Vec<f64> = d.iter().map(|v| -v).collect();
        let (raw, obj) = ls_coefficients(&ip, &base, &[d]).unwrap();
        assert!((raw[0] - 1.0).abs() < 1e-14);
        assert!(obj < 1e-14);
    }

    #[test]
    fn coefficients_record_alpha_bound() {
        let c = Coefficients::new(Method::Aag, vec![1.0, 2.0]);
        assert_eq!(c.max_abs_alpha, 4.0);
    }
}
