//! One accelerated update per method.
//!
//! Each step expects the entry of the current iterate `u_k` to be the newest
//! entry of the history, with the residual slots its method needs filled in.

use super::coefficients::{solve_normal_equations, Coefficients, LsSolution, Method};
use super::history::{IterationHistory, SLOT_FP_RESID, SLOT_G_OF_Q, SLOT_G_OF_U};
use crate::error::{Error, Result};
use crate::inner::{gram_cached, InnerProduct, RepKey};
use crate::kernel::vector::{axpy, rel_diff};

/// Result of one accelerated step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub u_next: Vec<f64>,
    pub coefficients: Coefficients,
    /// Optimal least-squares value in the optimization norm.
    pub objective: f64,
    /// Norm of the unaccelerated base residual in the same norm.
    pub base_norm: f64,
    pub depth_used: usize,
    pub ridge_used: f64,
    /// Relative gap between the difference form and the constraint form
    /// `Σ α_j x_j` of the update.
    pub form_gap: f64,
}

fn missing(what: &str) -> Error {
    Error::InvalidArgument(format!("history entry lacks {what}"))
}

fn least_squares(
    history: &mut IterationHistory,
    ip: &InnerProduct,
    base: (RepKey, Vec<f64>),
    others: Vec<(RepKey, Vec<f64>)>,
    ridge: f64,
) -> Result<LsSolution> {
    let refs: Vec<(RepKey, &[f64])> = others.iter().map(|(k, v)| (*k, v.as_slice())).collect();
    let (sys, base_rep, diffs, reps) = gram_cached(ip, &mut history.reps, (base.0, &base.1), &refs)?;
    solve_normal_equations(ip, &sys, &base.1, &base_rep, &diffs, &reps, ridge)
}

/// `anchor + Σ c_i (anchor − points_i)`
fn extrapolate(anchor: &[f64], points: &[&[f64]], coeffs: &[f64]) -> Vec<f64> {
    let mut out = anchor.to_vec();
    for (c, p) in coeffs.iter().zip(points) {
        for ((o, a), x) in out.iter_mut().zip(anchor).zip(p.iter()) {
            *o += c * (a - x);
        }
    }
    out
}

/// `Σ α_j x_j`
fn affine_combination(alpha: &[f64], xs: &[&[f64]]) -> Vec<f64> {
    let mut out = vec![0.0; xs[0].len()];
    for (a, x) in alpha.iter().zip(xs) {
        axpy(*a, x, &mut out);
    }
    out
}

/// Anderson acceleration: least squares on fixed-point residuals `w`.
pub fn aa_step(history: &mut IterationHistory, ip_q: &InnerProduct, ridge: f64) -> Result<StepOutput> {
    let m_k = history.window();
    let newest = history.newest().ok_or_else(|| missing("an iterate"))?;
    let k = newest.index;
    let q_k = newest.q_out.clone();
    let w_k = newest.fp_resid.clone().ok_or_else(|| missing("w(u_k)"))?;
    let mut others = Vec::with_capacity(m_k);
    let mut q_lagged = Vec::with_capacity(m_k);
    for lag in 1..=m_k {
        let e = history.lagged(lag).expect("window within history");
        others.push((
            (SLOT_FP_RESID, e.index),
            e.fp_resid.clone().ok_or_else(|| missing("w(u_j)"))?,
        ));
        q_lagged.push(e.q_out.clone());
    }
    let ls = least_squares(history, ip_q, ((SLOT_FP_RESID, k), w_k), others, ridge)?;
    let points: Vec<&[f64]> = q_lagged.iter().map(Vec::as_slice).collect();
    let u_next = extrapolate(&q_k, &points, &ls.raw);

    let coefficients = Coefficients::new(Method::Aa, ls.raw);
    let mut xs: Vec<&[f64]> = points.iter().rev().copied().collect();
    xs.push(&q_k);
    let form_gap = rel_diff(&affine_combination(&coefficients.alpha, &xs), &u_next);
    Ok(StepOutput {
        u_next,
        coefficients,
        objective: ls.objective,
        base_norm: ls.base_norm,
        depth_used: m_k,
        ridge_used: ls.ridge_used,
        form_gap,
    })
}

/// AAg: least squares on nonlinear residuals of the map outputs `g(ũ_j)`.
pub fn aag_step(history: &mut IterationHistory, ip_g: &InnerProduct, ridge: f64) -> Result<StepOutput> {
    let m_k = history.window();
    let newest = history.newest().ok_or_else(|| missing("an iterate"))?;
    let k = newest.index;
    let q_k = newest.q_out.clone();
    let gq_k = newest.g_of_q.clone().ok_or_else(|| missing("g(q(u_k))"))?;
    let mut others = Vec::with_capacity(m_k);
    let mut q_lagged = Vec::with_capacity(m_k);
    for lag in 1..=m_k {
        let e = history.lagged(lag).expect("window within history");
        others.push((
            (SLOT_G_OF_Q, e.index),
            e.g_of_q.clone().ok_or_else(|| missing("g(ũ_j)"))?,
        ));
        q_lagged.push(e.q_out.clone());
    }
    let ls = least_squares(history, ip_g, ((SLOT_G_OF_Q, k), gq_k), others, ridge)?;
    let points: Vec<&[f64]> = q_lagged.iter().map(Vec::as_slice).collect();
    let u_next = extrapolate(&q_k, &points, &ls.raw);

    let coefficients = Coefficients::new(Method::Aag, ls.raw);
    let mut xs: Vec<&[f64]> = points.iter().rev().copied().collect();
    xs.push(&q_k);
    let form_gap = rel_diff(&affine_combination(&coefficients.alpha, &xs), &u_next);
    Ok(StepOutput {
        u_next,
        coefficients,
        objective: ls.objective,
        base_norm: ls.base_norm,
        depth_used: m_k,
        ridge_used: ls.ridge_used,
        form_gap,
    })
}

/// Nonlinear GMRES: extrapolates `q(u_k)` against `u_{k−i}`, `i = 0..m_k`.
pub fn ngmres_step(history: &mut IterationHistory, ip_g: &InnerProduct, ridge: f64) -> Result<StepOutput> {
    let m_k = history.window();
    let newest = history.newest().ok_or_else(|| missing("an iterate"))?;
    let k = newest.index;
    let q_k = newest.q_out.clone();
    let gq_k = newest.g_of_q.clone().ok_or_else(|| missing("g(q(u_k))"))?;
    let mut others = Vec::with_capacity(m_k + 1);
    let mut u_lagged = Vec::with_capacity(m_k + 1);
    for lag in 0..=m_k {
        let e = history.lagged(lag).expect("window within history");
        others.push((
            (SLOT_G_OF_U, e.index),
            e.g_of_u.clone().ok_or_else(|| missing("g(u_j)"))?,
        ));
        u_lagged.push(e.u.clone());
    }
    let ls = least_squares(history, ip_g, ((SLOT_G_OF_Q, k), gq_k), others, ridge)?;
    let points: Vec<&[f64]> = u_lagged.iter().map(Vec::as_slice).collect();
    let u_next = extrapolate(&q_k, &points, &ls.raw);

    let coefficients = Coefficients::new(Method::Ngmres, ls.raw);
    let mut xs: Vec<&[f64]> = points.iter().rev().copied().collect();
    xs.push(&q_k);
    let form_gap = rel_diff(&affine_combination(&coefficients.alpha, &xs), &u_next);
    Ok(StepOutput {
        u_next,
        coefficients,
        objective: ls.objective,
        base_norm: ls.base_norm,
        depth_used: m_k,
        ridge_used: ls.ridge_used,
        form_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accel::history::{Depth, HistoryEntry};

    fn entry(k: usize, u: Vec<f64>, q: Vec<f64>) -> HistoryEntry {
        let mut e = HistoryEntry::new(k, u.clone(), q.clone());
        e.fp_resid = Some(q.iter().zip(&u).map(|(a, b)| a - b).collect());
        e
    }

    #[test]
    fn depth_zero_is_picard() {
        let ip = InnerProduct::euclidean();
        let mut h = IterationHistory::new(Depth::Finite(3));
        let mut e = entry(0, vec![1.0, 2.0], vec![0.5, 0.25]);
        e.g_of_q = Some(vec![0.1, 0.2]);
        e.g_of_u = Some(vec![0.3, 0.4]);
        h.push(e).unwrap();
        let aa = aa_step(&mut h, &ip, 0.0).unwrap();
        assert_eq!(aa.u_next, vec![0.5, 0.25]);
        assert_eq!(aa.depth_used, 0);
        let aag = aag_step(&mut h, &ip, 0.0).unwrap();
        assert_eq!(aag.u_next, vec![0.5, 0.25]);
        assert!((aag.objective - (0.05_f64).sqrt()).abs() < 1e-15);
        assert_eq!(aag.coefficients.alpha, vec![1.0]);
    }

    #[test]
    fn aa_stagnation_keeps_map_output() {
        let ip = InnerProduct::euclidean();
        let mut h = IterationHistory::new(Depth::Finite(1));
        h.push(entry(0, vec![1.0, 1.0], vec![2.0, 3.0])).unwrap();
        h.push(entry(1, vec![1.0, 1.0], vec![2.0, 3.0])).unwrap();
        let out = aa_step(&mut h, &ip, 0.0).unwrap();
        assert!(out.coefficients.raw[0].is_finite());
        assert_eq!(out.u_next, vec![2.0, 3.0]);
    }

    #[test]
    fn aag_stagnation_keeps_map_output() {
        let ip = InnerProduct::euclidean();
        let mut h = IterationHistory::new(Depth::Finite(1));
        for k in 0..2 {
            let mut e = entry(k, vec![0.0, 0.0], vec![1.0, -1.0]);
            e.g_of_q = Some(vec![0.5, 0.5]);
            h.push(e).unwrap();
        }
        let out = aag_step(&mut h, &ip, 0.0).unwrap();
        assert_eq!(out.u_next, vec![1.0, -1.0]);
        assert!(out.form_gap < 1e-15);
    }

    #[test]
    fn ngmres_degenerate_base_stays_finite() {
        // g(q(u_k)) = g(u_k): the single difference vanishes
        let ip = InnerProduct::euclidean();
        let mut h = IterationHistory::new(Depth::Finite(0));
        let mut e = entry(0, vec![1.0, 0.0], vec![0.0, 1.0]);
        e.g_of_q = Some(vec![1.0, 2.0]);
        e.g_of_u = Some(vec![1.0, 2.0]);
        h.push(e).unwrap();
        let out = ngmres_step(&mut h, &ip, 0.0).unwrap();
        assert_eq!(out.coefficients.raw.len(), 1);
        assert!(out.u_next.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn missing_slot_reported() {
        let ip = InnerProduct::euclidean();
        let mut h = IterationHistory::new(Depth::Finite(1));
        h.push(HistoryEntry::new(0, vec![0.0], vec![1.0])).unwrap();
        assert!(aag_step(&mut h, &ip, 0.0).is_err());
        assert!(ngmres_step(&mut h, &ip, 0.0).is_err());
        assert!(aa_step(&mut h, &ip, 0.0).is_err());
    }
}
