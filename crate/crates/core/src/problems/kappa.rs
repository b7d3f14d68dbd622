use crate::accel::Trace;
use crate::error::{Error, Result};

/// Minimum number of recorded fixed-point residuals.
pub const MIN_KAPPA_SAMPLES: usize = 5;

/// Contraction estimate from a sequence of fixed-point residual norms:
/// geometric mean of successive ratios over the last half of the sequence.
pub fn kappa_from_residuals(resid: &[f64]) -> Result<f64> {
    if resid.len() < MIN_KAPPA_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_KAPPA_SAMPLES} residuals, got {}",
            resid.len()
        )));
    }
    let ratios: Vec<f64> = resid.windows(2).map(|w| w[1] / w[0]).collect();
    let tail = &ratios[ratios.len() / 2..];
    if tail.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InsufficientData(
            "residual ratios must be finite and positive".into(),
        ));
    }
    let mean_log = tail.iter().map(|r| r.ln()).sum::<f64>() / tail.len() as f64;
    Ok(mean_log.exp())
}

/// [`kappa_from_residuals`] applied to the `picard_resid` column of a trace.
pub fn kappa_estimate(trace: &Trace) -> Result<f64> {
    let resid: Vec<f64> = trace.records.iter().filter_map(|r| r.picard_resid).collect();
    kappa_from_residuals(&resid)
}
