use crate::error::{Error, Result};

/// Per-step quantities of the least-squares problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    /// Optimal least-squares value (for AAg: `‖Σ α_j g(ũ_j)‖`).
    pub objective: f64,
    /// Gain: objective over the unaccelerated residual norm.
    pub theta: f64,
    /// Rate predictor: objective over `‖g(u_k)‖`. `None` for AA.
    pub gamma: Option<f64>,
    pub depth_used: usize,
}

/// Gain `θ = objective / ‖g(q(u_k))‖` and rate predictor `γ = objective / ‖g(u_k)‖`.
pub fn diagnostics(objective: f64, g_norm_prev: f64, g_norm_qk: f64) -> Result<(f64, f64)> {
    if !(g_norm_prev > 0.0) || !(g_norm_qk > 0.0) {
        return Err(Error::DivisionByZero);
    }
    Ok((objective / g_norm_qk, objective / g_norm_prev))
}

/// Depth controller state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthState {
    pub current_m: usize,
    pub initial_m: usize,
    pub adaptive: bool,
    pub threshold: f64,
}

pub const DEFAULT_THRESHOLD: f64 = 0.01;

impl DepthState {
    pub fn fixed(m: usize) -> Self {
        Self {
            current_m: m,
            initial_m: m,
            adaptive: false,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn adaptive(initial_m: usize, threshold: f64) -> Self {
        Self {
            current_m: initial_m,
            initial_m,
            adaptive: true,
            threshold,
        }
    }
}

/// Increases the depth by one when the predicted rate matches the observed
/// residual ratio to within the threshold. Never decreases.
pub fn adaptive_update(state: DepthState, gamma_prev: f64, observed_ratio: f64) -> DepthState {
    if !state.adaptive || !gamma_prev.is_finite() || !observed_ratio.is_finite() {
        return state;
    }
    if (gamma_prev - observed_ratio).abs() < state.threshold {
        DepthState {
            current_m: state.current_m + 1,
            ..state
        }
    } else {
        state
    }
}
