use std::time::Instant;

use super::coefficients::{Method, DEFAULT_RIDGE};
use super::diagnostics::{adaptive_update, diagnostics, DepthState, DEFAULT_THRESHOLD};
use super::history::{Depth, HistoryEntry, IterationHistory, SLOT_G_OF_U};
use super::steps::{aa_step, aag_step, ngmres_step, StepOutput};
use crate::error::{Error, Result};
use crate::inner::InnerProduct;
use crate::kernel::vector::sub;
use crate::problems::{FixedPointProblem, NormKind};

/// Residual growth factor (relative to the initial residual) that stops a run.
pub const DIVERGENCE_FACTOR: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub method: Method,
    pub depth: Depth,
    pub adaptive: bool,
    pub threshold: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Optimization norm; `None` picks the method default
    /// (`q_norm` for AA, `g_norm` for AAg and NGMRES).
    pub opt_norm: Option<NormKind>,
    pub ridge: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: Method::Aag,
            depth: Depth::Finite(1),
            adaptive: false,
            threshold: DEFAULT_THRESHOLD,
            tol: 1e-8,
            max_iter: 500,
            opt_norm: None,
            ridge: DEFAULT_RIDGE,
        }
    }
}

impl SolverOptions {
    pub fn new(method: Method, depth: Depth) -> Self {
        Self {
            method,
            depth,
            ..Self::default()
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_opt_norm(mut self, kind: NormKind) -> Self {
        self.opt_norm = Some(kind);
        self
    }

    pub fn adaptive(mut self, threshold: f64) -> Self {
        self.adaptive = true;
        self.threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if self.adaptive && self.method != Method::Aag {
            return Err(Error::InvalidArgument(
                "adaptive depth is only defined for aag".into(),
            ));
        }
        if self.adaptive && self.depth == Depth::Infinite {
            return Err(Error::InvalidArgument(
                "adaptive depth needs a finite initial depth".into(),
            ));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidArgument("threshold must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Converged,
    Diverged,
    MaxIterExceeded,
    LinearSolveFailure(String),
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::Diverged => "diverged",
            RunStatus::MaxIterExceeded => "max_iter",
            RunStatus::LinearSolveFailure(_) => "solver_failure",
        }
    }
}

/// Diagnostics of iterate `u_k`; row `k` of a trace.
///
/// Step quantities (`theta`, `gamma`, `depth_used`, ...) on row `k + 1`
/// belong to the step that produced `u_{k+1}` from `u_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `‖g(u_k)‖` in the problem's g-norm.
    pub g_norm: f64,
    /// `‖q(u_k) − u_k‖` in the q-norm; unknown for the last iterate.
    pub picard_resid: Option<f64>,
    /// `‖g(ũ_k)‖` in the g-norm, when it was evaluated.
    pub g_tilde_norm: Option<f64>,
    /// Gain of the residual least-squares problem (Picard, AAg, NGMRES).
    pub theta: Option<f64>,
    /// Gain of AA's least-squares problem in its own norm.
    pub theta_q: Option<f64>,
    pub gamma: Option<f64>,
    /// `‖g(u_k)‖ / ‖g(u_{k−1})‖`.
    pub ratio: Option<f64>,
    pub objective: Option<f64>,
    pub depth_used: usize,
    /// Depth cap in force for this step (before any adaptive update).
    pub current_m: Option<usize>,
    pub adaptive_triggered: bool,
    pub max_abs_alpha: Option<f64>,
    pub form_gap: Option<f64>,
    pub divergence: Option<f64>,
    pub q_solves: usize,
    pub g_evals: usize,
    pub riesz_solves: usize,
    pub wall_ms: f64,
}

impl IterationRecord {
    fn initial(g_norm: f64) -> Self {
        Self {
            k: 0,
            g_norm,
            picard_resid: None,
            g_tilde_norm: None,
            theta: None,
            theta_q: None,
            gamma: None,
            ratio: None,
            objective: None,
            depth_used: 0,
            current_m: None,
            adaptive_triggered: false,
            max_abs_alpha: None,
            form_gap: None,
            divergence: None,
            q_solves: 0,
            g_evals: 1,
            riesz_solves: 0,
            wall_ms: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub problem: String,
    pub options: SolverOptions,
    pub opt_norm: String,
    pub status: RunStatus,
    pub records: Vec<IterationRecord>,
    pub final_u: Vec<f64>,
}

impl Trace {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_g_norm(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.g_norm)
    }

    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    pub fn max_theta(&self) -> f64 {
        self.records
            .iter()
            .filter_map(|r| r.theta.or(r.theta_q))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_form_gap(&self) -> f64 {
        self.records
            .iter()
            .filter_map(|r| r.form_gap)
            .fold(0.0, f64::max)
    }
}

/// Distinct inner products whose solve counters make up the trace totals.
struct SolveCounters(Vec<InnerProduct>);

impl SolveCounters {
    fn new(ips: &[&InnerProduct]) -> Self {
        let mut uniq: Vec<InnerProduct> = Vec::new();
        for ip in ips {
            if !uniq.iter().any(|u| u.shares_counter(ip)) {
                uniq.push((*ip).clone());
            }
        }
        Self(uniq)
    }

    fn total(&self) -> usize {
        self.0.iter().map(InnerProduct::solve_count).sum()
    }
}

fn linear_failure(e: Error) -> RunStatus {
    RunStatus::LinearSolveFailure(e.to_string())
}

/// Runs Picard / AA / NGMRES / AAg until `‖g(u_k)‖ ≤ tol`, divergence or `max_iter`.
///
/// Numerical failures end the run and are reported in [`Trace::status`];
/// only invalid options produce an `Err`.
pub fn run_solver(problem: &dyn FixedPointProblem, options: &SolverOptions) -> Result<Trace> {
    options.validate()?;
    let start = Instant::now();
    let method = options.method;
    let g_ip = problem.g_norm().clone();
    let q_ip = problem.q_norm().clone();
    let opt_ip = match options.opt_norm {
        Some(kind) => problem.norm(kind).ok_or_else(|| {
            Error::InvalidArgument(format!("problem {} has no {kind} norm", problem.name()))
        })?,
        None if method == Method::Aa => q_ip.clone(),
        None => g_ip.clone(),
    };
    let opt_is_monitor = opt_ip.shares_counter(&g_ip);
    let counters = SolveCounters::new(&[&g_ip, &q_ip, &opt_ip]);
    let solves_at_start = counters.total();

    let mut depth_state = match options.depth {
        Depth::Finite(m) if options.adaptive => DepthState::adaptive(m, options.threshold),
        Depth::Finite(m) => DepthState::fixed(m),
        Depth::Infinite => DepthState::fixed(usize::MAX),
    };
    let mut history = IterationHistory::new(match method {
        Method::Picard => Depth::Finite(0),
        _ => options.depth,
    });

    let mut q_solves = 0usize;
    let mut g_evals = 0usize;
    let elapsed_ms = |s: &Instant| s.elapsed().as_secs_f64() * 1e3;

    let mut trace = Trace {
        problem: problem.name(),
        options: options.clone(),
        opt_norm: opt_ip.name().to_string(),
        status: RunStatus::MaxIterExceeded,
        records: Vec::new(),
        final_u: Vec::new(),
    };

    let mut u = problem.initial_guess();
    let mut g_u = match problem.g_apply(&u) {
        Ok(g) => g,
        Err(e) => {
            trace.status = linear_failure(e);
            trace.final_u = u;
            return Ok(trace);
        }
    };
    g_evals += 1;
    let mut g_u_rep = match g_ip.representer(&g_u) {
        Ok(r) => r,
        Err(e) => {
            trace.status = linear_failure(e);
            trace.final_u = u;
            return Ok(trace);
        }
    };
    let mut g_norm = g_ip.norm_with(&g_u, &g_u_rep);
    let initial_norm = g_norm;
    let mut rec0 = IterationRecord::initial(g_norm);
    rec0.divergence = problem.divergence_defect(&u);
    rec0.riesz_solves = counters.total() - solves_at_start;
    trace.records.push(rec0);
    if g_norm <= options.tol {
        trace.status = RunStatus::Converged;
        trace.final_u = u;
        return Ok(trace);
    }

    for k in 0..options.max_iter {
        let q_u = match problem.q_apply(&u) {
            Ok(q) => q,
            Err(e) => {
                trace.status = linear_failure(e);
                break;
            }
        };
        q_solves += 1;
        let w = sub(&q_u, &u);
        match q_ip.norm(&w) {
            Ok(n) => trace.records[k].picard_resid = Some(n),
            Err(e) => {
                trace.status = linear_failure(e);
                break;
            }
        }

        let m_cap = depth_state.current_m;
        let mut entry = HistoryEntry::new(k, u.clone(), q_u.clone());
        // (step output, g at the next iterate if already known, g(ũ_{k+1}) monitored norm)
        let step: Result<(StepOutput, Option<Vec<f64>>, Option<Vec<f64>>)> = (|| {
            match method {
                Method::Picard => {
                    let g_q = problem.g_apply(&q_u)?;
                    g_evals += 1;
                    let base_norm = opt_ip.norm(&g_q)?;
                    let out = StepOutput {
                        u_next: q_u.clone(),
                        coefficients: super::Coefficients::new(Method::Picard, vec![]),
                        objective: base_norm,
                        base_norm,
                        depth_used: 0,
                        ridge_used: 0.0,
                        form_gap: 0.0,
                    };
                    Ok((out, Some(g_q.clone()), Some(g_q)))
                }
                Method::Aa => {
                    entry.fp_resid = Some(w.clone());
                    history.push(entry.clone())?;
                    let out = aa_step(&mut history, &opt_ip, options.ridge)?;
                    Ok((out, None, None))
                }
                Method::Aag => {
                    let g_q = problem.g_apply(&q_u)?;
                    g_evals += 1;
                    entry.g_of_q = Some(g_q.clone());
                    history.push(entry.clone())?;
                    let out = aag_step(&mut history, &opt_ip, options.ridge)?;
                    let g_next = (out.depth_used == 0).then(|| g_q.clone());
                    Ok((out, g_next, Some(g_q)))
                }
                Method::Ngmres => {
                    let g_q = problem.g_apply(&q_u)?;
                    g_evals += 1;
                    entry.g_of_q = Some(g_q.clone());
                    entry.g_of_u = Some(g_u.clone());
                    history.push(entry.clone())?;
                    if opt_is_monitor {
                        history.insert_representer((SLOT_G_OF_U, k), g_u_rep.clone());
                    }
                    let out = ngmres_step(&mut history, &opt_ip, options.ridge)?;
                    Ok((out, None, Some(g_q)))
                }
            }
        })();
        let (out, g_next_known, g_tilde) = match step {
            Ok(s) => s,
            Err(e) => {
                trace.status = linear_failure(e);
                break;
            }
        };

        let g_next = match g_next_known {
            Some(g) => g,
            None => match problem.g_apply(&out.u_next) {
                Ok(g) => {
                    g_evals += 1;
                    g
                }
                Err(e) => {
                    trace.status = linear_failure(e);
                    break;
                }
            },
        };
        let g_next_rep = match g_ip.representer(&g_next) {
            Ok(r) => r,
            Err(e) => {
                trace.status = linear_failure(e);
                break;
            }
        };
        let g_norm_next = g_ip.norm_with(&g_next, &g_next_rep);
        let ratio = g_norm_next / g_norm;

        let g_tilde_norm = match (&g_tilde, method) {
            (Some(_), Method::Picard) => Some(g_norm_next),
            (Some(_), _) if opt_is_monitor => Some(out.base_norm),
            (Some(gt), _) => g_ip.norm(gt).ok(),
            (None, _) => None,
        };

        let (mut theta, mut theta_q, mut gamma) = (None, None, None);
        match method {
            Method::Aa => {
                theta_q = (out.base_norm > 0.0).then(|| out.objective / out.base_norm);
            }
            _ => {
                let g_prev_opt = if opt_is_monitor {
                    Ok(g_norm)
                } else {
                    opt_ip.norm(&g_u)
                };
                if let Ok(prev) = g_prev_opt {
                    if let Ok((t, gm)) = diagnostics(out.objective, prev, out.base_norm) {
                        theta = Some(t);
                        gamma = Some(gm);
                    }
                }
            }
        }

        let mut triggered = false;
        if depth_state.adaptive && k + 1 >= 2 {
            if let Some(gm) = gamma {
                let next = adaptive_update(depth_state, gm, ratio);
                if next.current_m != depth_state.current_m {
                    triggered = true;
                    depth_state = next;
                    history.set_depth_cap(Depth::Finite(depth_state.current_m));
                }
            }
        }

        trace.records.push(IterationRecord {
            k: k + 1,
            g_norm: g_norm_next,
            picard_resid: None,
            g_tilde_norm,
            theta,
            theta_q,
            gamma,
            ratio: Some(ratio),
            objective: Some(out.objective),
            depth_used: out.depth_used,
            current_m: match (method, options.depth) {
                (Method::Picard, _) => Some(0),
                (_, Depth::Infinite) => None,
                _ => Some(m_cap),
            },
            adaptive_triggered: triggered,
            max_abs_alpha: Some(out.coefficients.max_abs_alpha),
            form_gap: Some(out.form_gap),
            divergence: problem.divergence_defect(&out.u_next),
            q_solves,
            g_evals,
            riesz_solves: counters.total() - solves_at_start,
            wall_ms: elapsed_ms(&start),
        });

        u = out.u_next;
        g_u = g_next;
        g_u_rep = g_next_rep;
        g_norm = g_norm_next;

        if !g_norm.is_finite() || g_norm > DIVERGENCE_FACTOR * initial_norm {
            trace.status = RunStatus::Diverged;
            break;
        }
        if g_norm <= options.tol {
            trace.status = RunStatus::Converged;
            break;
        }
    }
    trace.final_u = u;
    Ok(trace)
}
