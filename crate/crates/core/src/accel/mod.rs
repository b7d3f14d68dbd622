//! Acceleration methods, their history, diagnostics and the iteration driver.

mod coefficients;
mod diagnostics;
mod driver;
mod history;
mod steps;

pub use coefficients::{ls_coefficients, xi_to_alpha, Coefficients, LsSolution, Method, DEFAULT_RIDGE};
pub use diagnostics::{adaptive_update, diagnostics, DepthState, StepDiagnostics, DEFAULT_THRESHOLD};
pub use driver::{run_solver, IterationRecord, RunStatus, SolverOptions, Trace, DIVERGENCE_FACTOR};
pub use history::{Depth, HistoryEntry, IterationHistory};
pub use steps::{aa_step, aag_step, ngmres_step, StepOutput};
