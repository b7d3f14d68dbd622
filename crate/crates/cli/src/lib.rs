//! Experiment runner for the accelkit solvers: resolves a flat
//! configuration, runs one solve or a concurrent sweep, and writes traces
//! as CSV next to a summary and the resolved configuration.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{ConfigError, ProblemKind, SolverConfig, Source};
pub use output::{output_root, OUT_ENV, TRACE_HEADER};
pub use runner::{exit_code, run, run_into, sweep, RunError, RunOutcome, SweepOutcome, Vary};
