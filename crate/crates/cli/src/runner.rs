//! Single runs and concurrent sweeps.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use accelkit::accel::{run_solver, RunStatus, Trace};

use crate::config::{ConfigError, SolverConfig, Source};
use crate::output::{comparison_csv, write_run, ComparisonRow};

/// Process exit codes.
pub const EXIT_CONVERGED: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DIVERGED: u8 = 2;
pub const EXIT_MAX_ITER: u8 = 3;
pub const EXIT_SOLVER_FAILURE: u8 = 4;
pub const EXIT_IO: u8 = 5;

pub fn exit_code(status: &RunStatus) -> u8 {
    match status {
        RunStatus::Converged => EXIT_CONVERGED,
        RunStatus::Diverged => EXIT_DIVERGED,
        RunStatus::MaxIterExceeded => EXIT_MAX_ITER,
        RunStatus::LinearSolveFailure(_) => EXIT_SOLVER_FAILURE,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("problem setup failed: {0}")]
    Setup(#[from] accelkit::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => EXIT_USAGE,
            RunError::Setup(_) => EXIT_SOLVER_FAILURE,
            RunError::Io { .. } => EXIT_IO,
        }
    }
}

/// A finished run and where its files went.
#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub trace: Trace,
}

/// Solves one configuration and writes `dir/{trace.csv, summary.txt, config.resolved}`.
pub fn run_into(cfg: &SolverConfig, dir: &Path) -> Result<RunOutcome, RunError> {
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    let trace = run_solver(problem.as_ref(), &cfg.solver_options())?;
    write_run(dir, &cfg.run_name(), &cfg.resolved_text(), &trace).map_err(|source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        trace,
    })
}

/// Runs into `root/<run name>`.
pub fn run(cfg: &SolverConfig, root: &Path) -> Result<RunOutcome, RunError> {
    run_into(cfg, &root.join(cfg.run_name()))
}

/// Field varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vary {
    Method,
    Depth,
    Re,
}

impl Vary {
    pub fn key(&self) -> &'static str {
        match self {
            Vary::Method => "method",
            Vary::Depth => "depth",
            Vary::Re => "Re",
        }
    }
}

impl fmt::Display for Vary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Vary {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "method" => Ok(Vary::Method),
            "depth" => Ok(Vary::Depth),
            "re" | "Re" => Ok(Vary::Re),
            other => Err(format!("cannot sweep over '{other}' (expected method, depth or Re)")),
        }
    }
}

/// Result of a sweep: the comparison table and where it was written.
#[derive(Debug)]
pub struct SweepOutcome {
    pub dir: PathBuf,
    pub rows: Vec<ComparisonRow>,
}

fn sweep_name(base: &SolverConfig, vary: Vary) -> String {
    base.name
        .clone()
        .unwrap_or_else(|| format!("sweep-{}-{}", vary.key().to_ascii_lowercase(), base.run_name()))
}

/// Runs `base` once per value of `vary`, concurrently, into
/// `root/<name>/<vary>-<value>/`, and writes `root/<name>/comparison.csv`.
/// Failures of individual runs are recorded in their rows.
pub fn sweep(base: &SolverConfig, vary: Vary, values: &[String], root: &Path) -> Result<SweepOutcome, RunError> {
    if values.is_empty() {
        return Err(ConfigError {
            field: "values".into(),
            origin: Source::Flag,
            message: "a sweep needs at least one value".into(),
        }
        .into());
    }
    let dir = root.join(sweep_name(base, vary));
    let rows: Vec<ComparisonRow> = std::thread::scope(|s| {
        let handles: Vec<_> = values
            .iter()
            .map(|value| {
                let dir = &dir;
                s.spawn(move || {
                    let sub = format!("{}-{}", vary.key().to_ascii_lowercase(), value);
                    let run_dir = dir.join(&sub);
                    let mut row = ComparisonRow {
                        value: value.clone(),
                        status: String::new(),
                        iterations: None,
                        final_g_norm: None,
                        run_dir: sub.clone(),
                        error: String::new(),
                    };
                    let mut cfg = base.clone();
                    cfg.name = Some(sub);
                    let outcome = cfg
                        .set(vary.key(), value, Source::Flag)
                        .map_err(RunError::from)
                        .and_then(|_| run_into(&cfg, &run_dir));
                    match outcome {
                        Ok(o) => {
                            row.status = o.trace.status.as_str().to_string();
                            row.iterations = Some(o.trace.iterations());
                            row.final_g_norm = Some(o.trace.final_g_norm());
                            if let RunStatus::LinearSolveFailure(m) = &o.trace.status {
                                row.error = m.clone();
                            }
                        }
                        Err(e) => {
                            row.status = match e {
                                RunError::Config(_) => "config_error",
                                RunError::Setup(_) => "setup_error",
                                RunError::Io { .. } => "io_error",
                            }
                            .to_string();
                            row.error = e.to_string();
                        }
                    }
                    row
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    std::fs::create_dir_all(&dir).map_err(|source| RunError::Io {
        path: dir.clone(),
        source,
    })?;
    let path = dir.join("comparison.csv");
    std::fs::write(&path, comparison_csv(&rows)).map_err(|source| RunError::Io { path, source })?;
    Ok(SweepOutcome { dir, rows })
}
