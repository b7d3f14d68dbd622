//! Flat `key = value` run configuration.
//!
//! Values are layered: built-in defaults, then a config file, then
//! command-line overrides. Every error names the offending field and, for
//! file input, the line it came from.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use accelkit::accel::{Depth, Method, SolverOptions, DEFAULT_THRESHOLD};
use accelkit::kernel::DenseMatrix;
use accelkit::problems::{
    CavityProblem, FixedPointProblem, NormKind, QuadraticToy, RichardsonProblem, CAVITY_MAX_N, CAVITY_MIN_N,
};

/// Where a configuration value came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    File { path: String, line: usize },
    Flag,
    Resolved,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::File { path, line } => write!(f, "{path}:{line}"),
            Source::Flag => f.write_str("command line"),
            Source::Resolved => f.write_str("resolved configuration"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("config error in field '{field}' ({origin}): {message}")]
pub struct ConfigError {
    pub field: String,
    pub origin: Source,
    pub message: String,
}

impl ConfigError {
    fn new(field: &str, origin: Source, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            origin,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Richardson,
    Toy,
    Cavity,
}

impl ProblemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::Richardson => "richardson",
            ProblemKind::Toy => "toy",
            ProblemKind::Cavity => "cavity",
        }
    }
}

impl FromStr for ProblemKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "richardson" => Ok(ProblemKind::Richardson),
            "toy" => Ok(ProblemKind::Toy),
            "cavity" => Ok(ProblemKind::Cavity),
            other => Err(format!("unknown problem '{other}' (expected richardson, toy or cavity)")),
        }
    }
}

/// One fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub name: Option<String>,
    pub problem: ProblemKind,
    /// Unknowns of the algebraic problems.
    pub n: usize,
    /// Cells per side of the cavity.
    pub cells: usize,
    pub re: f64,
    pub seed: u64,
    pub omega: f64,
    pub method: Method,
    pub depth: Depth,
    pub adaptive: bool,
    pub threshold: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub opt_norm: Option<NormKind>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            name: None,
            problem: ProblemKind::Cavity,
            n: 20,
            cells: 16,
            re: 100.0,
            seed: 0,
            omega: 0.25,
            method: Method::Aag,
            depth: Depth::Finite(1),
            adaptive: false,
            threshold: DEFAULT_THRESHOLD,
            tol: 1e-8,
            max_iter: 500,
            opt_norm: None,
        }
    }
}

/// Accepted keys, in the order `config.resolved` lists them.
pub const KEYS: [&str; 14] = [
    "name",
    "problem",
    "n",
    "N",
    "Re",
    "seed",
    "omega",
    "method",
    "depth",
    "adaptive",
    "threshold",
    "tol",
    "max_iter",
    "opt_norm",
];

fn canonical_key(key: &str) -> Option<&'static str> {
    match key {
        "cells" => Some("N"),
        "re" => Some("Re"),
        "max-iter" => Some("max_iter"),
        "opt-norm" => Some("opt_norm"),
        k => KEYS.iter().copied().find(|c| *c == k),
    }
}

fn parse<T: FromStr>(field: &str, value: &str, source: &Source) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| ConfigError::new(field, source.clone(), format!("cannot parse '{value}': {e}")))
}

fn parse_bool(field: &str, value: &str, source: &Source) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(ConfigError::new(field, source.clone(), format!("expected a boolean, got '{value}'"))),
    }
}

impl SolverConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str, source: Source) -> Result<(), ConfigError> {
        let value = value.trim();
        let field = canonical_key(key.trim())
            .ok_or_else(|| ConfigError::new(key.trim(), source.clone(), "unknown key"))?;
        let src = &source;
        match field {
            "name" => {
                if value.is_empty() || value.contains(['/', '\\']) || value == "." || value == ".." {
                    return Err(ConfigError::new(field, source, "name must be a plain directory name"));
                }
                self.name = Some(value.to_string());
            }
            "problem" => self.problem = parse(field, value, src)?,
            "n" => self.n = parse(field, value, src)?,
            "N" => self.cells = parse(field, value, src)?,
            "Re" => self.re = parse(field, value, src)?,
            "seed" => self.seed = parse(field, value, src)?,
            "omega" => self.omega = parse(field, value, src)?,
            "method" => self.method = parse(field, value, src)?,
            "depth" => self.depth = parse(field, value, src)?,
            "adaptive" => self.adaptive = parse_bool(field, value, src)?,
            "threshold" => self.threshold = parse(field, value, src)?,
            "tol" => self.tol = parse(field, value, src)?,
            "max_iter" => self.max_iter = parse(field, value, src)?,
            "opt_norm" => {
                self.opt_norm = match value {
                    "default" | "" => None,
                    v => Some(parse(field, v, src)?),
                }
            }
            _ => unreachable!("canonical keys are exhaustive"),
        }
        Ok(())
    }

    /// Applies the assignments of a config file. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str, path: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let source = Source::File {
                path: path.to_string(),
                line: i + 1,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(line, source.clone(), "expected 'key = value'"))?;
            self.set(k, v, source)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::new("config", Source::File { path: shown.clone(), line: 0 }, e.to_string())
        })?;
        self.apply_text(&text, &shown)
    }

    /// Defaults, then `file`, then `overrides`, without validation.
    pub fn layered(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        if let Some(p) = file {
            cfg.apply_file(p)?;
        }
        for (k, v) in overrides {
            cfg.set(k, v, Source::Flag)?;
        }
        Ok(cfg)
    }

    /// Defaults, then `file`, then `overrides`, then validation.
    pub fn resolve(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let cfg = Self::layered(file, overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &str, msg: String| Err(ConfigError::new(field, Source::Resolved, msg));
        if !(self.tol > 0.0) {
            return bad("tol", format!("must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter", "must be at least 1".into());
        }
        if self.adaptive && self.method != Method::Aag {
            return bad("adaptive", format!("only valid with method=aag, got method={}", self.method.as_str()));
        }
        if self.adaptive && self.depth == Depth::Infinite {
            return bad("adaptive", "needs a finite initial depth".into());
        }
        if !(self.threshold > 0.0) {
            return bad("threshold", format!("must be positive, got {}", self.threshold));
        }
        match self.problem {
            ProblemKind::Cavity => {
                if !(CAVITY_MIN_N..=CAVITY_MAX_N).contains(&self.cells) {
                    return bad("N", format!("must lie in {CAVITY_MIN_N}..={CAVITY_MAX_N}, got {}", self.cells));
                }
                if !(self.re > 0.0 && self.re.is_finite()) {
                    return bad("Re", format!("must be positive, got {}", self.re));
                }
            }
            ProblemKind::Richardson | ProblemKind::Toy => {
                if self.n < 2 {
                    return bad("n", format!("must be at least 2, got {}", self.n));
                }
                if self.problem == ProblemKind::Richardson && !(self.omega != 0.0 && self.omega.is_finite()) {
                    return bad("omega", format!("must be finite and nonzero, got {}", self.omega));
                }
                if let Some(k) = self.opt_norm {
                    if k != NormKind::L2 {
                        return bad("opt_norm", format!("{} offers only l2, got {k}", self.problem.as_str()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Optimization norm actually used: the explicit choice or the
    /// per-method default (`h1` for AA, `vprime` otherwise) where the
    /// problem has it.
    pub fn effective_opt_norm(&self) -> NormKind {
        match (self.opt_norm, self.problem) {
            (Some(k), _) => k,
            (None, ProblemKind::Cavity) if self.method == Method::Aa => NormKind::H1,
            (None, ProblemKind::Cavity) => NormKind::VPrime,
            (None, _) => NormKind::L2,
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        let mut o = SolverOptions::new(self.method, self.depth)
            .with_tol(self.tol)
            .with_max_iter(self.max_iter)
            .with_opt_norm(self.effective_opt_norm());
        if self.adaptive {
            o = o.adaptive(self.threshold);
        }
        o
    }

    pub fn build_problem(&self) -> accelkit::Result<Box<dyn FixedPointProblem>> {
        Ok(match self.problem {
            ProblemKind::Cavity => Box::new(CavityProblem::new(self.cells, self.re)?),
            ProblemKind::Toy => Box::new(QuadraticToy::new(self.n, self.seed)?),
            ProblemKind::Richardson => {
                let n = self.n;
                let mut a = DenseMatrix::zeros(n, n);
                for i in 0..n {
                    a[(i, i)] = 2.0;
                    if i + 1 < n {
                        a[(i, i + 1)] = -1.0;
                        a[(i + 1, i)] = -1.0;
                    }
                }
                let mut b = vec![0.0; n];
                b[0] = 1.0;
                Box::new(RichardsonProblem::new(a, b, self.omega)?)
            }
        })
    }

    /// Output directory name: the configured name or one derived from the settings.
    pub fn run_name(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        let size = match self.problem {
            ProblemKind::Cavity => format!("N{}-Re{}", self.cells, self.re),
            ProblemKind::Toy => format!("n{}-s{}", self.n, self.seed),
            ProblemKind::Richardson => format!("n{}", self.n),
        };
        let adaptive = if self.adaptive { "-adaptive" } else { "" };
        format!(
            "{}-{}-{}-m{}{}",
            self.problem.as_str(),
            size,
            self.method.as_str(),
            self.depth,
            adaptive
        )
    }

    /// Every field as `key = value`, one per line, re-readable by [`apply_text`](Self::apply_text).
    pub fn resolved_text(&self) -> String {
        let values = [
            self.name.clone().unwrap_or_else(|| self.run_name()),
            self.problem.as_str().to_string(),
            self.n.to_string(),
            self.cells.to_string(),
            format!("{:?}", self.re),
            self.seed.to_string(),
            format!("{:?}", self.omega),
            self.method.as_str().to_string(),
            self.depth.to_string(),
            self.adaptive.to_string(),
            format!("{:?}", self.threshold),
            format!("{:?}", self.tol),
            self.max_iter.to_string(),
            self.effective_opt_norm().as_str().to_string(),
        ];
        KEYS.iter()
            .zip(values)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
