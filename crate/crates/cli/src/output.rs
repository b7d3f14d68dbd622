//! Trace CSV, run summary and sweep comparison files.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use accelkit::accel::{IterationRecord, Trace};

pub const TRACE_HEADER: &str =
    "k,g_norm_vprime,picard_resid_h1,theta,gamma,ratio,depth_used,max_abs_alpha,q_solves,riesz_solves,wall_ms";

pub const COMPARISON_HEADER: &str = "value,status,iterations,final_g_norm,run_dir,error";

/// Environment variable overriding the output root.
pub const OUT_ENV: &str = "ACCELKIT_OUT";

/// Output root: `$ACCELKIT_OUT` if set, else `runs`.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Real number in 17-significant-digit scientific notation.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

/// CSV row of one record. The `theta` column carries AA's `theta_q`.
pub fn trace_row(r: &IterationRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.k,
        real(r.g_norm),
        opt_real(r.picard_resid),
        opt_real(r.theta.or(r.theta_q)),
        opt_real(r.gamma),
        opt_real(r.ratio),
        r.depth_used,
        opt_real(r.max_abs_alpha),
        r.q_solves,
        r.riesz_solves,
        real(r.wall_ms)
    )
}

pub fn trace_csv(trace: &Trace) -> String {
    let mut out = String::with_capacity(64 * (trace.records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        out.push_str(&trace_row(r));
        out.push('\n');
    }
    out
}

/// Structured `key = value` summary of a finished run.
pub fn summary_text(name: &str, trace: &Trace) -> String {
    let last = trace.records.last();
    let first = trace.records.first();
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("name", name.to_string());
    kv("problem", trace.problem.clone());
    kv("method", trace.options.method.as_str().to_string());
    kv("depth", trace.options.depth.to_string());
    kv("adaptive", trace.options.adaptive.to_string());
    kv("opt_norm", trace.opt_norm.clone());
    kv("status", trace.status.as_str().to_string());
    if let accelkit::accel::RunStatus::LinearSolveFailure(msg) = &trace.status {
        kv("failure", msg.clone());
    }
    kv("iterations", trace.iterations().to_string());
    kv("initial_g_norm", real(first.map_or(f64::NAN, |r| r.g_norm)));
    kv("final_g_norm", real(trace.final_g_norm()));
    let last_w = trace.records.iter().rev().find_map(|r| r.picard_resid);
    kv("final_picard_resid", opt_real(last_w));
    kv("q_solves", last.map_or(0, |r| r.q_solves).to_string());
    kv("g_evals", last.map_or(0, |r| r.g_evals).to_string());
    kv("riesz_solves", last.map_or(0, |r| r.riesz_solves).to_string());
    let max_theta = trace.max_theta();
    kv("max_theta", if max_theta.is_finite() { real(max_theta) } else { String::new() });
    let max_alpha = trace.records.iter().filter_map(|r| r.max_abs_alpha).fold(0.0, f64::max);
    kv("max_abs_alpha", real(max_alpha));
    kv("final_depth", last.and_then(|r| r.current_m).map(|m| m.to_string()).unwrap_or_else(|| trace.options.depth.to_string()));
    kv("adaptive_triggers", trace.records.iter().filter(|r| r.adaptive_triggered).count().to_string());
    kv("wall_ms", real(last.map_or(0.0, |r| r.wall_ms)));
    s
}

/// Writes `trace.csv`, `summary.txt` and `config.resolved` into `dir`.
pub fn write_run(dir: &Path, name: &str, resolved: &str, trace: &Trace) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.resolved"), resolved)?;
    std::fs::write(dir.join("trace.csv"), trace_csv(trace))?;
    std::fs::write(dir.join("summary.txt"), summary_text(name, trace))?;
    Ok(())
}

/// One row of a sweep comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub value: String,
    pub status: String,
    pub iterations: Option<usize>,
    pub final_g_norm: Option<f64>,
    pub run_dir: String,
    pub error: String,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(COMPARISON_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(&r.value),
            r.status,
            r.iterations.map(|i| i.to_string()).unwrap_or_default(),
            opt_real(r.final_g_norm),
            csv_field(&r.run_dir),
            csv_field(&r.error)
        );
    }
    out
}
