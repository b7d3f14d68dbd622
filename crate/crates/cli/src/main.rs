use std::path::PathBuf;
use std::process::ExitCode;

use accelkit_cli::runner::{self, Vary, EXIT_USAGE};
use accelkit_cli::{output_root, SolverConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "accelkit", version, about = "Run accelerated fixed-point experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration.
    Run(RunArgs),
    /// Solve one configuration per value of a varied field.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Fields {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory name under the output root.
    #[arg(long)]
    name: Option<String>,
    /// richardson, toy or cavity.
    #[arg(long)]
    problem: Option<String>,
    /// Dimension of the algebraic problems.
    #[arg(long = "n")]
    n: Option<String>,
    /// Cavity cells per side.
    #[arg(long = "N", alias = "cells")]
    cells: Option<String>,
    /// Cavity Reynolds number.
    #[arg(long = "re", alias = "Re")]
    re: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Richardson relaxation parameter.
    #[arg(long)]
    omega: Option<String>,
    /// picard, aa, ngmres or aag.
    #[arg(long)]
    method: Option<String>,
    /// Window depth, a nonnegative integer or `inf`.
    #[arg(long)]
    depth: Option<String>,
    #[arg(long)]
    adaptive: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long = "max-iter")]
    max_iter: Option<String>,
    /// l2, h1 or vprime.
    #[arg(long = "opt-norm")]
    opt_norm: Option<String>,
}

impl Fields {
    fn overrides(&self) -> Vec<(String, String)> {
        [
            ("name", &self.name),
            ("problem", &self.problem),
            ("n", &self.n),
            ("N", &self.cells),
            ("Re", &self.re),
            ("seed", &self.seed),
            ("omega", &self.omega),
            ("method", &self.method),
            ("depth", &self.depth),
            ("adaptive", &self.adaptive),
            ("threshold", &self.threshold),
            ("tol", &self.tol),
            ("max_iter", &self.max_iter),
            ("opt_norm", &self.opt_norm),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    fields: Fields,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    fields: Fields,
    /// Field to vary: method, depth or Re.
    #[arg(long)]
    vary: Vary,
    /// Comma-separated values of the varied field.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let root = output_root();
    match cli.command {
        Command::Run(args) => {
            let cfg = match SolverConfig::resolve(args.fields.config.as_deref(), &args.fields.overrides()) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_USAGE);
                }
            };
            match runner::run(&cfg, &root) {
                Ok(outcome) => {
                    let t = &outcome.trace;
                    println!(
                        "{}: {} after {} iterations, final g-norm {:.6e}",
                        outcome.dir.display(),
                        t.status.as_str(),
                        t.iterations(),
                        t.final_g_norm()
                    );
                    ExitCode::from(runner::exit_code(&t.status))
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code())
                }
            }
        }
        Command::Sweep(args) => {
            let base = match SolverConfig::layered(args.fields.config.as_deref(), &args.fields.overrides()) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_USAGE);
                }
            };
            match runner::sweep(&base, args.vary, &args.values, &root) {
                Ok(outcome) => {
                    for r in &outcome.rows {
                        let its = r.iterations.map(|i| i.to_string()).unwrap_or_else(|| "-".into());
                        println!("{}={}: {} ({} iterations) {}", args.vary, r.value, r.status, its, r.error);
                    }
                    println!("comparison: {}", outcome.dir.join("comparison.csv").display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code())
                }
            }
        }
    }
}
