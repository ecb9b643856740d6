//! Command line front end: four subcommands over one flat TOML config.

use std::path::PathBuf;
use std::process;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

mod config;
mod output;
mod runner;

use config::Mode;

/// Dirichlet problems for the fractional p-Laplacian on an interval or a
/// disc: direct energy minimization, pointwise operator evaluation, and
/// checkers for the regularity estimates the solutions must satisfy.
#[derive(Parser)]
#[command(name = "fraclab", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Minimize the discrete energy and write the solution profile.
    Solve(RunArgs),
    /// Evaluate the operator on a closed-form field at probe points.
    EvalOp(RunArgs),
    /// Run one named estimate checker against a fresh solve.
    Verify(RunArgs),
    /// Run every applicable checker on one configuration.
    Suite(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; falls back to the config's `out` key, then to the
    /// current directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate pointwise even past the singular threshold, where the
    /// reported value is a truncation limit rather than a principal value.
    #[arg(long)]
    override_singular_check: bool,
    /// Suppress progress lines; the manifest still records every stage.
    #[arg(long)]
    quiet: bool,
}

fn main() {
    process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = Cli::parse();
    let (mode, args) = match cli.cmd {
        Cmd::Solve(a) => (Mode::Solve, a),
        Cmd::EvalOp(a) => (Mode::EvalOp, a),
        Cmd::Verify(a) => (Mode::Verify, a),
        Cmd::Suite(a) => (Mode::Suite, a),
    };
    let t0 = Instant::now();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("fraclab: cannot read {}: {e}", args.config.display());
            return 2;
        }
    };
    let cfg = match config::parse_config(&text, mode, args.override_singular_check) {
        Ok(c) => c,
        Err(errors) => {
            eprintln!("fraclab: {} rejected:", args.config.display());
            for e in errors {
                eprintln!("  {e}");
            }
            return 2;
        }
    };
    let out_dir = args
        .out
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("fraclab: cannot create {}: {e}", out_dir.display());
        return 2;
    }
    runner::run(
        mode,
        &cfg,
        &out_dir,
        args.override_singular_check,
        args.quiet,
        t0.elapsed().as_secs_f64(),
    )
}
