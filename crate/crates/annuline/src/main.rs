//! Command-line front end: `annuline <command> --config <path> [--out <dir>]`.
//!
//! Exit status 0 on success, 1 on numeric failure (no convergence, fit target
//! missed, certification defect), 2 on configuration problems. The
//! `ANNULINE_THREADS` environment variable caps worker parallelism.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use annuline::config::{parse_config, RunConfig};
use annuline::error::Error;
use annuline::io::{run_fit, run_report, run_solve, run_verify_theorem};

#[derive(Parser)]
#[command(
    name = "annuline",
    about = "Steady incompressible flow on star-shaped annuli: line relaxation, \
             coefficient fitting, and potential-construction verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key-value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the `out` key in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Relax the coupled line maps to a steady state and export the fields.
    Solve(RunArgs),
    /// Fit per-line coefficient expansions by nonlinear least squares.
    Fit(RunArgs),
    /// Certify the potential construction on the rectangle test cases.
    VerifyTheorem(RunArgs),
    /// Re-evaluate the residual functional from previously exported fields.
    Report(RunArgs),
}

fn init_thread_pool() {
    if let Ok(value) = std::env::var("ANNULINE_THREADS") {
        if let Ok(threads) = value.trim().parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn load_config(args: &RunArgs) -> Result<(RunConfig, PathBuf), Error> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| Error::ValidationError {
        field: "config".into(),
        message: format!("cannot read '{}': {e}", args.config.display()),
    })?;
    let config = parse_config(&text)?;
    let out = args
        .out
        .clone()
        .or_else(|| config.out.clone())
        .ok_or_else(|| Error::ValidationError {
            field: "out".into(),
            message: "no output directory: pass --out or set `out` in the configuration".into(),
        })?;
    Ok((config, out))
}

fn run(command: &Command) -> Result<(), Error> {
    match command {
        Command::Solve(args) => {
            let (config, out) = load_config(args)?;
            let (solve_report, residual_report) = run_solve(&config, &out)?;
            println!(
                "solve: J = {:.6e} after {} sweeps; fields in {}",
                residual_report.j,
                solve_report.sweeps,
                out.display()
            );
        }
        Command::Fit(args) => {
            let (config, out) = load_config(args)?;
            let outcome = run_fit(&config, &out)?;
            println!(
                "fit: J = {:.6e} after {} iterations ({} start); files in {}",
                outcome.report.j,
                outcome.iterations,
                outcome.start_used.name(),
                out.display()
            );
        }
        Command::VerifyTheorem(args) => {
            let (config, out) = load_config(args)?;
            let report = run_verify_theorem(&config, &out)?;
            println!(
                "verify-theorem: divergence sup = {:.3e}, curl sup = {:.3e}, \
                 pressure error = {:.3e}; report in {}",
                report.divergence_sup,
                report.curl_sup,
                report.pressure_error_sup,
                out.display()
            );
        }
        Command::Report(args) => {
            let (config, out) = load_config(args)?;
            let report = run_report(&config, &out)?;
            println!(
                "report: J = {:.6e} re-evaluated from files in {}",
                report.j,
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
