//! `awm`: command-line front end for the wealth-exchange toolkit.
//!
//! Exit codes: 0 on success (non-convergence included, with a warning),
//! 1 on runtime failure, 2 on usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod run;
mod specs;

/// A bad flag value that clap itself cannot catch; exits with status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Debug, Parser)]
#[command(name = "awm", version = concat!(env!("CARGO_PKG_VERSION"), " (manifest schema 1)"))]
#[command(about = "Kinetic wealth-exchange simulations, steady states, tail asymptotics and Lorenz fits")]
pub struct Cli {
    /// Root under which run directories are created.
    #[arg(long, env = "AWM_OUT", default_value = "awm-runs", global = true)]
    pub out: PathBuf,
    /// Write into this directory instead of a derived one under --out.
    #[arg(long, global = true)]
    pub run_dir: Option<PathBuf>,
    /// Worker threads for replicas and fit evaluations (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: Option<u32>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo simulation of the agent ensemble.
    Simulate(commands::Simulate),
    /// Steady state of the Fokker-Planck equation.
    Steady(commands::Steady),
    /// Tail exponent f(w) induced by a policy.
    Tail(commands::Tail),
    /// Redistribution policy producing a given tail.
    Invert(commands::Invert),
    /// Large-wealth assumption checks for a tail, and optional potential diagnostics.
    Check(commands::Check),
    /// Fit (chi, zeta, lambda) to a Lorenz curve.
    Fit(commands::Fit),
    /// Tabulate fit results.
    Report(commands::Report),
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j as usize).build_global()?;
    }
    let ctx = run::Context { out: cli.out, run_dir: cli.run_dir };
    match cli.command {
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Steady(a) => commands::steady(&ctx, a),
        Command::Tail(a) => commands::tail(&ctx, a),
        Command::Invert(a) => commands::invert(&ctx, a),
        Command::Check(a) => commands::check(&ctx, a),
        Command::Fit(a) => commands::fit(&ctx, a),
        Command::Report(a) => commands::report(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("awm: error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
