//! `loglip`: batch front end for the weight calculus, the counterexample
//! family and the verification harnesses.
//!
//! Exit codes: 0 all checks pass, 1 an invariant or check failed, 2 usage error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use config::{
    CounterexampleOpts, EnergyOpts, FileConfig, GlobalOpts, InequalityOpts, LogboundOpts, OracleOpts, Resolved,
    WeightsOpts,
};

/// Numerical laboratory for backward parabolic equations with Log-Lipschitz coefficients.
///
/// Every option can also be set through the environment variable shown in
/// its help (prefix `LOGLIP_`) or in the TOML file given by `--config`.
/// Flags override the environment, which overrides the file.
#[derive(Parser, Debug)]
#[command(name = "loglip", version)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "LOGLIP_CONFIG")]
    config: Option<PathBuf>,
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate ψ_λ and Φ_λ with ODE and scaling-identity residuals.
    Weights(WeightsOpts),
    /// Sequence table, growth conditions, norm and divergence-ratio series, residual audit.
    Counterexample(CounterexampleOpts),
    /// Run one verification harness.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    /// Monotone decay of log‖u‖ + γt on exact family segments.
    Energy(EnergyOpts),
    /// Weighted energy inequality with a fitted constant on rescaled segments.
    Inequality(InequalityOpts),
    /// Hölder and log-power stability bounds on the reversed family data.
    Logbound(LogboundOpts),
    /// Spectral integrator against the exact solution on one segment.
    Oracle(OracleOpts),
}

/// Terminal failure of a command.
#[derive(Debug)]
pub enum Failure {
    /// Invalid parameters; exit code 2.
    Usage(String),
    /// A named invariant did not hold; exit code 1.
    Invariant(String),
    /// Any other runtime failure; exit code 1.
    Runtime(String),
}

impl From<loglip_core::Error> for Failure {
    fn from(e: loglip_core::Error) -> Self {
        match e {
            loglip_core::Error::Domain { .. } => Failure::Usage(e.to_string()),
            loglip_core::Error::Invariant { .. } => Failure::Invariant(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

/// Rejects a parameter before any computation starts.
pub fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), Failure> {
    if cond {
        Ok(())
    } else {
        Err(Failure::Usage(msg()))
    }
}

/// One pass/fail line of a report.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Outcome of a command that ran to completion.
pub struct Outcome {
    pub checks: Vec<Check>,
}

/// Header echoed into every JSON report.
#[derive(Serialize)]
pub struct Provenance<'a, T: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub global: &'a Resolved,
    pub options: &'a T,
}

impl<'a, T: Serialize> Provenance<'a, T> {
    pub fn new(command: &'a str, global: &'a Resolved, options: &'a T) -> Self {
        Provenance {
            command,
            version: env!("CARGO_PKG_VERSION"),
            global,
            options,
        }
    }
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let mut global = cli.global;
    global.overlay(&file.global);
    let g = global.resolve();
    match cli.command {
        Command::Weights(mut o) => {
            o.overlay(&file.weights);
            commands::weights::run(&g, &o)
        }
        Command::Counterexample(mut o) => {
            o.overlay(&file.counterexample);
            commands::counterexample::run(&g, &o)
        }
        Command::Verify(v) => match v {
            VerifyCommand::Energy(mut o) => {
                o.overlay(&file.verify.energy);
                commands::verify::energy(&g, &o)
            }
            VerifyCommand::Inequality(mut o) => {
                o.overlay(&file.verify.inequality);
                commands::verify::inequality(&g, &o)
            }
            VerifyCommand::Logbound(mut o) => {
                o.overlay(&file.verify.logbound);
                commands::verify::logbound(&g, &o)
            }
            VerifyCommand::Oracle(mut o) => {
                o.overlay(&file.verify.oracle);
                commands::verify::oracle(&g, &o)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            let mut failed = 0;
            for c in &outcome.checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!("{tag} {}: {}", c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: {failed} check(s) failed");
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Invariant(m)) => {
            eprintln!("error: invariant failure: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
