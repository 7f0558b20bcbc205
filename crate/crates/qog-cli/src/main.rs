//! `qog` — scenario runner and analysis front end for the two-mode optical
//! gyroscope simulator.
//!
//! Exit codes: 0 success, 2 usage/parse errors, 3 physics-regime errors,
//! 4 numerical-consistency failures.

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod output;
mod scenario;

use commands::{KernelCheckArgs, RunOptions, SpectrumArgs, SweepArgs};

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Io(String),
    Qog(qog::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::Qog(e) => write!(f, "{e}"),
        }
    }
}

impl From<qog::Error> for CliError {
    fn from(e: qog::Error) -> Self {
        CliError::Qog(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Qog(qog::Error::Domain(_)) => 2,
            CliError::Qog(qog::Error::Regime(_)) => 3,
            CliError::Qog(qog::Error::Numerics(_)) => 4,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qog",
    version,
    about = "Two-mode optical gyroscope simulator: rotation-sensing precision under exact non-Markovian photon dissipation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct CommonRunFlags {
    /// Output directory for CSVs and the metadata sidecar.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker-pool size for concurrent points (default: rayon's choice).
    #[arg(long)]
    workers: Option<usize>,
    /// Override the grid step.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the time horizon.
    #[arg(long)]
    tmax: Option<f64>,
}

impl CommonRunFlags {
    fn options(&self) -> RunOptions {
        RunOptions { out_dir: self.out.clone(), workers: self.workers, dt: self.dt, t_max: self.tmax }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file: one CSV per requested series plus a metadata sidecar.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        flags: CommonRunFlags,
    },
    /// Bound-state regime report: thresholds, pole energies and residue weights.
    Spectrum {
        /// Dimensionless coupling constant.
        #[arg(long)]
        eta: f64,
        /// Ohmicity index.
        #[arg(long)]
        s: f64,
        /// Angular velocity Omega (units of omega0).
        #[arg(long)]
        omega: f64,
        /// Bath cutoff; without it only the binding thresholds are printed.
        #[arg(long)]
        omega_c: Option<f64>,
        /// Carrier frequency (natural units).
        #[arg(long, default_value_t = 1.0)]
        omega0: f64,
    },
    /// Sweep one scalar parameter: a CSV row per value, optionally power-law fitted.
    Sweep {
        scenario: PathBuf,
        /// Parameter to sweep (overrides the [sweep] section).
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values (overrides the [sweep] section).
        #[arg(long)]
        values: Option<String>,
        /// Report the envelope node nearest this time instead of the global minimum.
        #[arg(long)]
        at_t: Option<f64>,
        /// Append a power-law fit row and write a fit report.
        #[arg(long)]
        fit: bool,
        #[command(flatten)]
        flags: CommonRunFlags,
    },
    /// Compare the closed-form correlation kernel against the quadrature oracle.
    KernelCheck {
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        omega_c: f64,
        #[arg(long)]
        s: f64,
        /// Largest lag to check.
        #[arg(long, default_value_t = 50.0)]
        x_max: f64,
        /// Number of lag samples.
        #[arg(long, default_value_t = 26)]
        points: usize,
        /// Acceptance threshold on the relative deviation.
        #[arg(long, default_value_t = 1e-8)]
        rel_tol: f64,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Run { scenario, flags } => commands::cmd_run(&scenario, &flags.options()),
        Cmd::Spectrum { eta, s, omega, omega_c, omega0 } => {
            commands::cmd_spectrum(&SpectrumArgs { eta, s, omega, omega_c, omega0 })
        }
        Cmd::Sweep { scenario, param, values, at_t, fit, flags } => commands::cmd_sweep(
            &scenario,
            &SweepArgs { param, values, at_t, fit },
            &flags.options(),
        ),
        Cmd::KernelCheck { eta, omega_c, s, x_max, points, rel_tol } => {
            commands::cmd_kernel_check(&KernelCheckArgs { eta, omega_c, s, x_max, points, rel_tol })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
