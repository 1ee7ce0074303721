//! Command-line surface: configuration, dispatch and report emission.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::ck_algebra::MeasureError;
use crate::shift_space::ShiftError;
use crate::thermo::ThermoError;
use crate::transfer_op::TransferError;

pub use commands::run;
pub use config::{load_config, parse_config, RunConfig};
pub use report::{emit_report, render, Format, Payload, ReportDocument, SuiteResult, Timing};

#[derive(Debug, Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical non-convergence: {0}")]
    NoConvergence(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::NoConvergence(_) => 3,
            AppError::Invariant(_) => 4,
            AppError::Io(_) => 5,
        }
    }
}

impl From<ShiftError> for AppError {
    fn from(e: ShiftError) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<TransferError> for AppError {
    fn from(e: TransferError) -> Self {
        match e {
            TransferError::NoConvergence { .. } => AppError::NoConvergence(e.to_string()),
            TransferError::DimensionMismatch { .. } => AppError::Invariant(e.to_string()),
            _ => AppError::Config(e.to_string()),
        }
    }
}

impl From<ThermoError> for AppError {
    fn from(e: ThermoError) -> Self {
        match e {
            ThermoError::Transfer(t) => t.into(),
            ThermoError::NoConvergence { .. } => AppError::NoConvergence(e.to_string()),
            ThermoError::InequalityViolation { .. } | ThermoError::MonotonicityViolation { .. } => {
                AppError::Invariant(e.to_string())
            }
            ThermoError::HNotExceedingOne { .. } | ThermoError::InvalidArgument(_) => {
                AppError::Config(e.to_string())
            }
        }
    }
}

impl From<MeasureError> for AppError {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::Thermo(t) => t.into(),
            MeasureError::Transfer(t) => t.into(),
            MeasureError::Potential(p) => AppError::Config(p.to_string()),
            other => AppError::Invariant(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ruelle-kms",
    version,
    about = "Transfer-operator spectra, inverse temperatures and KMS states"
)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Include wall-clock time in the report (breaks byte-determinism).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Matrix, primitivity and potential range.
    Validate,
    /// Perron data at one inverse temperature.
    Spectrum {
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
    },
    /// λ(β) on an evenly spaced grid of `steps + 1` points.
    Curve {
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
    },
    /// The inverse temperature with λ(β) = 1.
    BetaStar,
    /// ψ(S_μ S_ρ*) at β* for a monomial written `mu|rho`.
    Kms {
        #[arg(long)]
        monomial: String,
    },
    /// KMS margins on random monomial pairs at β*.
    KmsCheck {
        #[arg(long, default_value_t = 200)]
        pairs: usize,
    },
    /// Every invariant suite.
    Check,
}

impl Command {
    pub fn echo(&self) -> String {
        match self {
            Command::Validate => "validate".into(),
            Command::Spectrum { beta } => format!("spectrum --beta {beta}"),
            Command::Curve { from, to, steps } => {
                format!("curve --from {from} --to {to} --steps {steps}")
            }
            Command::BetaStar => "beta-star".into(),
            Command::Kms { monomial } => format!("kms --monomial {monomial}"),
            Command::KmsCheck { pairs } => format!("kms-check --pairs {pairs}"),
            Command::Check => "check".into(),
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn main_with(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(doc) if doc.passed() => 0,
        Ok(doc) => {
            let failed: Vec<&str> = doc
                .suites
                .iter()
                .filter(|s| !s.passed)
                .map(|s| s.name.as_str())
                .collect();
            eprintln!("invariant violation in: {}", failed.join(", "));
            4
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<ReportDocument, AppError> {
    let start = Instant::now();
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| AppError::Config("--config is required".into()))?;
    let cfg = load_config(path)?;
    let mut doc = run(&cli.command, &cfg)?;
    if cli.timing {
        doc.timing = Some(Timing {
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });
    }
    emit_report(&doc, cli.format, cli.out.as_deref())?;
    Ok(doc)
}
