//! Figure-oriented subcommands: argument types, config resolution, and
//! CSV/JSON output.

pub mod commands;
pub mod config;
pub mod output;

use clap::{Parser, Subcommand};

pub use commands::{AuditArgs, LadderArgs, LinewidthArgs, RatesArgs, SpectrumArgs};
pub use config::{CommonArgs, Format, ParamOverrides, Preset, RunConfig};
pub use output::{read_csv, read_json, Report, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Numerical(#[from] crate::Error),

    #[error("truncation audit failed: {0}")]
    Audit(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const IO: i32 = 4;

    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Numerical(crate::Error::InvalidParameter(_)) => Self::CONFIG,
            Self::Numerical(_) | Self::Audit(_) => Self::NUMERICAL,
            Self::Io { .. } => Self::IO,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ultranarrow", version, about = "Dressed-state emission spectra of two qubits in a cavity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalized energy ladder over a coupling sweep.
    Ladder(LadderArgs),
    /// Relaxation rates among the lowest four levels over a coupling sweep.
    Rates(RatesArgs),
    /// Numerical and analytic emission spectra of the driven four-level model.
    Spectrum(SpectrumArgs),
    /// Narrow-to-central linewidth ratios over γ and κ sweeps.
    Linewidths(LinewidthArgs),
    /// Four-level model against a larger rotating-frame truncation.
    Audit(AuditArgs),
}

/// Runs one subcommand and writes its report.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ladder(a) => commands::cmd_ladder(&a),
        Command::Rates(a) => commands::cmd_rates(&a),
        Command::Spectrum(a) => commands::cmd_spectrum(&a),
        Command::Linewidths(a) => commands::cmd_linewidths(&a),
        Command::Audit(a) => commands::cmd_audit(&a),
    }
}
