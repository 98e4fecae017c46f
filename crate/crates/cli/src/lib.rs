//! Batch driver for the twistlab numerics: parameter sweeps, property
//! suites, growth-law fits and CSV/JSON/SVG reports.

pub mod config;
pub mod emit;
pub mod fit;
pub mod records;
pub mod suites;
pub mod sweep;

pub use fit::{fit_growth, FitResult};
pub use records::{Quantity, RecordDirection, SweepRecord};
pub use suites::{check_suite, Suite, SuiteOptions, SuiteReport};
pub use sweep::{run_sweep, Budget, SweepOptions, SweepOutcome};

/// Version of every JSON document this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] twistlab_core::Error),

    #[error("unknown {kind} {value:?}")]
    UnknownTag { kind: &'static str, value: String },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("nothing to emit: {0}")]
    Empty(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
