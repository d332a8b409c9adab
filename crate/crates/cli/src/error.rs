use std::path::{Path, PathBuf};

use engelgap::ModelError;
use serde::Serialize;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const IO: i32 = 4;
    pub const DATA: i32 = 5;
    pub const INVARIANT: i32 = 6;
    pub const NO_CONVERGENCE: i32 = 10;
    pub const BRACKET: i32 = 11;
    pub const INFEASIBLE: i32 = 12;
    pub const MISMATCH: i32 = 13;
    pub const TARGET_UNREACHABLE: i32 = 14;
    pub const PARAMETER: i32 = 15;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("invariant checks failed: {}", .0.join("; "))]
    Invariant(Vec<String>),

    #[error("usage: {0}")]
    Usage(String),
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    exit_code: i32,
    message: String,
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Invariant(_) => "invariant",
            CliError::Usage(_) => "usage",
            CliError::Model(e) => match e.root() {
                ModelError::InvalidParameter { .. } | ModelError::NotStochastic(_) => "parameter",
                ModelError::NoConvergence { .. } => "no-convergence",
                ModelError::BracketFailure { .. } => "bracket-failure",
                ModelError::Subsistence { .. }
                | ModelError::BorrowingInfeasible { .. }
                | ModelError::SectorInfeasible { .. }
                | ModelError::SavingsOffGrid { .. }
                | ModelError::Impatience { .. } => "infeasible",
                ModelError::Mismatch(_) => "mismatch",
                ModelError::Data(_) => "data",
                ModelError::BracketExhausted { .. } => "target-unreachable",
                ModelError::IdentityViolation { .. } | ModelError::Iterate { .. } => "internal",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" => exit::CONFIG,
            "io" => exit::IO,
            "invariant" => exit::INVARIANT,
            "usage" => exit::USAGE,
            "parameter" => exit::PARAMETER,
            "no-convergence" => exit::NO_CONVERGENCE,
            "bracket-failure" => exit::BRACKET,
            "infeasible" => exit::INFEASIBLE,
            "mismatch" => exit::MISMATCH,
            "data" => exit::DATA,
            "target-unreachable" => exit::TARGET_UNREACHABLE,
            _ => exit::INTERNAL,
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ErrorRecord {
            error: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
        })
        .expect("error record serializes")
    }
}
