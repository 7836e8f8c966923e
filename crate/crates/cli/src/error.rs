use std::fmt;

use fairdiv::Error;

/// Failure of a subcommand; each kind maps to one process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or unparsable input, or an output that could not be written.
    Input(String),
    /// A readable but invalid or incompatible configuration.
    Config(String),
    /// The market solver gave up; carries the KKT report text.
    Solver(String),
    /// `audit` found violations.
    AuditFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::AuditFailed(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, e: impl fmt::Display) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Config(m) | CliError::AuditFailed(m) => f.write_str(m),
            CliError::Solver(m) => write!(f, "solver failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { ref report, .. } => CliError::Solver(format!("{e}\n{report}")),
            Error::Json(j) => CliError::Input(j.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}
