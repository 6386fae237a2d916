use thiserror::Error;

/// Failures of a CLI run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or input; nothing was computed.
    #[error("validation error: {0}")]
    Validation(String),

    /// The computation itself failed (overflow, non-finite values, infeasible target).
    #[error("numerical failure ({kind}): {message}")]
    Numerical { kind: String, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) => 1,
        }
    }

    pub fn numerical(kind: &str, message: impl Into<String>) -> Self {
        CliError::Numerical {
            kind: kind.into(),
            message: message.into(),
        }
    }
}

impl From<logldp_core::Error> for CliError {
    fn from(e: logldp_core::Error) -> Self {
        use logldp_core::Error as E;
        let kind = match &e {
            E::Overflow { .. } => "overflow",
            E::NonFinite { .. } => "non_finite",
            E::Divergence(_) => "divergence",
            _ => return CliError::Validation(e.to_string()),
        };
        CliError::numerical(kind, e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
