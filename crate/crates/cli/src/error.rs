use thiserror::Error;

/// Failures of a run, each with its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration does not parse or violates the schema.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] essform::Error),
    /// `emit` was asked for a table whose analysis is not in the report.
    #[error("report has no {0} data")]
    MissingAnalysis(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::MissingAnalysis(_) => 4,
            CliError::Io { .. } => 2,
        }
    }
}
