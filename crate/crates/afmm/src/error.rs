//! Crate-wide error type.

/// Convenience alias used by all fallible operations in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors reported by generators, tree construction, the evaluation engine
/// and the optimizer.
///
/// `Parameter` and `Input` are deliberately distinct: the former means a
/// configuration value is outside its documented domain (exit code 2 in the
/// CLI), the latter means the data itself is unusable (malformed file,
/// coordinate outside the unit cube, ...).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value is outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Input data is malformed or out of range.
    #[error("invalid input: {0}")]
    Input(String),

    /// Not enough data to carry out a fit or an estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A least-squares fit failed (degenerate system).
    #[error("fit failed: {0}")]
    Fit(String),

    /// Verification checks failed (used by the CLI `verify` subcommand).
    #[error("verification failed: {0}")]
    Verification(String),

    /// File I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV parse failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Input(_) | Error::InsufficientData(_) => 2,
            Error::Verification(_) => 3,
            _ => 1,
        }
    }
}
