use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A matrix that was required to be unitary is not.
    #[error("matrix is not unitary (max deviation of M^dagger M from identity: {0:.3e})")]
    NotUnitary(f64),

    /// A density matrix failed validation.
    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    /// Angle synthesis or another self-checking computation failed to reproduce its target.
    #[error("internal consistency failure: {0}")]
    Consistency(String),

    /// A least-squares fit had no unique solution.
    #[error("fit failed: {0}")]
    Fit(String),

    /// Process-matrix construction did not pass its oracle self-test.
    #[error("construction failed: {0}")]
    Construction(String),

    /// Configuration could not be parsed or failed validation.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
