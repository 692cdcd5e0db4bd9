use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not conform.
    #[error("dimension mismatch: {0}")]
    Conformance(String),

    #[error("matrix is not positive definite: {0}")]
    Definiteness(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// NaN objective, divergence guard, or a non-finite intermediate.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("unstable VAR coefficients: companion spectral radius {0:.6}")]
    Stability(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by malformed user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Conformance(_)
                | Error::IndexOutOfRange(_)
                | Error::Configuration(_)
                | Error::InvalidInput(_)
                | Error::Parse { .. }
                | Error::Io(_)
        )
    }
}
