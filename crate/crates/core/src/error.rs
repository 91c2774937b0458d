use thiserror::Error;

/// Errors raised by the distribution, fitting and IO layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside the domain of the function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// Distribution parameters failed validation.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Blend quantiles are not ordered correctly for the sign of the shape.
    #[error("invalid blend spec: {0}")]
    InvalidSpec(String),

    /// An iterative routine ran out of iterations.
    #[error("{routine} failed to converge after {iterations} iterations")]
    Convergence {
        routine: &'static str,
        iterations: usize,
    },

    /// Input data cannot support the requested computation.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A series or configuration failed validation.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    /// True for errors caused by malformed or invalid user data.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Validation(_)
                | Error::Parse { .. }
                | Error::DegenerateData(_)
                | Error::InvalidParams(_)
                | Error::InvalidSpec(_)
                | Error::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
