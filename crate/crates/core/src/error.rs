use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input data or arguments outside an operation's domain.
    Data,
    /// A numerical or estimation failure on otherwise valid input.
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("empty panel: no unit has complete observations of {0}")]
    EmptyPanel(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("singular weighted Gram matrix (reciprocal condition {rcond:.3e})")]
    Singular { rcond: f64 },

    #[error("estimation failed at time {time}: {reason}")]
    Estimation { time: i64, reason: String },

    #[error("bandwidth selection failed: {0}")]
    Selection(String),

    #[error("shift test failed for `{var}`: {reason}")]
    ShiftTest { var: String, reason: String },

    #[error("column `{0}` has zero variance and cannot be standardized")]
    ZeroVariance(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Singular { .. }
            | Error::Estimation { .. }
            | Error::Selection(_)
            | Error::ShiftTest { .. } => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }
}
