use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown mode label `{0}`")]
    UnknownMode(String),

    #[error("invalid mode layout: {0}")]
    InvalidLayout(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("linear solve failed: {0}")]
    Factorization(String),

    #[error("iterative solver did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("Liouvillian null space is {0}-dimensional; steady state is not unique")]
    DegenerateNullSpace(usize),

    #[error("steady state failed verification: {0}")]
    Verification(String),

    #[error("hybridization requires {0}")]
    Hybridization(String),

    #[error("mean-field iteration diverged: {0}")]
    MeanField(String),

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
