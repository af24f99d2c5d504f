use thiserror::Error;

use crate::brw::TailEstimate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A distribution specification is malformed or unsupported by the operation.
    #[error("invalid spec: {0}")]
    Spec(String),

    /// The request needs more memory than the configured budget allows.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An enumeration or table would exceed its size budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("no root found: {0}")]
    NoRoot(String),

    /// Following a word hit the root while letters remained.
    #[error("reached the root at label 0 with {remaining} letters left")]
    Root { remaining: usize },

    #[error("empty input: {0}")]
    Empty(String),

    /// Too few hits to fit a tail rate. The raw counts are kept.
    #[error("underpowered tail estimate: fewer than 3 grid points with at least 10 hits")]
    Underpowered(Box<TailEstimate>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for this error: 1 domain/spec, 2 budget/capacity, 3 underpowered.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity(_) | Error::Budget(_) => 2,
            Error::Underpowered(_) => 3,
            _ => 1,
        }
    }
}
