use thiserror::Error;

/// Errors raised by the simulation, policy, Fisher and training layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("index {index} out of range for {context} (limit {limit})")]
    Index {
        context: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("invalid ansatz: {0}")]
    Ansatz(String),

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate sampled action {action}: probability {probability:e} below 1e-12")]
    DegenerateAction { action: usize, probability: f64 },

    #[error("matrix is singular (min eigenvalue {min_eigenvalue:e}); regularize with eps > 0 before taking a negative power")]
    Singular { min_eigenvalue: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    Asymmetric { asymmetry: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("environment episode is finished; reset before stepping")]
    EpisodeDone,

    #[error("invalid action {action} for environment with {n_actions} actions")]
    InvalidAction { action: usize, n_actions: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            actual,
        })
    }
}
