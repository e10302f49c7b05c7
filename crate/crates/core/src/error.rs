use thiserror::Error;

use crate::maximal::Enclosure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A request would exceed a configured hard cap (mode count, degree,
    /// iteration budget).
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// The certified supremum could not be tightened to the requested width
    /// within the evaluation budget. `best` is still a valid enclosure.
    #[error("supremum enclosure [{:.6e}, {:.6e}] did not reach tolerance {tol:.3e}", best.lo, best.hi)]
    SupUnresolved { best: Enclosure, tol: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("divergent constant: {0}")]
    DivergentConstant(String),

    #[error("empty ensemble: {0}")]
    EmptyEnsemble(String),

    #[error("model {0} has no discrete spectrum")]
    NonCompact(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
