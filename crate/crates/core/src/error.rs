use thiserror::Error;

/// Errors raised by the slice computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed input (nonpositive slope, point outside the projection, ...).
    #[error("invalid input: {0}")]
    Validation(String),

    /// The requested enumeration depth or word length is beyond what the
    /// exact routines will attempt.
    #[error("capacity exceeded: {what} = {requested} (limit {limit})")]
    Capacity {
        what: &'static str,
        requested: u64,
        limit: u64,
    },

    /// A structural property that must hold for the transition matrices
    /// failed. Indicates a construction bug rather than bad input.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// Argument outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_capacity(what: &'static str, requested: usize, limit: usize) -> Result<()> {
    if requested > limit {
        Err(Error::Capacity {
            what,
            requested: requested as u64,
            limit: limit as u64,
        })
    } else {
        Ok(())
    }
}
