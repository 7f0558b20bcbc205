use thiserror::Error;

/// Errors produced by the simulator core.
///
/// The three variants map onto the CLI exit-code contract: domain errors are
/// caller mistakes (exit 2), regime errors are physically meaningful refusals
/// (exit 3), and numerics errors indicate an internal consistency check failed
/// (exit 4).
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the operation's domain (negative frequency, bad grid, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested quantity does not exist in this parameter regime
    /// (e.g. asymptotic sensitivity without two bound states).
    #[error("regime error: {0}")]
    Regime(String),
    /// A numerical consistency check failed (solver sanity bound, imaginary
    /// residue, bracket sign fault).
    #[error("numerical consistency error: {0}")]
    Numerics(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn regime(msg: impl Into<String>) -> Self {
        Error::Regime(msg.into())
    }

    pub(crate) fn numerics(msg: impl Into<String>) -> Self {
        Error::Numerics(msg.into())
    }
}
