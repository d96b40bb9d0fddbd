//! Error type shared across the crate.

use alloc::string::String;

/// Errors produced by series validation, statistics, and generators.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// Input values contain a tie and the tie policy is [`crate::TiePolicy::Reject`].
    #[error("tied values at indices {first} and {second}")]
    Ties { first: usize, second: usize },
    /// A parameter or input is outside the supported domain.
    #[error("{0}")]
    Domain(String),
    /// Exact enumeration was requested for an n beyond the hard factorial limit.
    #[error("exact enumeration supports n <= {limit}, got n = {n}")]
    EnumerationLimit { n: usize, limit: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

/// Shorthand for `Error::Domain` with formatted message.
macro_rules! domain {
    ($($arg:tt)*) => {
        $crate::error::Error::Domain(alloc::format!($($arg)*))
    };
}
pub(crate) use domain;
