//! Error type shared by the whole engine.

use std::fmt;

/// Everything that can go wrong when building scenarios, evaluating
/// allocations or running the solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scenario is structurally broken (unknown ids, duplicates, ...).
    Scenario(String),
    /// An allocation does not fit the scenario it is used with.
    Allocation(String),
    /// A contested base station carries zero total weight; rates are
    /// undefined there.
    DegenerateAllocation { station: String },
    /// The aggregate weight of the other slices vanishes at a contested
    /// station, so the best response is undefined. A positive epsilon
    /// perturbation regularizes this.
    ZeroOthersLoad { station: String },
    /// The requested operation does not support this fairness parameter.
    UnsupportedAlpha {
        slice: String,
        alpha: f64,
        reason: &'static str,
    },
    /// An operation needs a finite utility but got an infinite one.
    NonFiniteUtility { slice: String },
    /// Capacity scaling is ill-posed for a slice with exactly zero utility
    /// and a power-law utility family.
    ZeroUtilityScaling { slice: String },
    /// A numeric routine failed (bracket not found, residual not met, ...).
    Numeric(String),
    /// A best-response failure inside the dynamics loop, with context.
    Dynamics {
        round: usize,
        slice: String,
        source: Box<Error>,
    },
    /// Invalid generator or solver parameters.
    InvalidParams(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Scenario(msg) => write!(f, "invalid scenario: {msg}"),
            Error::Allocation(msg) => write!(f, "invalid allocation: {msg}"),
            Error::DegenerateAllocation { station } => write!(
                f,
                "degenerate allocation: contested station `{station}` has zero load"
            ),
            Error::ZeroOthersLoad { station } => write!(
                f,
                "other slices place no weight at contested station `{station}`; \
                 the best response is undefined (use an epsilon perturbation)"
            ),
            Error::UnsupportedAlpha { slice, alpha, reason } => {
                write!(f, "slice `{slice}` has alpha = {alpha}: {reason}")
            }
            Error::NonFiniteUtility { slice } => {
                write!(f, "slice `{slice}` has a non-finite utility")
            }
            Error::ZeroUtilityScaling { slice } => write!(
                f,
                "slice `{slice}` has zero utility and alpha != 1; capacity scaling \
                 cannot change its utility"
            ),
            Error::Numeric(msg) => write!(f, "numeric failure: {msg}"),
            Error::Dynamics { round, slice, source } => {
                write!(f, "dynamics failed at round {round}, slice `{slice}`: {source}")
            }
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that indicate bad input rather than solver trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Scenario(_)
                | Error::Allocation(_)
                | Error::InvalidParams(_)
                | Error::UnsupportedAlpha { .. }
        )
    }
}
