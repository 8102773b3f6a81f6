use alloc::string::String;
use core::fmt;

/// Errors produced by instance construction and the solver operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Instance or matrix violates a structural invariant.
    InvalidInstance(String),
    /// An operation argument is out of its documented range.
    InvalidArgument(String),
    /// A subset referenced a test index outside the matrix.
    UnknownTest(usize),
    /// A subset is required to be non-empty.
    EmptySubset,
    /// A subset is not contained in the context it must be solved against.
    SubsetNotInContext,
    /// Two rankings do not cover the same variant set.
    MismatchedVariants { left: usize, right: usize },
    /// The exact backend only handles a Kendall target of exactly 1.
    ExactTargetUnsupported,
    /// The instance exceeds the exact backend's size limit.
    ExactTooLarge { limit: usize, got: usize },
    /// An exact backend failed or returned an invalid selection.
    Backend(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInstance(msg) => write!(f, "invalid instance: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::UnknownTest(idx) => write!(f, "unknown test index {idx}"),
            Error::EmptySubset => write!(f, "subset must be non-empty"),
            Error::SubsetNotInContext => write!(f, "subset is not contained in its context"),
            Error::MismatchedVariants { left, right } => {
                write!(f, "rankings cover different variant sets: {left} vs {right}")
            }
            Error::ExactTargetUnsupported => {
                write!(f, "exact backend supports tau = 1 only")
            }
            Error::ExactTooLarge { limit, got } => {
                write!(f, "exact backend limited to {limit} tests, instance has {got}")
            }
            Error::Backend(msg) => write!(f, "exact backend failure: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
