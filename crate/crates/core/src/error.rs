//! Error type shared by every module in the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the toolkit.
///
/// The split matters to callers: [`Error::InvalidArgument`] means the call
/// itself was malformed (the CLI maps it to a usage exit), while the other
/// variants describe a computation that was attempted and could not finish.
#[derive(Debug, Error)]
pub enum Error {
    /// The caller violated an argument contract: bad dimensions, an
    /// out-of-range knob, or a decoder asked to run on an incompatible code.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numeric-domain violation, e.g. a non-positive variance or a zero
    /// stretch factor.
    #[error("domain error: {0}")]
    Domain(String),

    /// A cross product or expansion would exceed the configured size cap.
    #[error("capacity exceeded: {requested} components requested, cap is {cap}")]
    Capacity { requested: usize, cap: usize },

    /// Randomized construction did not produce a valid object within its
    /// retry budget.
    #[error("construction failed after {attempts} attempts: {reason}")]
    Construction { attempts: usize, reason: String },

    /// The operation needs state the value does not carry yet (for example
    /// encoding with a parity-check-only code whose inverse was never taken).
    #[error("missing state: {0}")]
    MissingState(String),

    /// A matrix was singular where an invertible one was required.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// Message passing divided by a zero precision at a specific node.
    #[error("singularity at node {node}: {reason}")]
    NodeSingularity { node: usize, reason: String },

    /// An iterative estimate ran out of budget before reaching its tolerance.
    /// `best` is the last estimate, usable as a bound.
    #[error("estimate did not converge: {context} (best value {best})")]
    Estimation { context: String, best: f64 },

    /// File input could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that indicate the *call* was wrong rather than the
    /// computation failing; the CLI exits 1 for these and 2 otherwise.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidArgument(_))
    }
}
