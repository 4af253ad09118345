use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which region of a ball-containment check failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Indices below the first modified coordinate.
    Head,
    /// The patched block.
    Block,
    /// Indices at or past the block start that the patch leaves alone.
    Tail,
    /// Radius-only comparison between balls with identical centers.
    Radius,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Head => "head",
            Region::Block => "block",
            Region::Tail => "tail",
            Region::Radius => "radius",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("sieve capacity exceeded: need primes up to {needed}, budget is {limit}")]
    Capacity { needed: u64, limit: u64 },

    #[error("sequence has no certified tail bound: {0}")]
    NoCertifiedTail(String),

    #[error("index overflow while {0}")]
    IndexOverflow(&'static str),

    #[error("empty prefix: {0}")]
    EmptyPrefix(&'static str),

    #[error("containment violated in {region} region (margin {margin:e})")]
    Containment { region: Region, margin: f64 },

    #[error("balls are not comparable: {0}")]
    Uncomparable(String),

    #[error("adversary fault in round {round}: {reason}")]
    AdversaryFault { round: usize, reason: String },

    #[error(
        "scan cap {cap} exceeded for k = {k}{}",
        .last_violation.map_or(String::new(), |n| format!(" (ratio bound still violated at n = {n})"))
    )]
    ScanCapExceeded {
        k: u64,
        cap: u64,
        last_violation: Option<u64>,
    },

    #[error("threshold certification failed for k = {k}: ratio {ratio:e} > {bound:e} at n = {n}")]
    Certification { k: u64, n: u64, ratio: f64, bound: f64 },

    #[error("verification failed: {0}")]
    Verification(String),
}

impl Error {
    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }
}
