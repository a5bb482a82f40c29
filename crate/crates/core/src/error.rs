use std::fmt;

use crate::trainer::EpochReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A `rows×cols` pair used in dimension diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims(pub usize, pub usize);

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.0, self.1)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {operand}: expected {expected}, got {actual}")]
    Dimension { operand: &'static str, expected: Dims, actual: Dims },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("state space of 2^{bits} exceeds the enumeration cap of 2^{max}")]
    StateSpace { bits: usize, max: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    Checksum { stored: u64, computed: u64 },

    #[error("training diverged at epoch {epoch}, batch {batch}")]
    Diverged {
        epoch: usize,
        batch: usize,
        /// Telemetry of the epochs completed before the failure.
        reports: Vec<EpochReport>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(operand: &'static str, expected: (usize, usize), actual: (usize, usize)) -> Self {
        Error::Dimension { operand, expected: Dims(expected.0, expected.1), actual: Dims(actual.0, actual.1) }
    }
}
