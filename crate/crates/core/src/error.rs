use std::io;

use thiserror::Error;

/// Errors raised while decoding a spike frame.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("bad magic {0:02x?}, expected \"DPSN\"")]
    BadMagic([u8; 4]),
    #[error("unsupported frame version {0}")]
    UnsupportedVersion(u8),
    #[error("truncated frame: header declares {declared} bytes, got {actual}")]
    Truncated { declared: usize, actual: usize },
    #[error("frame carries {extra} trailing bytes past the declared payload")]
    TrailingBytes { extra: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("numerical divergence in neuron {neuron} at step {step}")]
    NumericalDivergence { neuron: u32, step: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible network spec: {0}")]
    InfeasibleSpec(String),

    #[error("cannot split {columns} columns over {ranks} ranks")]
    InfeasiblePartition { ranks: usize, columns: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("frame corruption: {0}")]
    FrameCorruption(#[from] FrameError),

    #[error("exchange failure at step {step}: rank {rank} {reason}")]
    ExchangeFailure {
        rank: usize,
        step: u32,
        reason: String,
    },

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("calibration failed after {iterations} probes: achieved {achieved_hz:.3} Hz, target {target_hz} Hz")]
    CalibrationFailure {
        achieved_hz: f64,
        target_hz: f64,
        iterations: usize,
    },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("invalid config:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Whether the error comes from bad inputs rather than a failed run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::InfeasibleSpec(_)
                | Error::InfeasiblePartition { .. }
                | Error::UndefinedMetric(_)
                | Error::Config(_)
        )
    }

    /// Attach the step index to a divergence raised by a neuron integrator.
    pub(crate) fn at_step(self, neuron: u32, step: u32) -> Self {
        match self {
            Error::NumericalDivergence { .. } => Error::NumericalDivergence { neuron, step },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
