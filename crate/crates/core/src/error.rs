use std::fmt;

use thiserror::Error;

/// Serving phase, used to tag infeasibility and binding-constraint reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Prefill,
    Decode,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Prefill => f.write_str("prefill"),
            Phase::Decode => f.write_str("decode"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error(
        "unstable queue: arrival rate {arrival_rate} req/s >= service rate {service_rate} req/s"
    )]
    UnstableQueue {
        arrival_rate: f64,
        service_rate: f64,
    },

    #[error("infeasible {phase} SLO: {reason}")]
    InfeasibleSlo { phase: Phase, reason: String },

    #[error("batch size {batch} outside measured range [{min}, {max}]")]
    OutOfRange { batch: f64, min: f64, max: f64 },

    #[error("malformed decode profile: {0}")]
    MalformedProfile(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }

    /// The phase an infeasible-SLO error refers to, if any.
    pub fn infeasible_phase(&self) -> Option<Phase> {
        match self {
            Error::InfeasibleSlo { phase, .. } => Some(*phase),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
