use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested operating point cannot be realized, e.g. a rate at or
    /// above capacity leaves a hop with a zero exponent.
    #[error("infeasible{}: {reason}", hop_suffix(*.hop))]
    Infeasible { hop: Option<usize>, reason: String },

    /// A hop with failure probability 1 makes the ARQ latency unbounded.
    #[error("infinite expected latency on hop {hop}: failure probability {prob}")]
    InfiniteLatency { hop: usize, prob: f64 },

    /// Brute-force oracles refuse instances they cannot enumerate.
    #[error("instance too large: {0}")]
    InstanceTooLarge(String),
}

fn hop_suffix(hop: Option<usize>) -> String {
    match hop {
        Some(h) => format!(" on hop {h}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn infeasible(hop: Option<usize>, reason: impl Into<String>) -> Self {
        Error::Infeasible {
            hop,
            reason: reason.into(),
        }
    }

    /// Zero-based hop index attached to the error, when there is one.
    pub fn hop(&self) -> Option<usize> {
        match self {
            Error::Infeasible { hop, .. } => *hop,
            Error::InfiniteLatency { hop, .. } => Some(*hop),
            _ => None,
        }
    }

    /// Re-tag an error with the hop it came from.
    pub(crate) fn at_hop(self, hop: usize) -> Self {
        match self {
            Error::Infeasible { hop: None, reason } => Error::Infeasible {
                hop: Some(hop),
                reason,
            },
            Error::Domain(reason) => Error::Infeasible {
                hop: Some(hop),
                reason,
            },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
