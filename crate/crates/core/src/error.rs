use thiserror::Error;

/// Errors raised by the model, compiler and simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain violation: {0}")]
    DomainViolation(String),

    /// The request cannot be met under the configured bounds. `needed` is the
    /// smallest resource count that would work, when one exists.
    #[error("capacity exceeded: {what} (needed {}, allowed {allowed})", needed.map_or("more".to_string(), |n| n.to_string()))]
    CapacityExceeded {
        what: String,
        needed: Option<usize>,
        allowed: usize,
    },

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("population left the logical subspace: leakage {leakage:e}")]
    SubspaceViolation { leakage: f64 },

    #[error("verification failed: fidelity {fidelity} below required {required}")]
    VerificationFailed { fidelity: f64, required: f64 },

    #[error("search did not converge: best infidelity {infidelity:e}")]
    NotConverged { infidelity: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
