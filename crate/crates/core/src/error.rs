use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A specification field violates its documented invariant.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An argument lies outside the domain where the formula is defined.
    #[error("domain error in {op}: {reason}")]
    Domain { op: &'static str, reason: String },

    /// Integrator step larger than the resolution bound.
    #[error("step size {dt:e} s exceeds the bound {max:e} s ({reason})")]
    StepSize { dt: f64, max: f64, reason: &'static str },

    /// Sampled series is too short or not uniformly spaced.
    #[error("invalid series: {0}")]
    Series(String),

    /// Truncated Fock-space computation reached the cutoff.
    #[error("unconverged Fock cutoff n_max = {cutoff}: leakage {leakage:e} exceeds {limit:e}")]
    Unconverged { cutoff: usize, leakage: f64, limit: f64 },

    /// Conditioned state has vanishing norm.
    #[error("degenerate state: {0}")]
    Degenerate(String),

    /// Input combination the protocol does not support.
    #[error("rejected: {0}")]
    Rejected(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
