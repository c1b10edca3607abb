use thiserror::Error;

/// Error type shared by every solver and builder in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad caller input: inconsistent sizes, out-of-range parameters,
    /// malformed serialized data.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested state space does not fit in memory or exceeds the
    /// configured hard cap.
    #[error("state space too large: {0}")]
    Capacity(String),

    /// Adaptive step size underflowed; the system is too stiff for the
    /// requested tolerance (typically a near-coincident atom pair).
    #[error("step size underflow at t = {t:.6e} (h = {h:.3e}); problem too stiff for requested tolerance")]
    Stiffness { t: f64, h: f64 },

    /// The integrator hit its step budget before reaching the horizon.
    #[error("step limit exceeded ({0} steps) before reaching integration horizon")]
    StepLimit(usize),

    /// A numerical guard tripped: overflowing couplings, lost invariants,
    /// non-convergent quadrature.
    #[error("accuracy loss: {0}")]
    Accuracy(String),

    /// Random cloud generation could not satisfy its constraints.
    #[error("cloud generation failed: {0}")]
    Generation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
