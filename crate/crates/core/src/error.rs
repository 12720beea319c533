use thiserror::Error;

/// Failure modes shared by every module of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("exponent p = {p} is not subcritical for N = {dim}")]
    NonSubcriticalExponent { dim: usize, p: f64 },
    #[error("shooting failed: {0}")]
    ShootingFailed(String),
    #[error("quadrature did not converge: {what} (relative change {rel_change:.3e})")]
    QuadratureNotConverged { what: &'static str, rel_change: f64 },
    #[error("argument {s} is outside the tabulated range of the profile")]
    OutOfTabulatedRange { s: f64 },
    #[error("balancing function has no sign change on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("configuration has zero minimal separation")]
    ZeroSeparation,
    #[error("minimal separation {rho} is below the required {min}")]
    SeparationTooSmall { rho: f64, min: f64 },
    #[error("dhat = {dhat} must exceed m + 1 = {bound}")]
    DhatTooSmall { dhat: f64, bound: f64 },
    #[error("frequency block {freq} is singular (determinant {det:.3e})")]
    SingularBlock { freq: usize, det: f64 },
    #[error("tangential forcing has nonzero mean {mean:.3e}")]
    NonZeroMeanForcing { mean: f64 },
    #[error("grid step {step} too coarse: halving changes the energy by {rel_change:.3e}")]
    GridTooCoarse { step: f64, rel_change: f64 },
    #[error("fixed-point iteration is not contracting (last step norm {last_step:.3e})")]
    NotContracting { last_step: f64 },
    #[error("potential decay bound violated at radius {radius} (ratio {ratio:.3e})")]
    DecayViolated { radius: f64, ratio: f64 },
    #[error("potential infimum {inf_v} is not positive")]
    InfimumViolated { inf_v: f64 },
    #[error("parameters violate the decay regime: {0}")]
    RegimeViolated(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
