use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("root iteration did not converge for polynomial {poly}")]
    RootsNoConvergence { poly: String },

    #[error("division by the zero rational function")]
    DivisionByZero,

    #[error("improper rational function: {0}")]
    Improper(String),

    #[error("marginally stable A (spectral radius estimate {radius})")]
    MarginallyStable { radius: f64 },

    #[error("not strictly stable: {0}")]
    Unstable(String),

    #[error("numerically singular matrix (condition estimate {cond:e})")]
    Singular { cond: f64 },

    #[error("zero mean channel: every alpha_i * p_i vanishes, the loop cannot be closed")]
    ZeroMeanChannel,

    #[error("negative spectrum value {value:e} at angle {theta}")]
    NegativeSpectrum { theta: f64, value: f64 },

    #[error(
        "marginal spectral factor: spectral density vanishes on the unit circle near angle {theta}"
    )]
    MarginalSpectralFactor { theta: f64 },

    #[error("marginal mean channel: H has a zero on the unit circle at {0}")]
    MarginalMeanChannel(String),

    #[error("unstable pole-zero cancellation between mean channel and plant at z = {0}")]
    UnstableCancellation(String),

    #[error("closed loop is degenerate: 1 - HKP vanishes identically")]
    DegenerateLoop,

    #[error("not mean-square input-output stabilizable (index {index})")]
    NotStabilizable { index: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
