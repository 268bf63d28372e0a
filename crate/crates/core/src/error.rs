use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spin: 2K must be a positive integer, got {0}")]
    InvalidSpin(i64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("effective transverse rate is negative (gamma2 = {gamma2})")]
    NegativeGamma2 { gamma2: f64 },

    #[error("steady state is not unique: null dimension {null_dim}, singular gap ratio {gap_ratio:.3e}")]
    NullSpaceDegenerate { null_dim: usize, gap_ratio: f64 },

    #[error("steady state residual {residual:.3e} exceeds bound {bound:.3e}")]
    ResidualTooLarge { residual: f64, bound: f64 },

    #[error("steady state is not positive: minimum eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("no sign change of k_y in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("root refinement did not converge: |k_y({omega})| = {k_y:.3e}")]
    RootNotConverged { omega: f64, k_y: f64 },

    #[error("root at omega = {omega} rejected: k_x = {k_x} is not positive")]
    SolutionRejected { omega: f64, k_x: f64 },

    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("state became invalid at t = {t}: {reason}")]
    StateInvalid { t: f64, reason: String },

    #[error("series too short: {len} samples, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("need at least 2 peaks, found {0}")]
    TooFewPeaks(usize),

    #[error("unknown window {0:?}")]
    UnknownWindow(String),
}

pub type Result<T> = std::result::Result<T, Error>;
