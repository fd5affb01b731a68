use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("group parameter n must be at least 1")]
    InvalidGroup,

    #[error("dilation factor must be positive, got {0}")]
    NonPositiveDilation(f64),

    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("non-finite coordinate in point")]
    NonFinite,

    #[error("alpha = {alpha} must be strictly below the homogeneous dimension {q}")]
    AlphaOutOfRange { alpha: f64, q: f64 },

    #[error("alpha = {0} is a pole of 1/Gamma(alpha/2); use the pole formula")]
    Pole(f64),

    #[error("Gamma has a pole at {0}")]
    GammaPole(f64),

    #[error("kernel is singular at the identity")]
    AtIdentity,

    #[error("derivative order {needed} exceeds jet order {available}")]
    OrderOverflow { needed: usize, available: usize },

    #[error("frame index {index} out of range 1..={max}")]
    FrameIndex { index: usize, max: usize },

    #[error("indices ({i}, {j}) are not a conjugate pair with [Z_i, Z_j] = +-T")]
    NotConjugatePair { i: usize, j: usize },

    #[error("multi-index has {got} entries, expected {expected}")]
    MultiIndexLength { expected: usize, got: usize },

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("root finder failed on bracket [{lo}, {hi}]")]
    RootBracket { lo: f64, hi: f64 },

    #[error("moment table has no entry for {0:?}")]
    MissingMoment(Vec<u32>),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("evaluation budget of {0} inner evaluations exceeded")]
    BudgetExceeded(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
