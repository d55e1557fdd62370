use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular or non-finite input matrix")]
    SingularInput,
    #[error("iterative SVD did not converge after {0} sweeps")]
    ConvergenceFailure(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("invalid theta: {0}")]
    InvalidTheta(String),
    #[error("no singular value gap at index {0}")]
    NoGap(usize),
    #[error("no singular value gap at index {root} for element {index}")]
    NoGapAt { index: usize, root: usize },
    #[error("flags have different theta")]
    ThetaMismatch,
    #[error("sequence diverges in the flag manifold at index {0}")]
    Divergent(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("sequence too short: need at least {needed}, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("elements {0} and {1} coincide")]
    DuplicateElements(usize, usize),
    #[error("point lies outside the domain")]
    OutsideDomain,
    #[error("orbit element {0} is not an automorphism of the domain")]
    NotAutomorphism(usize),
    #[error("ray meets no orbit ball")]
    EmptyIntersection,
    #[error("word ball exceeded the node cap of {0}")]
    ExplosionGuard(usize),
    #[error("pattern is not a reduced word: {0}")]
    NotReduced(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
