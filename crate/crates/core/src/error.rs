use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Hurst parameter must lie in (0, 1), got {0}")]
    InvalidHurst(f64),

    #[error("{operation} requires H > {bound}, got H = {got}")]
    HurstOutOfRange {
        operation: &'static str,
        bound: f64,
        got: f64,
    },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("increment covariance is not numerically positive definite ({points} grid points, H = {hurst}); the grid is too fine for double precision")]
    NotPositiveDefinite { points: usize, hurst: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not unipotent (g - I is not nilpotent)")]
    NotUnipotent,

    #[error("matrix is singular")]
    Singular,

    #[error("basis carries no Carnot grading")]
    Ungraded,

    #[error("basis is not orthonormal for an Ad-invariant inner product")]
    NotOrthonormal,

    #[error("basis is not nilpotent or its step is undeclared")]
    NotNilpotent,

    #[error("letter {letter} out of range for an alphabet of {size} letters")]
    LetterOutOfRange { letter: usize, size: usize },

    #[error("word length {len} exceeds the maximum of {max}")]
    WordTooLong { len: usize, max: usize },

    #[error("empty word")]
    EmptyWord,

    #[error("not a permutation: {0:?}")]
    NotPermutation(Vec<usize>),

    #[error("time {0} is not a grid point")]
    OffGrid(f64),

    #[error("grids are not nested")]
    GridsNotNested,

    #[error("sample does not carry the Wiener increments that generated it")]
    MissingWiener,

    #[error("incompatible reports: {0}")]
    IncompatibleReports(String),

    #[error("map is not an isometry at the identity (defect {0:.3e})")]
    NotIsometry(f64),

    #[error("degenerate functional: all first-order derivatives at the identity vanish; only the order-n scaling applies")]
    DegenerateFunctional,

    #[error("failed to parse basis document: {0}")]
    Parse(String),

    #[error("write failed: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
