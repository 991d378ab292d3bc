use thiserror::Error;

/// Errors raised by the numerical routines and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {what} (|z| = {modulus})")]
    Domain { what: &'static str, modulus: f64 },

    #[error("evaluation at singular atom location ({re}, {im})")]
    Singularity { re: f64, im: f64 },

    #[error("grid mismatch: {left} vs {right} nodes")]
    GridMismatch { left: usize, right: usize },

    #[error("invalid grid size {0}: must be a power of two and at least 16")]
    InvalidGrid(usize),

    #[error("resolution exceeded: zeros of modulus {max_modulus} need a grid above the cap")]
    ResolutionExceeded { max_modulus: f64 },

    #[error("degenerate modulus: minimum sample {min} below floor {floor}")]
    DegenerateModulus { min: f64, floor: f64 },

    #[error("under-resolved: negative-frequency leakage {leakage:e} exceeds {tolerance:e}")]
    UnderResolved { leakage: f64, tolerance: f64 },

    #[error("probe radius {radius} exceeds grid-supported radius {max}")]
    DepthExceeded { radius: f64, max: f64 },

    #[error("invalid Sarason pair: {0}")]
    InvalidPair(String),

    #[error("degenerate denominator: min |1 - I b| = {min:e}")]
    DegenerateDenominator { min: f64 },

    #[error("not extremal: {0}")]
    NonExtremal(String),

    #[error("multiplier is not isometric: Gram deviation {residual:e}")]
    NotIsometric { residual: f64 },

    #[error("defect rank {rank} exceeds 2")]
    RankViolation { rank: usize },

    #[error("singular atoms are not supported here")]
    AtomsUnsupported,

    #[error("inner function needs a zero at the origin")]
    MissingOriginZero,

    #[error("truncations must satisfy n2 = 2 n1 (got n1 = {n1}, n2 = {n2})")]
    SubsetViolation { n1: usize, n2: usize },

    #[error("stolz sample left its region at ({re}, {im})")]
    StolzEscape { re: f64, im: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
