use thiserror::Error;

/// Errors raised by the solvers and their input validation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain length {0}: at least 2 sites are required")]
    InvalidSize(usize),

    #[error("chain of {sites} sites exceeds the dense diagonalization cap of {cap} sites")]
    SizeCap { sites: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coupling term at site {site} does not fit a chain of {sites} sites")]
    TermOutOfRange { site: usize, sites: usize },

    #[error("start vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("start block is not orthonormal (Gram defect {defect:e})")]
    NotOrthonormal { defect: f64 },

    #[error("left and right start blocks are not biorthogonal (defect {defect:e})")]
    NotBiorthogonal { defect: f64 },

    #[error("serious breakdown at iteration {iteration}: left and right residuals are nearly orthogonal (cosine {cosine:e})")]
    SeriousBreakdown { iteration: usize, cosine: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("eigen decomposition failed: {0}")]
    Eigen(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
