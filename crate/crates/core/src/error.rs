use thiserror::Error;

/// Errors raised by the tomography toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension {got} is below the minimum of {min}")]
    DimensionTooSmall { got: usize, min: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range 0..{bound}")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("matrix is not unitary (max |U†U - I| = {0:e})")]
    NotUnitary(f64),

    #[error("matrix is not Hermitian (max |A - A†| = {0:e})")]
    NotHermitian(f64),

    #[error("trace is {0}, expected 1")]
    TraceNotOne(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("state vector is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("linear-dependence threshold undefined for theta = {theta}, N = {n}")]
    DegenerateThreshold { theta: f64, n: usize },

    #[error("inner-product modulus {alpha_abs} exceeds the linear-dependence bound {bound}")]
    AlphaOutOfRange { alpha_abs: f64, bound: f64 },

    #[error("spectral weight lambda_{k} = {value:e} is negative")]
    NegativeWeight { k: usize, value: f64 },

    #[error("probabilities sum to {sum}, outside tolerance {tolerance:e}")]
    ProbabilitySum { sum: f64, tolerance: f64 },

    #[error("negative or non-finite probability {value} at outcome {index}")]
    InvalidProbability { index: usize, value: f64 },

    #[error("ill-conditioned measurement map (condition number {0:e})")]
    IllConditioned(f64),

    #[error("measurement map has rank {rank}, need {needed}")]
    RankDeficient { rank: usize, needed: usize },

    #[error("dimension {n} has the wrong parity for this operation (expected {expected})")]
    Parity { n: usize, expected: &'static str },

    #[error(
        "no consistent port map: output port {port} matches no POVM element (best error {error:e})"
    )]
    PortMap { port: usize, error: f64 },

    #[error("shots must be positive")]
    ZeroShots,

    #[error("lossy transfer matrix has zero Frobenius norm")]
    ZeroNorm,

    #[error("invalid circuit element: {0}")]
    InvalidElement(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
