use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("space mesh needs at least 2 cells (got {0}); no interior degrees of freedom")]
    TooFewSpaceCells(usize),

    #[error("time mesh needs at least 1 cell")]
    NoTimeCells,

    #[error("final time must be positive and finite (got {0})")]
    BadFinalTime(f64),

    #[error("diffusion coefficient must be positive and finite (got {0})")]
    BadDiffusion(f64),

    #[error("assembly integrity: {which} factor is not positive definite")]
    AssemblyIntegrity { which: &'static str },

    #[error("instance too large for the quadrature oracle: m*n = {dofs} > {limit}")]
    OracleTooLarge { dofs: usize, limit: usize },

    #[error("instance too large for rigorous mode: m*n = {dofs} > {limit}")]
    RigorousTooLarge { dofs: usize, limit: usize },

    #[error("verification failed: matrix too ill-conditioned for this precision (alpha upper bound {alpha:e})")]
    VerificationFailed { alpha: f64 },

    #[error("could not certify an upper eigenvalue bound after {attempts} inflations")]
    EigenBoundNotCertified { attempts: usize },

    #[error("power iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("quadrature needs at least {min} points per direction (got {got})")]
    QuadratureOrder { got: usize, min: usize },

    #[error("unknown manufactured case `{0}`")]
    UnknownCase(String),

    #[error("coefficient {index} is not finite")]
    NonFinite { index: usize },

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("interval error: {0}")]
    Interval(#[from] crate::rigor::IntervalError),
}

pub type Result<T> = std::result::Result<T, Error>;
