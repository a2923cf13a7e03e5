use thiserror::Error;

/// Errors reported by the solver and its diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error(
        "spectral coefficients are not Hermitian-symmetric (relative residual {residual:.3e})"
    )]
    HermitianViolation { residual: f64 },

    #[error("heat semigroup time must be non-negative, got {0}")]
    NegativeHeatTime(f64),

    #[error("velocity field is not divergence-free (relative residual {residual:.3e})")]
    Divergence { residual: f64 },

    #[error("tensor field is not in the strain space (relative residual {residual:.3e})")]
    NotInStrainSpace { residual: f64 },

    #[error("Sobolev exponent {0} outside (-3/2, 3/2)")]
    InvalidExponent(f64),

    #[error("operation undefined on the zero field")]
    ZeroField,

    #[error("non-finite values at t = {t}")]
    NonFinite { t: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("samples are not equally spaced in time")]
    UnevenSamples,

    #[error("oracle limited to n <= 8, got n = {0}")]
    OracleTooLarge(usize),

    #[error("dilation by {lambda} pushes mode {mode} past the cutoff {cutoff}")]
    DilationOutOfRange {
        lambda: usize,
        mode: i64,
        cutoff: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
