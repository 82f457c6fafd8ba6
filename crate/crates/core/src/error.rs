use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid too coarse: {nx}x{ny} (need at least 4x4)")]
    GridTooCoarse { nx: usize, ny: usize },
    #[error("non-positive grid extent: lx={lx}, ly={ly}")]
    BadExtent { lx: f64, ly: f64 },
    #[error("dimension mismatch in {what}")]
    DimensionMismatch { what: &'static str },
    #[error("{what} must be positive (got {value})")]
    NonPositive { what: &'static str, value: f64 },
    #[error("CFL number {cfl} exceeds 1")]
    CflViolation { cfl: f64 },
    #[error("{solver} did not converge: {iterations} iterations, relative residual {residual:.3e}")]
    SolverDiverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("Picard iteration did not converge after {sweeps} sweeps (worst delta {delta:.3e})")]
    PicardDiverged { sweeps: usize, delta: f64 },
    #[error("need at least {need} sweeps for a contraction estimate, have {have}")]
    TooFewSweeps { need: usize, have: usize },
    #[error("non-positive norm in fit window (index {index})")]
    NonPositiveNorm { index: usize },
    #[error("fit window invalid: {0}")]
    BadWindow(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("snapshot error: {0}")]
    Snapshot(String),
    #[error("snapshot cadence mismatch: {0}")]
    CadenceMismatch(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
