//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("spectral symbol produced a non-finite value at k = {k:?}")]
    NonFiniteSymbol { k: [f64; 3] },

    #[error("resample scale {scale} aliases: {fraction:.3e} of the mass lies outside the contracted box")]
    ResampleAliasing { scale: f64, fraction: f64 },

    #[error("orbital set is rank deficient: smallest Gram eigenvalue {0:.3e}")]
    RankDeficient(f64),

    #[error("Gram hypothesis violated: eigenvalue {0:.6} outside [0, 1]")]
    GramHypothesis(f64),

    #[error("shell count {requested} splits a degenerate shell; nearest complete counts are {below} and {above}")]
    IncompleteShell {
        requested: usize,
        below: usize,
        above: usize,
    },

    #[error("time step {dt:.3e} violates the step-size rule (max {max:.3e})")]
    StepSize { dt: f64, max: f64 },

    #[error("energy increased by {0:.3e} during a descent step below the minimal step size")]
    FlowStall(f64),

    #[error("eigenvalue iteration failed to converge: residual {0:.3e}")]
    NoConvergence(f64),

    #[error("bisection bracket invalid: both endpoints gave the same verdict ({0})")]
    BracketError(String),
}
