use thiserror::Error;

/// Failure modes shared by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("coefficient field is not elliptic: observed kappa = {kappa_observed:.6e}")]
    NonElliptic { kappa_observed: f64 },

    #[error("solver breakdown: {0}")]
    Breakdown(String),

    #[error("iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("eigensolver did not converge after {restarts} restarts; worst residual {worst_residual:.3e}")]
    EigenNotConverged {
        restarts: usize,
        worst_residual: f64,
        /// Ritz pairs from the last cycle. Not usable as results.
        partial: Vec<crate::linalg::EigenPair>,
    },

    #[error("spectrum incomplete: window needs eigenvalues up to {needed:.6e}, largest computed is {largest:.6e}")]
    IncompleteSpectrum { needed: f64, largest: f64 },

    #[error("boundary layer of width {width:.3e} is thinner than the mesh size {h:.3e}")]
    EmptyLayer { width: f64, h: f64 },

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
