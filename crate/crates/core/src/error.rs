use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is empty")]
    Empty,

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("operator is singular: smallest singular value {sigma_min:.3e} <= {threshold:.3e}")]
    Singular { sigma_min: f64, threshold: f64 },

    #[error("resolvent is singular at z = {z}: smallest singular value {sigma_min:.3e}")]
    ResolventSingular { z: Complex64, sigma_min: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error("ill-conditioned solve, condition estimate {0:.3e}")]
    IllConditioned(f64),

    #[error("operator is not sectorial at angle {theta:.6}: {reason}")]
    NotSectorial { theta: f64, reason: String },

    #[error(
        "quadrature did not converge after {doublings} doublings: \
         last two iterates have norms {last_norm:.6e} and {prev_norm:.6e}, relative change {change:.3e}"
    )]
    NonConvergence {
        doublings: usize,
        last_norm: f64,
        prev_norm: f64,
        change: f64,
    },

    #[error("degenerate Gram operator: smallest eigenvalue {0:.3e}")]
    DegenerateGram(f64),

    #[error("evaluation point {z} violates the boundary margin of sector {theta:.6}")]
    MarginViolation { z: Complex64, theta: f64 },

    #[error("boundary functions live on different contours")]
    ContourMismatch,

    #[error("{excluded} of {total} contour nodes sit too close to the spectrum")]
    TooManyExcluded { excluded: usize, total: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by bad user input rather than by a failed check.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::NonSquare { .. }
                | Error::Empty
                | Error::NonFinite { .. }
                | Error::Singular { .. }
                | Error::InvalidParam(_)
                | Error::Parse(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::MarginViolation { .. }
                | Error::ContourMismatch
        )
    }
}
