use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("dimension mismatch: expected {expected} coordinates, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension n = {0}; the half-dimension must be at least 1")]
    InvalidDimension(usize),

    #[error("degenerate box: {0}")]
    DegenerateBox(String),

    #[error(
        "plateau fraction {requested} is infeasible for the configured smoothing width; \
         maximum achievable fraction is {max_feasible}"
    )]
    InfeasiblePlateau { requested: f64, max_feasible: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Newton iteration failed in {context} after {iterations} iterations (residual {residual:e})")]
    NewtonFailed {
        context: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("singular matrix in linear solve")]
    SingularMatrix,

    #[error("map is not graphical (min |det| = {min_abs_det:e}, negative determinants: {negative_dets}, collisions: {collisions})")]
    NotGraphical {
        min_abs_det: f64,
        negative_dets: usize,
        collisions: usize,
    },
}

pub type Result<T> = std::result::Result<T, LabError>;
