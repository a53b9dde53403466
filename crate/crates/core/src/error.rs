use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// Evaluation of an expression produced a non-finite value.
    #[error("evaluation error in `{node}`: {message}")]
    Evaluation { node: String, message: String },

    /// The induced metric lost rank at a chart point.
    #[error("degenerate metric at {point:?}: smallest eigenvalue {min_eigenvalue:e}")]
    Degenerate { point: Vec<f64>, min_eigenvalue: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unknown builtin immersion `{0}`")]
    UnknownBuiltin(String),

    /// The tamedness level is not strictly between the estimate and 1.
    #[error("level error: {0}")]
    Level(String),

    #[error("immersion is not tamed: {0}")]
    NotTamed(String),

    /// Every sampled vertex lies inside the exhaustion set.
    #[error("empty complement for exhaustion radius {radius}")]
    EmptyComplement { radius: f64 },

    #[error("empty level set at radius {radius}")]
    EmptyLevelSet { radius: f64 },

    #[error("critical point of the extrinsic distance at {point:?} (psi = {psi:e})")]
    CriticalPoint { point: Vec<f64>, psi: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Cholesky factorisation hit a non-positive pivot.
    #[error("factorisation failed at pivot {pivot}")]
    Decomposition { pivot: usize },
}
