use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("singular matrix: determinant is zero")]
    SingularMatrix,

    #[error("invalid parameter {name}: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("operation requires dimension {expected}, got {got}")]
    UnsupportedDimension { expected: usize, got: usize },

    #[error("grid of size {grid} too small: frequencies {a:?} and {b:?} collide modulo the grid")]
    GridTooSmall {
        grid: usize,
        a: Vec<i64>,
        b: Vec<i64>,
    },

    #[error("generator has infinite spectrum; a truncation radius is required")]
    InfiniteSpectrum,

    #[error("inverse-dual construction failed: analyzer symbol is {value:.3e} at xi = {witness:?} (needs |symbol| >= {min_required:.1e})")]
    ConstructionFailed {
        witness: Vec<f64>,
        value: f64,
        min_required: f64,
    },

    #[error("analyzer has no space density; L_q class norm unsupported")]
    MissingDensity,

    #[error("divergent regime: requires p*(gamma - N) > d, got {got} with d = {dim}")]
    DivergentRegime { got: f64, dim: usize },

    #[error("hypothesis violated: {name} ({detail})")]
    HypothesisViolation { name: &'static str, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal invariant broken: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
