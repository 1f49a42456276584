use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("B-spline order must be at least 2, got {0}")]
    InvalidOrder(usize),

    #[error("scale {requested} exceeds the maximal available scale {max}")]
    ScaleTooLarge { requested: usize, max: usize },

    #[error("scale {0} has no filter in this bank")]
    MissingScale(usize),

    #[error("polynomial deflation left residual {residual:e} (max coefficient {scale:e})")]
    Deflation { residual: f64, scale: f64 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("wavelet has {vanishing_moments} vanishing moments but the model needs differencing order {required}")]
    DifferencingOrder {
        vanishing_moments: usize,
        required: usize,
    },

    #[error("memory parameter {d} outside the admissible interval ({lower}, {upper})")]
    MemoryOutOfRange { d: f64, lower: f64, upper: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("spectral density has a non-integrable pole at frequency zero (d = {0})")]
    PoleAtZero(f64),

    #[error("singular linear system (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("empirical variance at scale {0} is zero")]
    DegenerateVariance(usize),

    #[error("frequency grid of {grid} points too coarse for n = {n}")]
    GridTooCoarse { grid: usize, n: usize },

    #[error("quadrature did not converge: estimated error {achieved:e}")]
    Quadrature { achieved: f64 },

    #[error("failed to parse model '{0}'")]
    ModelParse(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
