use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("system size {got} is below the minimum of {min}")]
    InvalidSize { got: usize, min: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("polylogarithm of order {alpha} diverges at z = 1")]
    Divergent { alpha: f64 },

    #[error(
        "winding number is ill-defined: base energy lies {distance:.3e} from the spectral curve"
    )]
    WindingIllDefined { distance: f64 },

    #[error("orbital matrix lost rank (condition estimate {condition:.3e})")]
    RankLoss { condition: f64 },

    #[error("steady state is ambiguous: imaginary-part gap {gap:.3e} is below tolerance")]
    AmbiguousSteadyState { gap: f64 },

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("correlation block is not Hermitian (deviation {deviation:.3e})")]
    NonHermitianBlock { deviation: f64 },

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("grid point timed out after {seconds} s")]
    Timeout { seconds: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
