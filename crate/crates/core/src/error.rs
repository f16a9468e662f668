use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("truncation tail {tail:.3e} exceeds {limit:.0e} at n_cut = {n_cut}")]
    TruncationTail { tail: f64, limit: f64, n_cut: usize },

    #[error("estimator undefined: {0}")]
    UndefinedEstimator(&'static str),

    #[error("grid captures only {mass:.5} of the probability mass")]
    InsufficientSupport { mass: f64 },

    #[error("ill-conditioned data: bin {bin:?} of histogram at theta = {theta:.6} has model probability {prob:.3e}")]
    IllConditioned { theta: f64, bin: (usize, usize), prob: f64 },

    #[error("phases {theta_x:.6} and {theta_p:.6} are not conjugate (must differ by pi/2 within {tol})")]
    PhaseMismatch { theta_x: f64, theta_p: f64, tol: f64 },

    #[error("no conjugate phase pair found among {0} phase groups")]
    NoConjugatePair(usize),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shot synthesis failed after {retries} retries: counts out of range")]
    ShotOutOfRange { retries: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
