use thiserror::Error;

/// Errors produced across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {dimension}")]
    IndexOutOfRange { index: usize, dimension: usize },

    #[error("duplicate entry ({i}, {j})")]
    DuplicateEntry { i: usize, j: usize },

    #[error("non-symmetric entry ({i}, {j}): {a} vs {b}")]
    NonSymmetric { i: usize, j: usize, a: f64, b: f64 },

    #[error("non-finite weight at ({i}, {j})")]
    NonFiniteWeight { i: usize, j: usize },

    #[error("invalid spin value {0}, expected -1 or +1")]
    InvalidSpin(i64),

    #[error("{what} = {value} exceeds the cap {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("exact mode unavailable: {0}")]
    ExactModeUnavailable(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no non-trivial fixed point: {0}")]
    NoFixedPoint(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("even non-terminal count {0}: phase ties are possible")]
    EvenCore(usize),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("sampling failed: {0}")]
    SamplingFailed(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::DuplicateEntry { .. } => "duplicate_entry",
            Error::NonSymmetric { .. } => "non_symmetric",
            Error::NonFiniteWeight { .. } => "non_finite_weight",
            Error::InvalidSpin(_) => "invalid_spin",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::ExactModeUnavailable(_) => "exact_mode_unavailable",
            Error::InvalidDistribution(_) => "invalid_distribution",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NoFixedPoint(_) => "no_fixed_point",
            Error::NonConvergence(_) => "non_convergence",
            Error::EvenCore(_) => "even_core",
            Error::InvalidGraph(_) => "invalid_graph",
            Error::SamplingFailed(_) => "sampling_failed",
            Error::InvalidInstance(_) => "invalid_instance",
            Error::Parse { .. } => "parse",
            Error::Stage { .. } => "stage",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
