use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("target not reachable: best residual {best_residual:.3e} mm after {iterations} iterations")]
    NotReachable {
        best_residual: f64,
        iterations: usize,
    },

    #[error("sample {index}: {source}")]
    TrajectorySample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("joint step of {step:.4} rad at sample {index} exceeds the continuity guard of {limit:.4} rad")]
    ContinuityViolation { index: usize, step: f64, limit: f64 },

    #[error("missing marker {0}")]
    MissingMarker(String),

    #[error("degenerate vector between markers {0} and {1}")]
    DegenerateVector(String, String),

    #[error("body markers are collinear")]
    CollinearMarkers,

    #[error("no step cycles found")]
    NoCyclesFound,

    #[error("both groups have zero variance and equal means")]
    ZeroVariance,

    #[error("invalid group statistics: {0}")]
    InvalidStats(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
