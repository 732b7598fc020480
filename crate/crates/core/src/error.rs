use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty region")]
    EmptyRegion,

    #[error("density is not normalized over the region (integral = {0})")]
    NotNormalized(f64),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("no positive weight")]
    NoPositiveWeight,

    #[error("no hotspot")]
    NoHotspot,

    #[error("demand unservable: {0}")]
    DemandUnservable(String),

    #[error("service window exhausted (travel {travel_s} s >= interval {interval_s} s)")]
    ServiceWindowExhausted { travel_s: f64, interval_s: f64 },

    #[error("no feasible placement")]
    NoFeasiblePlacement,

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("malformed scenario: {0}")]
    MalformedScenario(String),

    #[error("truncated event log: {0}")]
    TruncatedLog(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}
