use thiserror::Error;

/// Errors raised across the crate.
///
/// Parameter-window violations carry the inequality that failed so that a
/// rejected configuration can be fixed without reading the source.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}: only d = 1 and d = 2 are implemented")]
    UnsupportedDimension(usize),

    #[error("mode count must be at least 1")]
    EmptyBasis,

    #[error("mode index {index} out of range for a basis with {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },

    #[error("point {point:?} lies outside the closed unit box")]
    PointOutsideDomain { point: Vec<f64> },

    #[error("point has {got} coordinates, expected {expected}")]
    PointDimension { expected: usize, got: usize },

    #[error("parameter window violated: {0}")]
    Window(String),

    #[error("negative time {0} (the kernel vanishes for t < 0)")]
    NegativeTime(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid Lévy measure: {0}")]
    InvalidMeasure(String),

    #[error("second moment is infinite for the untruncated stable measure; request a truncated moment instead")]
    InfiniteSecondMoment,

    #[error("truncation level {level} is below the simulation cutoff {cutoff}")]
    TruncationBelowCutoff { level: f64, cutoff: f64 },

    #[error("the heavy-tailed driver requires a symmetric Lévy measure")]
    AsymmetricMeasure,

    #[error("partition mismatch: {0}")]
    PartitionMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
