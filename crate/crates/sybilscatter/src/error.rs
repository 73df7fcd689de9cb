//! Error type shared across the simulation and detection pipeline.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Scenario or pipeline parameter rejected at validation time.
    #[error("invalid config: {0}")]
    Config(String),

    /// Emitter too close to a tag for the path-loss model to stay finite.
    #[error("emitter within {distance:.4} m of tag {tag} (minimum {min} m)")]
    TagSingularity { tag: usize, distance: f64, min: f64 },

    /// Smoothing window does not fit the trace.
    #[error("smoothing window {window} exceeds trace length {len}")]
    WindowExceedsTrace { window: usize, len: usize },

    /// Trace shorter than the full bit template.
    #[error("trace length {len} shorter than template length {template}")]
    TraceTooShort { len: usize, template: usize },

    /// Segment or vector dimensions disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Cosine distance is undefined on a zero-norm vector.
    #[error("zero-norm vector in cosine distance")]
    ZeroNormVector,

    /// Zero-norm signature row found while building a distance tensor.
    #[error("zero-norm signature for claimed id {claimed_id} at slot {slot}")]
    ZeroNormRow { claimed_id: usize, slot: usize },

    /// Similarity extraction needs at least two profiles.
    #[error("similarity vector undefined for a single robot (need at least 2 ids, got {got})")]
    TooFewIds { got: usize },

    /// Forest training needs both classes.
    #[error("training data contains only class {0}")]
    SingleClass(u8),

    /// Stratified folds impossible with the given class counts.
    #[error("cannot stratify {folds} folds: {positives} positive / {negatives} negative samples")]
    FoldsUnsatisfiable {
        folds: usize,
        positives: usize,
        negatives: usize,
    },

    /// Feature vector does not match the trained model width.
    #[error("model expects {expected} features, sample has {got}")]
    FeatureWidthMismatch { expected: usize, got: usize },

    #[error("empty dataset")]
    EmptyDataset,

    /// Serialized model failed a consistency check.
    #[error("malformed model: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
