use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state vector must have at least one coordinate")]
    EmptyState,

    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },

    #[error("potential is state-dependent and needs a base state")]
    MissingState,

    #[error("numeric supremum failed to bracket, last bracket [{lo}, {hi}]")]
    MaximizationFailure { lo: f64, hi: f64 },

    #[error("coordinate {index} = {value} lies outside the domain box [{lo}, {hi}]")]
    Domain { index: usize, value: f64, lo: f64, hi: f64 },

    #[error("inner minimization over [{lo}, {hi}] failed to refine: {reason}")]
    Refinement { lo: f64, hi: f64, reason: String },

    #[error("{count} kinks within resolution {h} of u = {u}")]
    KinkResolution { u: f64, h: f64, count: usize },

    #[error("no minimizer is compatible with the multiplier (closest distance {distance:e})")]
    Conditioning { distance: f64 },

    #[error("inner solver failed at step {step}: {reason}")]
    StepFailure { step: usize, reason: String, best: Vec<f64>, gap: f64 },

    #[error("subdifferential is empty at t = {t}")]
    SubdifferentialUnavailable { t: f64 },

    #[error("time {t} outside [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("parameter `{name}` = {value} violates {bound}")]
    InvalidParameter { name: String, value: f64, bound: String },

    #[error("model `{model}` does not support subdifferential mode `{mode}`")]
    UnsupportedMode { model: String, mode: String },

    #[error("unknown parameter `{name}` for model `{model}`")]
    UnknownParameter { model: String, name: String },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("energy provides no smooth gradient; needed for dimension {dim}")]
    GradientUnavailable { dim: usize },

    #[error("operation requires dimension 1, found {0}")]
    NotOneDimensional(usize),

    #[error("malformed trajectory data: {0}")]
    Format(String),
}
