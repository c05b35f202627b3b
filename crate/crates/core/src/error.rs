use crate::labels::Space;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("label space needs at least 2 entries, got {0}")]
    TooFewLabels(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("original labels must differ, both are {0}")]
    IdenticalLabels(usize),
    #[error("mixing weight {0} is outside the accepted range")]
    InvalidGamma(f64),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("expected {expected:?} values, got {actual:?}")]
    SpaceMismatch { expected: Space, actual: Space },
    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),
    #[error("invalid distillation config: {0}")]
    InvalidConfig(&'static str),
    #[error("exhaustive projection supports at most {max} labels, got {actual}")]
    OracleTooLarge { max: usize, actual: usize },
    #[error("tensor shape {0:?} does not match {1:?}")]
    ShapeMismatch((usize, usize, usize), (usize, usize, usize)),
    #[error("tensor of shape {shape:?} needs {expected} values, got {actual}")]
    InvalidShape {
        shape: (usize, usize, usize),
        expected: usize,
        actual: usize,
    },
    #[error("Beta shape parameter must be positive, got {0}")]
    InvalidBetaShape(f64),
    #[error("fraction {0} is outside [0, 1]")]
    InvalidFraction(f64),
    #[error("dataset has no training samples")]
    EmptyDataset,
    #[error("invalid training setup: {0}")]
    InvalidSetup(&'static str),
}
