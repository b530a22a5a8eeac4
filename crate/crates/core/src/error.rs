use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} out of range for subsystem `{label}` of dimension {dim}")]
    Dimension {
        label: String,
        index: usize,
        dim: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("subsystem label `{0}` appears more than once")]
    LabelCollision(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("label coverage error: {0}")]
    Coverage(String),

    #[error("size {value} outside supported range {min}..={max} for {what}")]
    Size {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("invalid state: {0}")]
    State(String),

    #[error("map is not completely positive: {0}")]
    NotCompletelyPositive(String),

    #[error("map is not trace preserving: {0}")]
    NotTracePreserving(String),
}

pub type Result<T> = std::result::Result<T, Error>;
