use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("digit {digit} out of range for base {base}")]
    InvalidWord { digit: u8, base: u32 },
    #[error("word lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("non-finite interval endpoint")]
    NonFinite,
    #[error("interval cannot be split further")]
    NoSplit,
    #[error("atom budget exceeded: {needed} atoms requested, budget {budget}")]
    AtomBudget { needed: u64, budget: u64 },
    #[error("radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("measure is degenerate (single location); slope undefined")]
    DegenerateMeasure,
    #[error("scale precondition violated: {0}")]
    ScalePrecondition(String),
    #[error("insufficient sample density: {0}")]
    InsufficientDensity(String),
    #[error("no non-cohomology witness found at resolution {0}")]
    WitnessNotFound(usize),
    #[error("malformed hex float: {0}")]
    HexFloat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
