use core::fmt;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector or dataset did not have the expected dimension.
    DimensionMismatch { expected: usize, found: usize },
    /// Action id outside `0..action_count`.
    InvalidAction { action: usize, action_count: usize },
    /// A parameter violated its documented range.
    InvalidParameter(&'static str),
    /// The environment has no density for the requested kernel.
    UnsupportedDensity(&'static str),
    /// The source density of a sample is zero, so its ideal weight is undefined.
    UndefinedWeight,
    /// All regression weights were zero.
    ZeroWeights,
    /// The kernel matrix stayed indefinite at maximum jitter.
    FitFailure(&'static str),
    /// No fitted model bundle exists for a task present in the data.
    MissingModel { task_id: u32 },
    /// An operation needed at least one sample.
    EmptyInput,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidAction { action, action_count } => {
                write!(f, "invalid action {action} (action count {action_count})")
            }
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::UnsupportedDensity(what) => write!(f, "density not available: {what}"),
            Error::UndefinedWeight => f.write_str("source density is zero; importance weight undefined"),
            Error::ZeroWeights => f.write_str("all sample weights are zero"),
            Error::FitFailure(what) => write!(f, "fit failed: {what}"),
            Error::MissingModel { task_id } => write!(f, "no fitted models for task {task_id}"),
            Error::EmptyInput => f.write_str("empty input"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
