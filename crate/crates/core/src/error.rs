use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown process `{name}` at position {pos}")]
    UnknownProcess { name: String, pos: usize },
    #[error("process {0} can only be included once")]
    DuplicateProcess(String),
    #[error("a multiplier is only allowed on GM and AR1, not on {0}")]
    InvalidMultiplier(String),
    #[error("parameter `{name}` = {value} is outside its bounds {bounds}")]
    OutOfBounds {
        name: String,
        value: f64,
        bounds: String,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("wavelet filter {0} is not implemented (only Haar is supported)")]
    UnsupportedFilter(String),
    #[error("signal of length {len} is too short: {needed} samples required")]
    SignalTooShort { len: usize, needed: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("model is under-identified: {params} free parameters but only {scales} scales")]
    UnderIdentified { scales: usize, params: usize },
    #[error("goodness-of-fit test needs J > p (zero degrees of freedom)")]
    ZeroDof,
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("optimizer failed: {0}")]
    Optimizer(String),
    #[error("{dropped} of {total} bootstrap refits failed")]
    BootstrapFailure { dropped: usize, total: usize },
    #[error("scale grids differ")]
    MismatchedScales,
    #[error("{count} candidate models exceed the cap of {cap}; rank a manual candidate list instead")]
    TooManyCandidates { count: usize, cap: usize },
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Syntax { .. }
            | UnknownProcess { .. }
            | DuplicateProcess(_)
            | InvalidMultiplier(_)
            | OutOfBounds { .. }
            | InvalidArgument(_)
            | UnsupportedFilter(_)
            | UnderIdentified { .. }
            | TooManyCandidates { .. } => ErrorClass::Usage,
            SignalTooShort { .. }
            | NonFinite(_)
            | Degenerate(_)
            | MismatchedScales
            | Data(_)
            | Io(_)
            | Csv(_)
            | Json(_) => ErrorClass::Data,
            ZeroDof | Singular(_) | Optimizer(_) | BootstrapFailure { .. } => {
                ErrorClass::Numerical
            }
        }
    }
}
