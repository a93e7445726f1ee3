use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The CLI maps [`Error::is_budget`] to its own exit code, so every variant
/// that means "the computation is well-defined but too large" must report
/// itself as a budget error.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{what}: needs {needed}, budget allows {limit}")]
    CapExceeded {
        what: &'static str,
        needed: String,
        limit: String,
    },

    #[error("wall-clock budget of {limit_ms} ms exhausted during {during}")]
    DeadlineExceeded { during: String, limit_ms: u64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("accuracy criterion violated: {0}")]
    CriterionViolated(String),

    #[error("cell of depth {depth} is coarser than the elementary depth {required}")]
    ResolutionTooCoarse { depth: u64, required: u64 },

    #[error("candidate overlaps {overlap} elementary cells, cap is {cap}")]
    OverlapCapExceeded { overlap: String, cap: u64 },

    #[error("(b={b}, k={k}) is outside the schedule range")]
    OutOfRange { b: u64, k: u64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("no good interval at step k={k}: scanned {scanned}, skipped {skipped} of {total} candidates")]
    NoGoodInterval {
        k: u64,
        scanned: u64,
        skipped: String,
        total: String,
    },

    #[error("insufficient digits: {needed} bits needed, {available} available")]
    InsufficientDigits { needed: u64, available: u64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::CapExceeded { .. } | Error::DeadlineExceeded { .. } | Error::OverlapCapExceeded { .. }
        )
    }

    pub(crate) fn cap(what: &'static str, needed: impl ToString, limit: impl ToString) -> Self {
        Error::CapExceeded {
            what,
            needed: needed.to_string(),
            limit: limit.to_string(),
        }
    }

    /// Short machine-readable tag, used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::DeadlineExceeded { .. } => "deadline_exceeded",
            Error::InvalidInput(_) => "invalid_input",
            Error::EmptyInput(_) => "empty_input",
            Error::Precondition(_) => "precondition",
            Error::CriterionViolated(_) => "criterion_violated",
            Error::ResolutionTooCoarse { .. } => "resolution_too_coarse",
            Error::OverlapCapExceeded { .. } => "overlap_cap_exceeded",
            Error::OutOfRange { .. } => "out_of_range",
            Error::InvalidSchedule(_) => "invalid_schedule",
            Error::NoGoodInterval { .. } => "no_good_interval",
            Error::InsufficientDigits { .. } => "insufficient_digits",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
