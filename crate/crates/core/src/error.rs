use thiserror::Error;

/// Crate-wide error type. Variants are grouped by the stage that raises
/// them: field construction, configuration, numerical validation, quantum
/// state handling, and text-format parsing.
#[derive(Debug, Error)]
pub enum Error {
    /// A field or field operation received non-finite samples or
    /// unphysical parameters (e.g. non-positive wavelength).
    #[error("invalid field: {0}")]
    InvalidField(String),

    /// Two sampled objects (field and mask) do not share a grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A configuration value violates a structural constraint.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A profile window does not contain enough interference structure
    /// for the requested operation.
    #[error("insufficient fringes: {0}")]
    InsufficientFringes(String),

    /// Propagated power leaks into the absorbing guard band beyond the
    /// accepted bound; the window is too small for the configuration.
    #[error("window too small: spill fraction {spill:.4} exceeds {limit:.2}")]
    WindowTooSmall { spill: f64, limit: f64 },

    /// A conditional probability is requested for a pre/post pair that
    /// admits no intermediate path (zero total weight).
    #[error("undefined conditional probability: {0}")]
    UndefinedConditional(String),

    /// A state or basis label outside the published label set.
    #[error("unknown label: {0:?}")]
    UnknownLabel(String),

    /// A quantum state failed a structural check (zero vector,
    /// non-orthogonal basis, outcome index out of range).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A timeline is structurally incomplete or mis-ordered.
    #[error("incomplete timeline: {0}")]
    IncompleteTimeline(String),

    /// A scenario name with no builtin definition.
    #[error("unknown scenario: {0:?}")]
    UnknownScenario(String),

    /// A text form (config file, chain, timeline, records) failed to
    /// parse; `at` locates the offending line or segment (1-based).
    #[error("parse error at {at}: {msg}")]
    Parse { at: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(at: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            at,
            msg: msg.into(),
        }
    }
}
