use thiserror::Error;

/// Which side of the attainable mean range an unreachable tilt target fell on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiltSide {
    BelowSupport,
    AboveSupport,
}

impl std::fmt::Display for TiltSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TiltSide::BelowSupport => write!(f, "at or below the essential infimum"),
            TiltSide::AboveSupport => write!(f, "at or above the essential supremum"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// A model constructor was handed inconsistent data.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// An operation was called with arguments violating its documented precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Derivatives requested outside the CGF finiteness domain.
    #[error("theta = {theta} lies outside the CGF domain (finite for theta < {sup})")]
    OutsideDomain { theta: f64, sup: f64 },

    /// No exponential tilt attains the requested mean.
    #[error("no tilt attains mean {target}: it is {side} ({bound})")]
    NoTilt { side: TiltSide, target: f64, bound: f64 },

    /// The default-time law leaves mass off the grid where a proper law is required.
    #[error(
        "default-time law is defective (never-default mass {defect:.6e}); \
         augment the grid or supply a proper law"
    )]
    DefectiveTau { defect: f64 },

    /// A barrier level does not exceed the mean loss, so the crossing is not rare.
    #[error("not a rare event at {at}: level {level} does not exceed the mean loss {mean}")]
    NotRareEvent { at: String, level: f64, mean: f64 },

    /// Two or more candidate optima agree within the gap tolerance.
    #[error("dominating optimum is not unique: {} agree within gap tolerance {gap_tol:e}", ties.join(", "))]
    NonUniqueOptimum { ties: Vec<String>, gap_tol: f64 },

    /// Exact computation would exceed the configured state-space bound.
    #[error("state space of {required} exceeds the cap of {cap}: {advice}")]
    Capacity { required: u64, cap: u64, advice: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn invalid_model(msg: impl Into<String>) -> Self {
        Error::InvalidModel(msg.into())
    }
}
