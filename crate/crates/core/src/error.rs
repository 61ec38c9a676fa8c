use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid slab {index}: {reason}")]
    InvalidSlab { index: usize, reason: String },

    #[error("slabs {left} and {right} are not contiguous (gap or overlap of {mismatch:e})")]
    NonContiguous {
        left: usize,
        right: usize,
        mismatch: f64,
    },

    #[error("potential must be asymptotically positive: U on the {side} side is {value}")]
    NonPositiveAsymptote { side: &'static str, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("profile without slabs needs equal asymptotes (left {left}, right {right})")]
    UnequalFreeSpace { left: f64, right: f64 },

    #[error("invalid symmetry transform: sigma must be -1 or +1, got {0}")]
    InvalidSigma(i32),

    #[error("degenerate cell [{start}, {end}]")]
    DegenerateCell { start: f64, end: f64 },

    #[error("domain is empty")]
    EmptyDomain,

    #[error("profile has no slabs")]
    EmptyProfile,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("current |J| = {current:e} is below the collapse threshold {threshold:e}; the field mapping is undefined for zero-current states")]
    ZeroCurrent { current: f64, threshold: f64 },

    #[error("not a Bloch state: |Q| = {q_abs:e} exceeds {threshold:e}")]
    NotBlochState { q_abs: f64, threshold: f64 },

    #[error("expected a translation, got an inversion")]
    NotTranslation,

    #[error("invariant pairs come from different solved states")]
    MixedStates,

    #[error("fields are defined on different profiles")]
    ProfileMismatch,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for violations of the physical preconditions of the scattering
    /// setting (as opposed to malformed arguments).
    pub fn is_physics_precondition(&self) -> bool {
        matches!(
            self,
            Error::NonPositiveAsymptote { .. }
                | Error::NotBlochState { .. }
                | Error::DegenerateCell { .. }
        )
    }
}
