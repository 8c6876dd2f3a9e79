use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A chart point lies inside the excluded band around a pole.
    #[error("point r={r:.6e} lies within {guard:.1e} of a pole")]
    PoleGuard { r: f64, guard: f64 },

    /// A trajectory entered the pole guard band while being integrated.
    #[error("trajectory entered the pole guard band at t={t:.6} (r={r:.6e})")]
    PoleCrossing { t: f64, r: f64 },

    /// A wind or one-form violates the strong-convexity bound (norm >= 1).
    #[error("{what} breaks the convexity bound: measured {value:.6} >= 1")]
    NonConvex { what: &'static str, value: f64 },

    /// A constructor parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation is not defined for this profile family.
    #[error("operation not defined for profile family `{0}`")]
    UnsupportedFamily(String),

    /// A certified precondition of a chained construction failed.
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    /// A trace-consuming operation received no samples.
    #[error("empty geodesic trace")]
    EmptyTrace,
}

pub type Result<T> = std::result::Result<T, Error>;
