//! Error taxonomy shared by every engine module.
//!
//! All public operations return [`Result`]; silent NaN/Inf propagation is
//! never allowed to stand in for a domain failure.

/// Library-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Constructor inputs outside the validated domain (e.g. `a <= m - 1`).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An index argument out of its documented range.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// A documented precondition failed (coincident coordinates, missing
    /// resonance, wrong vector length, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A denominator factor fell below the pole tolerance. Downstream
    /// formulas have removable or excluded singularities only, so this
    /// signals caller misuse rather than a numerical accident.
    #[error("pole proximity in {context}: |factor| = {magnitude:.3e} < tolerance {tolerance:.3e}")]
    PoleProximity {
        context: &'static str,
        magnitude: f64,
        tolerance: f64,
    },

    /// A quadrature self-estimate exceeded the requested target.
    #[error("quadrature accuracy: estimated error {estimate:.3e} exceeds target {target:.3e}")]
    Accuracy { estimate: f64, target: f64 },

    /// A pole lies too close to an integration contour node for the rule to
    /// resolve it.
    #[error("contour collides with a pole: {0}")]
    ContourCollision(String),

    /// Verification-suite or CLI configuration problem.
    #[error("configuration error: {0}")]
    Config(String),

    /// Request beyond the enforced desk-scale limits.
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
}

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
