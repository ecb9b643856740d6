//! Error type shared by every module in the crate.

use std::fmt;

/// Failure modes of grid construction, weight assembly, quadrature, and solves.
///
/// Every variant carries a human-readable message naming the offending input.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid parameter or configuration value.
    Config(String),
    /// Geometric precondition violated: overlapping cells, boundary nodes, degenerate domains.
    Geometry(String),
    /// A field evaluation produced a non-finite value.
    Evaluation(String),
    /// Two objects built over different grids were combined.
    Mismatch(String),
    /// The requested pointwise evaluation sits in the regime where the
    /// principal value does not exist at merely critical points.
    SingularCase(String),
    /// An integral diverges for the given growth and kernel exponents.
    Divergent(String),
    /// An iteration exhausted its budget without meeting its tolerance.
    NonConvergent(String),
    /// A checker was invoked on data that violates its stated hypotheses.
    Precondition(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(m) => write!(f, "configuration error: {m}"),
            Error::Geometry(m) => write!(f, "geometry error: {m}"),
            Error::Evaluation(m) => write!(f, "evaluation error: {m}"),
            Error::Mismatch(m) => write!(f, "grid mismatch: {m}"),
            Error::SingularCase(m) => write!(f, "singular case: {m}"),
            Error::Divergent(m) => write!(f, "divergent integral: {m}"),
            Error::NonConvergent(m) => write!(f, "no convergence: {m}"),
            Error::Precondition(m) => write!(f, "precondition violated: {m}"),
        }
    }
}

impl std::error::Error for Error {}
