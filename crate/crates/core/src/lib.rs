//! Numerical laboratory for the Dirichlet problem of the fractional
//! p-Laplacian.
//!
//! The operator studied is
//! `Lu(x) = 2 PV INT sp(u(x) - u(y)) |x - y|^(-N - ps) dy`
//! with `sp(a) = |a|^(p-1) sign(a)`, posed on an interval or a disc with
//! zero exterior data. Discrete solutions minimize the cell-pair energy
//! built from exact or quadrature kernel weights; the companion modules
//! evaluate the operator pointwise on closed-form fields and measure the
//! classical estimates (comparison, a-priori bounds, boundary growth,
//! oscillation decay, weak Harnack) on the computed profiles.
//!
//! No normalizing constant is applied to the kernel. On the unit interval at
//! `p = 2`, `s = 1/2` the profile `(1 - x^2)^(1/2)` is mapped to the
//! constant `2 pi`, and the solution of the unit-source problem has center
//! value `1/(2 pi)`.

mod error;

pub mod domain;
pub mod energy;
pub mod kernel;
pub mod regularity;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
