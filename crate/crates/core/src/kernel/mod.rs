//! The singular kernel: interaction weights, absorption terms, and pointwise
//! principal-value evaluation.

pub mod quad;

mod pointwise;
mod weights;

pub use pointwise::{
    eps_limit_series, eval_pointwise, perturbation_rhs, tail, EpsSeries, PvEval, Source,
};
pub use weights::{assemble_weights, cell_pair_weight, exterior_weight};

use crate::{Error, Result};

/// Exponents `(p, s)` of the operator, with `p > 1` and `0 < s < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorParams {
    p: f64,
    s: f64,
}

impl OperatorParams {
    /// Validates and stores the exponent pair.
    pub fn new(p: f64, s: f64) -> Result<Self> {
        if !p.is_finite() || !(p > 1.0) {
            return Err(Error::Config(format!("exponent p must exceed 1, got {p}")));
        }
        if !s.is_finite() || !(s > 0.0 && s < 1.0) {
            return Err(Error::Config(format!("order s must lie in (0, 1), got {s}")));
        }
        Ok(OperatorParams { p, s })
    }

    /// Summability exponent `p`.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Differentiability order `s`.
    pub fn s(&self) -> f64 {
        self.s
    }

    /// The product `p * s`, the kernel's homogeneity above the dimension.
    pub fn ps(&self) -> f64 {
        self.p * self.s
    }

    /// The nonlinearity exponent `p - 1`.
    pub fn pm1(&self) -> f64 {
        self.p - 1.0
    }

    /// True when the principal value exists at critical points of smooth
    /// fields, that is `p >= 2` or `s < 2(p - 1)/p`.
    pub fn pointwise_valid(&self) -> bool {
        self.p >= 2.0 || self.s < 2.0 * (self.p - 1.0) / self.p
    }

    /// Threshold order below which pointwise evaluation is safe for this `p`.
    pub fn pointwise_threshold(&self) -> f64 {
        2.0 * (self.p - 1.0) / self.p
    }
}

/// The odd power `|a|^q sign(a)`.
///
/// Exact branches cover `q` in `{1/2, 1, 3/2, 2}`, where a square root
/// outperforms the generic `powf` in both speed and rounding.
pub fn signed_power(a: f64, q: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let m = a.abs();
    let mag = if q == 1.0 {
        m
    } else if q == 2.0 {
        m * m
    } else if q == 0.5 {
        m.sqrt()
    } else if q == 1.5 {
        m * m.sqrt()
    } else {
        m.powf(q)
    };
    if a > 0.0 {
        mag
    } else {
        -mag
    }
}

/// Assembled interaction weights for one grid and one exponent pair.
///
/// `w` is the dense symmetric matrix of pair weights with zero diagonal.
/// `absorption` holds, per node, the cell volume times the kernel integral
/// over the domain complement; it is the coefficient of `|u_i|^p` terms, so
/// it already carries the volume factor that pair weights pick up from the
/// second cell.
#[derive(Debug, Clone)]
pub struct KernelWeights {
    n: usize,
    w: Vec<f64>,
    absorption: Vec<f64>,
    vol: Vec<f64>,
    diam: f64,
    params: OperatorParams,
}

impl KernelWeights {
    pub(crate) fn from_parts(
        n: usize,
        w: Vec<f64>,
        absorption: Vec<f64>,
        vol: Vec<f64>,
        diam: f64,
        params: OperatorParams,
    ) -> Self {
        debug_assert_eq!(w.len(), n * n);
        debug_assert_eq!(absorption.len(), n);
        debug_assert_eq!(vol.len(), n);
        KernelWeights { n, w, absorption, vol, diam, params }
    }

    /// Number of interior nodes.
    pub fn n_nodes(&self) -> usize {
        self.n
    }

    /// Pair weight between nodes `i` and `j`; zero on the diagonal.
    pub fn w(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    /// Row `i` of the pair-weight matrix.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.n..(i + 1) * self.n]
    }

    /// Volume-scaled absorption coefficient of node `i`.
    pub fn absorption(&self, i: usize) -> f64 {
        self.absorption[i]
    }

    /// Cell volume of node `i`.
    pub fn vol(&self, i: usize) -> f64 {
        self.vol[i]
    }

    /// All cell volumes.
    pub fn vols(&self) -> &[f64] {
        &self.vol
    }

    /// Diameter of the discretized domain.
    pub fn diam(&self) -> f64 {
        self.diam
    }

    /// The exponents these weights were assembled for.
    pub fn params(&self) -> &OperatorParams {
        &self.params
    }
}

/// Geometric sequence of principal-value truncation radii.
///
/// Level `k` truncates at `eps0 * 2^-k`; `levels` sets how deep the sequence
/// goes. The default stops at radius `eps0 * 2^-20`: sampling points `x + r`
/// and `x - r` round to offsets that differ by up to one ulp of `x`, so below
/// roughly the square root of machine precision the paired cancellation is
/// rounding noise, not signal, and deeper levels would poison the series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    /// Outermost truncation radius.
    pub eps0: f64,
    /// Number of halvings recorded.
    pub levels: usize,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule { eps0: 1.0, levels: 20 }
    }
}

impl EpsilonSchedule {
    /// Rejects non-positive or non-finite starting radii.
    pub fn validate(&self) -> Result<()> {
        if !self.eps0.is_finite() || !(self.eps0 > 0.0) {
            return Err(Error::Config(format!(
                "epsilon schedule needs a positive starting radius, got {}",
                self.eps0
            )));
        }
        Ok(())
    }
}
