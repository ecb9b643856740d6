//! Pointwise principal-value evaluation of the operator on closed-form
//! fields, truncation series, nonlocal tails, and perturbation responses.
//!
//! The radial line is split into dyadic panels graded toward the evaluation
//! point; each panel integrates adaptively. Outside the outermost panel the
//! integral is closed exactly for compactly supported fields and bounded by
//! the growth envelope otherwise, so every reported value carries a bar that
//! accounts for all neglected mass.

use crate::domain::{dist, AnalyticField, DomainSpec, Grid, GridFunction, Point, Support};
use crate::kernel::quad::adaptive_gauss;
use crate::kernel::{signed_power, EpsilonSchedule, OperatorParams};
use crate::{Error, Result};

/// A field the nonlocal operator can integrate: closed form or nodal values.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    /// Closed-form field on the ambient space.
    Analytic(&'a AnalyticField),
    /// Nodal values on a grid, extended by zero outside the domain.
    Sampled {
        /// Nodal values.
        u: &'a GridFunction,
        /// The grid carrying them.
        grid: &'a Grid,
    },
}

/// One pointwise evaluation: the principal value and an error bar covering
/// quadrature defects, the unresolved core, and any unbounded tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvEval {
    /// Estimated principal value.
    pub value: f64,
    /// Bound on the neglected and misquadratured mass.
    pub error_bar: f64,
}

/// Truncated integrals over `|y - x| > eps_k` for a geometric radius family.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsSeries {
    /// `partials[k]` integrates outside radius `eps0 * 2^-k`.
    pub partials: Vec<f64>,
    /// True when the last increments behave like a convergent series.
    pub converged: bool,
}

/// Relative tolerance of each panel quadrature.
const PANEL_REL_TOL: f64 = 1e-12;
/// Recursion depth cap inside one panel.
const PANEL_DEPTH: u32 = 14;
/// Angular panels for planar fields, midpoint rule over half a turn.
const ANGLES: usize = 64;
/// Minimum number of graded levels, regardless of the schedule.
const MIN_LEVELS: usize = 12;

/// All panel sums of one evaluation, before the overall factor 2.
struct Panels {
    /// `near[k]` integrates the paired integrand over one graded ring.
    near: Vec<f64>,
    /// Integral from `eps0` outward, including the exact compact closure.
    outer: f64,
    /// Quadrature error accumulated over every panel.
    quad_err: f64,
    /// Unintegrated growth tail beyond the far cutoff.
    tail_bar: f64,
    /// Geometric estimate of the mass below the innermost radius.
    core_bar: f64,
}

/// Paired directional integrand including the radial kernel factor:
/// in one dimension `g(r) = [sp(u(x)-u(x+r)) + sp(u(x)-u(x-r))] r^(-1-q)`,
/// in the plane the bracket is additionally summed over angles against the
/// midpoint measure on half a turn.
fn paired_integrand<'f>(
    field: &'f AnalyticField,
    x: Point,
    pm1: f64,
    q: f64,
) -> Box<dyn FnMut(f64) -> f64 + 'f> {
    match field.dim() {
        1 => Box::new(move |r: f64| {
            let plus = field.difference(x, [x[0] + r, x[1]]);
            let minus = field.difference(x, [x[0] - r, x[1]]);
            (signed_power(plus, pm1) + signed_power(minus, pm1)) * r.powf(-1.0 - q)
        }),
        _ => {
            let dirs: Vec<(f64, f64)> = (0..ANGLES)
                .map(|m| {
                    let theta = (m as f64 + 0.5) * std::f64::consts::PI / ANGLES as f64;
                    (theta.cos(), theta.sin())
                })
                .collect();
            let measure = std::f64::consts::PI / ANGLES as f64;
            Box::new(move |r: f64| {
                let mut g = 0.0;
                for &(c, s) in &dirs {
                    let plus = field.difference(x, [x[0] + r * c, x[1] + r * s]);
                    let minus = field.difference(x, [x[0] - r * c, x[1] - r * s]);
                    g += signed_power(plus, pm1) + signed_power(minus, pm1);
                }
                g * measure * r.powf(-1.0 - q)
            })
        }
    }
}

/// Total angular measure of the paired parametrization: the two directions
/// of the line, or half a turn of paired rays.
fn angular_measure(dim: usize) -> f64 {
    if dim == 1 {
        2.0
    } else {
        2.0 * std::f64::consts::PI
    }
}

fn compute_panels(
    field: &AnalyticField,
    x: Point,
    params: &OperatorParams,
    schedule: &EpsilonSchedule,
    far_cutoff: f64,
) -> Result<Panels> {
    schedule.validate()?;
    if !far_cutoff.is_finite() || !(far_cutoff > 0.0) {
        return Err(Error::Config(format!(
            "far cutoff must be positive and finite, got {far_cutoff}"
        )));
    }
    let q = params.ps();
    let pm1 = params.pm1();
    let ux = field.value(x);
    if !ux.is_finite() {
        return Err(Error::Evaluation(format!(
            "field evaluated to {ux} at ({}, {})",
            x[0], x[1]
        )));
    }
    let eps0 = schedule.eps0;
    let levels = schedule.levels.max(MIN_LEVELS);
    let mut phi = paired_integrand(field, x, pm1, q);

    let mut near = Vec::with_capacity(levels);
    let mut quad_err = 0.0;
    for k in 0..levels {
        let hi = eps0 * (-(k as f64)).exp2();
        let lo = 0.5 * hi;
        let (v, e) = adaptive_gauss(&mut phi, lo, hi, PANEL_REL_TOL, PANEL_DEPTH);
        near.push(v);
        quad_err += e;
    }

    // Outer region: dyadic quadrature panels to the cutoff, extended to the
    // support reach for compact fields so the closure beyond is exact.
    let (quad_end, exact_closure, tail_bar) = match field.support() {
        Support::Compact { center, radius } => {
            let reach = dist(x, center) + radius;
            let end = far_cutoff.max(reach).max(eps0);
            let beyond = 2.0 * signed_power(ux, pm1) * angular_measure(field.dim()) / 2.0;
            // beyond the reach both paired samples vanish, the integrand is
            // the constant bracket 2 sp(u(x)) against the angular measure
            (end, beyond * end.powf(-q) / q, 0.0)
        }
        Support::Growth { gamma, coeff } => {
            if gamma * pm1 >= q {
                return Err(Error::Divergent(format!(
                    "growth exponent {gamma} with p - 1 = {pm1} reaches the kernel order {q}, \
                     the far integral diverges"
                )));
            }
            let end = far_cutoff.max(eps0);
            // |u(y)| <= coeff (1 + |x| + r)^gamma <= coeff kappa^gamma r^gamma
            // for r >= end
            let kappa = (1.0 + x[0].hypot(x[1])) / end + 1.0;
            let env = (coeff * kappa.powf(gamma)).powf(pm1);
            let a = ux.abs().powf(pm1);
            let split = if pm1 > 1.0 { (pm1 - 1.0).exp2() } else { 1.0 };
            let bar = 2.0 * split
                * angular_measure(field.dim())
                * (a * end.powf(-q) / q + env * end.powf(gamma * pm1 - q) / (q - gamma * pm1));
            (end, 0.0, bar)
        }
    };

    let mut outer = 0.0;
    let mut lo = eps0;
    let mut guard = 0;
    while lo < quad_end {
        let hi = (2.0 * lo).min(quad_end);
        let (v, e) = adaptive_gauss(&mut phi, lo, hi, PANEL_REL_TOL, PANEL_DEPTH);
        outer += v;
        quad_err += e;
        lo = hi;
        guard += 1;
        if guard > 4000 {
            return Err(Error::NonConvergent(
                "outer quadrature exceeded 4000 dyadic panels".to_string(),
            ));
        }
    }
    outer += exact_closure;

    // Geometric extrapolation of the unresolved core from the innermost
    // panels. A growing sequence admits no such estimate and is flagged by a
    // crude multiple instead.
    let p_last = near[levels - 1].abs();
    let p_prev = near[levels - 2].abs();
    let core_bar = if p_last == 0.0 {
        0.0
    } else {
        let rho = if p_prev > 0.0 { p_last / p_prev } else { 1.0 };
        if rho <= 0.9 {
            p_last * rho / (1.0 - rho)
        } else {
            p_last * 4.0
        }
    };

    let total: f64 = near.iter().sum::<f64>() + outer;
    if !total.is_finite() {
        return Err(Error::Evaluation(
            "quadrature produced a non-finite value, the field is not integrable here".to_string(),
        ));
    }
    Ok(Panels { near, outer, quad_err, tail_bar, core_bar })
}

/// Principal value of the operator on a closed-form field at one point.
///
/// In the range where merely critical smooth points make the principal value
/// diverge, that is `p < 2` with `s >= 2(p-1)/p`, evaluation is refused
/// unless `allow_singular` is set; the truncation series is the safe
/// diagnostic there.
pub fn eval_pointwise(
    field: &AnalyticField,
    x: Point,
    params: &OperatorParams,
    schedule: &EpsilonSchedule,
    far_cutoff: f64,
    allow_singular: bool,
) -> Result<PvEval> {
    if !params.pointwise_valid() && !allow_singular {
        return Err(Error::SingularCase(format!(
            "pointwise values need s < {:.6} at p = {}, got s = {}; \
             evaluate the truncation series instead or override explicitly",
            params.pointwise_threshold(),
            params.p(),
            params.s()
        )));
    }
    let panels = compute_panels(field, x, params, schedule, far_cutoff)?;
    let value = 2.0 * (panels.near.iter().sum::<f64>() + panels.outer);
    let error_bar = 2.0 * (panels.quad_err + panels.tail_bar + panels.core_bar);
    Ok(PvEval { value, error_bar })
}

/// Truncated integrals outside shrinking radii, for probing whether the
/// principal value exists.
///
/// `partials[k]` integrates over `|y - x| > eps0 * 2^-k`. The convergence
/// flag checks the last three increments: a sequence still growing there is
/// reported as non-convergent.
pub fn eps_limit_series(
    field: &AnalyticField,
    x: Point,
    params: &OperatorParams,
    schedule: &EpsilonSchedule,
    far_cutoff: f64,
) -> Result<EpsSeries> {
    let panels = compute_panels(field, x, params, schedule, far_cutoff)?;
    let levels = panels.near.len();
    let mut partials = Vec::with_capacity(levels + 1);
    let mut acc = panels.outer;
    partials.push(2.0 * acc);
    for k in 0..levels {
        acc += panels.near[k];
        partials.push(2.0 * acc);
    }
    let scale = partials.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let d = |k: usize| panels.near[k].abs();
    let (a, c) = (d(levels - 3), d(levels - 1));
    let converged = c < 0.9 * a || c <= 1e-12 * (1.0 + scale);
    Ok(EpsSeries { partials, converged })
}

/// The nonlocal tail `(R^ps INT_{|y-x|>R} |u(y)|^(p-1) |x-y|^(-N-ps) dy)^(1/(p-1))`.
///
/// Nodal sources sum their cells, extended by zero outside the domain.
/// Closed-form sources integrate dyadically; compact supports terminate
/// exactly and growth envelopes must stay below the kernel order.
pub fn tail(src: &Source, x: Point, radius: f64, params: &OperatorParams) -> Result<f64> {
    if !radius.is_finite() || !(radius > 0.0) {
        return Err(Error::Config(format!("tail radius must be positive, got {radius}")));
    }
    let q = params.ps();
    let pm1 = params.pm1();
    let integral = match src {
        Source::Sampled { u, grid } => {
            if u.len() != grid.len() {
                return Err(Error::Mismatch(format!(
                    "grid function has {} values on a grid with {} nodes",
                    u.len(),
                    grid.len()
                )));
            }
            let dim = grid.domain().dim() as f64;
            let mut acc = 0.0;
            for (i, &y) in grid.nodes().iter().enumerate() {
                let r = dist(x, y);
                if r > radius {
                    acc += u.values[i].abs().powf(pm1) * grid.vols()[i] * r.powf(-dim - q);
                }
            }
            acc
        }
        Source::Analytic(field) => analytic_tail_integral(field, x, radius, pm1, q)?,
    };
    Ok((radius.powf(q) * integral).powf(1.0 / pm1))
}

fn analytic_tail_integral(
    field: &AnalyticField,
    x: Point,
    radius: f64,
    pm1: f64,
    q: f64,
) -> Result<f64> {
    let dim = field.dim();
    let mut h: Box<dyn FnMut(f64) -> f64> = match dim {
        1 => Box::new(move |r: f64| {
            let a = field.value([x[0] + r, x[1]]).abs().powf(pm1);
            let b = field.value([x[0] - r, x[1]]).abs().powf(pm1);
            (a + b) * r.powf(-1.0 - q)
        }),
        _ => {
            let dirs: Vec<(f64, f64)> = (0..ANGLES)
                .map(|m| {
                    let theta = (m as f64 + 0.5) * std::f64::consts::PI / ANGLES as f64;
                    (theta.cos(), theta.sin())
                })
                .collect();
            let measure = std::f64::consts::PI / ANGLES as f64;
            Box::new(move |r: f64| {
                let mut g = 0.0;
                for &(c, s) in &dirs {
                    g += field.value([x[0] + r * c, x[1] + r * s]).abs().powf(pm1);
                    g += field.value([x[0] - r * c, x[1] - r * s]).abs().powf(pm1);
                }
                g * measure * r.powf(-1.0 - q)
            })
        }
    };

    let stop_at = match field.support() {
        Support::Compact { center, radius: rc } => Some(dist(x, center) + rc),
        Support::Growth { gamma, coeff } => {
            if gamma * pm1 >= q {
                return Err(Error::Divergent(format!(
                    "growth exponent {gamma} with p - 1 = {pm1} reaches the kernel order {q}, \
                     the tail diverges"
                )));
            }
            let _ = coeff;
            None
        }
    };

    let mut acc = 0.0;
    let mut lo = radius;
    for _ in 0..500 {
        if let Some(reach) = stop_at {
            if lo >= reach {
                return Ok(acc);
            }
        }
        let hi = match stop_at {
            Some(reach) => (2.0 * lo).min(reach),
            None => 2.0 * lo,
        };
        let (v, _) = adaptive_gauss(&mut h, lo, hi, PANEL_REL_TOL, PANEL_DEPTH);
        acc += v;
        if stop_at.is_none() {
            // remaining mass under the growth envelope
            let (gamma, coeff) = match field.support() {
                Support::Growth { gamma, coeff } => (gamma, coeff),
                Support::Compact { .. } => unreachable!(),
            };
            let kappa = (1.0 + x[0].hypot(x[1])) / hi + 1.0;
            let env = (coeff * kappa.powf(gamma)).powf(pm1);
            let rem = angular_measure(dim) * env * hi.powf(gamma * pm1 - q) / (q - gamma * pm1);
            if rem <= 1e-13 * acc.abs().max(1e-300) {
                return Ok(acc);
            }
        }
        lo = hi;
    }
    if stop_at.is_some() {
        Ok(acc)
    } else {
        Err(Error::NonConvergent(
            "tail quadrature failed to exhaust the growth envelope in 500 dyadic panels"
                .to_string(),
        ))
    }
}

/// Response of the operator at `x` inside the domain to adding a compactly
/// supported perturbation `v` living strictly outside it:
/// `2 INT [sp(u(x)-u(y)-v(y)) - sp(u(x)-u(y))] |x-y|^(-N-ps) dy` over the
/// support of `v`.
pub fn perturbation_rhs(
    u: &Source,
    v: &AnalyticField,
    x: Point,
    params: &OperatorParams,
    domain: &DomainSpec,
) -> Result<f64> {
    domain.validate()?;
    if !domain.contains(x) {
        return Err(Error::Precondition(format!(
            "evaluation point ({}, {}) must lie inside the domain",
            x[0], x[1]
        )));
    }
    let (cv, rv) = match v.support() {
        Support::Compact { center, radius } => (center, radius),
        Support::Growth { .. } => {
            return Err(Error::Config(
                "the perturbation must be compactly supported".to_string(),
            ));
        }
    };
    let separation = dist(cv, domain.center()) - rv - 0.5 * domain.diameter();
    if !(separation > 0.0) {
        return Err(Error::Precondition(format!(
            "the perturbation support must sit at positive distance from the domain, \
             got separation {separation}"
        )));
    }
    let ux = match u {
        Source::Analytic(f) => f.value(x),
        Source::Sampled { u: gu, grid } => {
            if grid.domain() != domain {
                return Err(Error::Mismatch(
                    "sampled field lives on a different domain".to_string(),
                ));
            }
            let i = grid.node_index(x).ok_or_else(|| {
                Error::Precondition(format!(
                    "evaluation point ({}, {}) is not a node of the sampled grid",
                    x[0], x[1]
                ))
            })?;
            gu.values[i]
        }
    };
    if !ux.is_finite() {
        return Err(Error::Evaluation(format!("base field evaluated to {ux}")));
    }
    let q = params.ps();
    let pm1 = params.pm1();
    // on the support of v the base field is either the closed form or, for
    // nodal sources, the zero extension
    let u_at = |y: Point| -> f64 {
        match u {
            Source::Analytic(f) => f.value(y),
            Source::Sampled { .. } => 0.0,
        }
    };

    let value = match domain.dim() {
        1 => {
            let mut f = |y: f64| {
                let yy = [y, 0.0];
                let uy = u_at(yy);
                let base = ux - uy;
                (signed_power(base - v.value(yy), pm1) - signed_power(base, pm1))
                    * (x[0] - y).abs().powf(-1.0 - q)
            };
            let (val, _) = adaptive_gauss(&mut f, cv[0] - rv, cv[0] + rv, 1e-11, 30);
            val
        }
        _ => {
            let mut acc = 0.0;
            for m in 0..ANGLES {
                let phi = (m as f64 + 0.5) * std::f64::consts::TAU / ANGLES as f64;
                let (c, s) = (phi.cos(), phi.sin());
                let mut f = |rho: f64| {
                    let yy = [cv[0] + rho * c, cv[1] + rho * s];
                    let uy = u_at(yy);
                    let base = ux - uy;
                    (signed_power(base - v.value(yy), pm1) - signed_power(base, pm1))
                        * rho
                        * dist(x, yy).powf(-2.0 - q)
                };
                let (val, _) = adaptive_gauss(&mut f, 0.0, rv, 1e-11, 30);
                acc += val;
            }
            acc * std::f64::consts::TAU / ANGLES as f64
        }
    };
    if !value.is_finite() {
        return Err(Error::Evaluation(
            "perturbation response integrated to a non-finite value".to_string(),
        ));
    }
    Ok(2.0 * value)
}
