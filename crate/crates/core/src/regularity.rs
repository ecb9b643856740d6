//! Checkers for the classical estimates on discrete solutions: comparison,
//! a-priori bounds, boundary behavior, oscillation decay, and the weak
//! Harnack inequality.
//!
//! Each checker measures a quantity whose continuum counterpart obeys a
//! sharp inequality, and reports the measured value; deciding whether the
//! measurement is acceptable stays with the caller.

use crate::domain::{dist, DomainSpec, Grid, GridFunction, Point};
use crate::energy::{solve, SolveOptions};
use crate::kernel::{
    eval_pointwise, tail, EpsilonSchedule, KernelWeights, OperatorParams, Source,
};
use crate::{Error, Result};

/// Largest positive part of `u1 - u2` after solving both sources.
///
/// The sources must satisfy `f1 <= f2` nodewise; the discrete comparison
/// principle then demands `u1 <= u2` up to solver resolution, and the
/// returned violation measures how far that fails.
pub fn comparison_check(
    w: &KernelWeights,
    f1: &GridFunction,
    f2: &GridFunction,
    opts: &SolveOptions,
) -> Result<f64> {
    if f1.len() != f2.len() || f1.len() != w.n_nodes() {
        return Err(Error::Mismatch(format!(
            "sources carry {} and {} values on {} nodes",
            f1.len(),
            f2.len(),
            w.n_nodes()
        )));
    }
    for i in 0..f1.len() {
        if !(f1.values[i] <= f2.values[i]) {
            return Err(Error::Precondition(format!(
                "ordered sources required, f1 > f2 at node {i}: {} > {}",
                f1.values[i], f2.values[i]
            )));
        }
    }
    let (u1, _) = solve(w, f1, opts)?;
    let (u2, _) = solve(w, f2, opts)?;
    let mut violation = 0.0f64;
    for i in 0..u1.len() {
        violation = violation.max(u1.values[i] - u2.values[i]);
    }
    Ok(violation.max(0.0))
}

/// Sup norms of constant-source solutions across source levels, with the
/// fitted homogeneity slope and the bound constants.
#[derive(Debug, Clone)]
pub struct AprioriReport {
    /// Source levels, each solved with `f` identically equal to it.
    pub k_values: Vec<f64>,
    /// Sup norm of each solution.
    pub sup_norms: Vec<f64>,
    /// Least-squares slope of `log sup|u|` against `log K`; the exact
    /// homogeneity is `1/(p-1)`.
    pub slope: f64,
    /// `sup|u| / (K diam^ps)^(1/(p-1))` per level; the a-priori bound says
    /// these stay below a constant independent of `K`.
    pub constants: Vec<f64>,
}

/// Solves the constant-source problem at each level and fits the scaling.
pub fn apriori_check(
    w: &KernelWeights,
    k_values: &[f64],
    opts: &SolveOptions,
) -> Result<AprioriReport> {
    if k_values.len() < 2 {
        return Err(Error::Config(format!(
            "the scaling fit needs at least two source levels, got {}",
            k_values.len()
        )));
    }
    if k_values.iter().any(|&k| !k.is_finite() || k <= 0.0) {
        return Err(Error::Config("source levels must be positive and finite".to_string()));
    }
    let pm1 = w.params().pm1();
    let ps = w.params().ps();
    let mut sup_norms = Vec::with_capacity(k_values.len());
    let mut constants = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let f = GridFunction::constant(k, w.n_nodes());
        let (u, _) = solve(w, &f, opts)?;
        let sup = u.sup_norm();
        sup_norms.push(sup);
        constants.push(sup / (k * w.diam().powf(ps)).powf(1.0 / pm1));
    }
    let xs: Vec<f64> = k_values.iter().map(|k| k.ln()).collect();
    let ys: Vec<f64> = sup_norms.iter().map(|s| s.ln()).collect();
    let (slope, _) = least_squares(&xs, &ys)?;
    Ok(AprioriReport { k_values: k_values.to_vec(), sup_norms, slope, constants })
}

/// Ratios `|u| / delta^s` through a boundary collar.
#[derive(Debug, Clone)]
pub struct BoundaryReport {
    /// Largest ratio in the collar.
    pub sup_ratio: f64,
    /// `(delta, ratio)` per collar node, ordered by increasing distance.
    pub profile: Vec<(f64, f64)>,
}

/// Measures `|u_i| / delta_i^s` over the collar `delta <= rho`.
pub fn boundary_ratio(
    u: &GridFunction,
    grid: &Grid,
    params: &OperatorParams,
    rho: f64,
) -> Result<BoundaryReport> {
    if u.len() != grid.len() {
        return Err(Error::Mismatch(format!(
            "{} values on a grid with {} nodes",
            u.len(),
            grid.len()
        )));
    }
    if !rho.is_finite() || rho <= 0.0 {
        return Err(Error::Config(format!("collar width must be positive, got {rho}")));
    }
    let s = params.s();
    let mut profile = Vec::new();
    for (i, &x) in grid.nodes().iter().enumerate() {
        let delta = grid.domain().boundary_distance(x);
        if delta <= rho {
            profile.push((delta, u.values[i].abs() / delta.powf(s)));
        }
    }
    if profile.is_empty() {
        return Err(Error::Geometry(format!(
            "no node lies within distance {rho} of the boundary"
        )));
    }
    profile.sort_by(|a, b| a.0.total_cmp(&b.0));
    let sup_ratio = profile.iter().fold(0.0f64, |m, &(_, r)| m.max(r));
    Ok(BoundaryReport { sup_ratio, profile })
}

/// Oscillation of `u` over closed balls about `center`, one per radius.
///
/// Every radius must capture at least one node; shrinking below the grid
/// resolution is a geometry error, not a zero.
pub fn oscillation_decay(
    u: &GridFunction,
    grid: &Grid,
    center: Point,
    radii: &[f64],
) -> Result<Vec<f64>> {
    if u.len() != grid.len() {
        return Err(Error::Mismatch(format!(
            "{} values on a grid with {} nodes",
            u.len(),
            grid.len()
        )));
    }
    if radii.is_empty() {
        return Err(Error::Config("no radii given".to_string()));
    }
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::Config(format!("radii must be positive, got {r}")));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, &x) in grid.nodes().iter().enumerate() {
            if dist(x, center) <= r * (1.0 + 1e-12) {
                lo = lo.min(u.values[i]);
                hi = hi.max(u.values[i]);
            }
        }
        if lo > hi {
            return Err(Error::Geometry(format!(
                "radius {r} is too small, the ball about ({}, {}) holds no node",
                center[0], center[1]
            )));
        }
        out.push(hi - lo);
    }
    Ok(out)
}

/// Power-law fit of an oscillation profile.
#[derive(Debug, Clone)]
pub struct HolderReport {
    /// Fitted decay exponent.
    pub alpha: f64,
    /// Fitted oscillation at the largest radius.
    pub lambda: f64,
    /// Coefficient of determination of the log-log fit; 1 means an exact
    /// power law over the radii that entered.
    pub r2: f64,
    /// The radii that entered the fit.
    pub radii: Vec<f64>,
    /// The oscillations that entered the fit.
    pub oscillations: Vec<f64>,
}

/// Fits `osc(r) ~ lambda (r / r_max)^alpha` by least squares in log-log
/// coordinates.
///
/// Radii with zero oscillation are excluded; a profile that vanishes at
/// every radius is flat and reports the cap exponent 1 with zero amplitude.
pub fn holder_fit(radii: &[f64], oscillations: &[f64]) -> Result<HolderReport> {
    if radii.len() != oscillations.len() || radii.len() < 2 {
        return Err(Error::Config(format!(
            "the fit needs matching lists of at least two radii, got {} and {}",
            radii.len(),
            oscillations.len()
        )));
    }
    if radii.iter().any(|&r| !r.is_finite() || r <= 0.0) {
        return Err(Error::Config("radii must be positive and finite".to_string()));
    }
    if oscillations.iter().any(|&o| !o.is_finite() || o < 0.0) {
        return Err(Error::Config("oscillations must be nonnegative and finite".to_string()));
    }
    let r_max = radii.iter().fold(0.0f64, |m, &r| m.max(r));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&r, &o) in radii.iter().zip(oscillations) {
        if o > 0.0 {
            xs.push(r.ln());
            ys.push(o.ln());
        }
    }
    if xs.is_empty() {
        return Ok(HolderReport {
            alpha: 1.0,
            lambda: 0.0,
            r2: 1.0,
            radii: radii.to_vec(),
            oscillations: oscillations.to_vec(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::Precondition(
            "only one radius has positive oscillation, the decay rate is undetermined"
                .to_string(),
        ));
    }
    let (alpha, intercept) = least_squares(&xs, &ys)?;
    let lambda = (intercept + alpha * r_max.ln()).exp();
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let e = y - (intercept + alpha * x);
            e * e
        })
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(HolderReport {
        alpha,
        lambda,
        r2,
        radii: radii.to_vec(),
        oscillations: oscillations.to_vec(),
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Config("all abscissae coincide, no slope is defined".to_string()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Weak Harnack measurement over one ball.
#[derive(Debug, Clone)]
pub struct HarnackReport {
    /// Infimum of `u` over the ball's nodes.
    pub inf_ball: f64,
    /// Volume-weighted average of `u` over the ball's nodes.
    pub avg_ball: f64,
    /// `c_pen (K radius^ps)^(1/(p-1))`, the source allowance.
    pub penalty: f64,
    /// `c_tail` times the tail of the negative part outside `eps * radius`.
    pub tail_term: f64,
    /// `(inf + penalty + tail_term) / avg`; the weak Harnack inequality
    /// bounds this away from zero uniformly.
    pub sigma: f64,
    /// Ball center.
    pub center: Point,
    /// Ball radius.
    pub radius: f64,
    /// Source bound entering the penalty.
    pub k_bound: f64,
    /// Penalty coefficient.
    pub c_pen: f64,
    /// Tail coefficient.
    pub c_tail: f64,
    /// Tail radius factor.
    pub eps: f64,
}

/// Measures the weak Harnack quotient of a nonnegative discrete supersolution
/// over the ball `B(center, radius)`.
///
/// Requires the closed ball inside the domain and `u >= 0` on its nodes; the
/// negative part outside enters through the tail term.
#[allow(clippy::too_many_arguments)]
pub fn harnack_check(
    u: &GridFunction,
    grid: &Grid,
    params: &OperatorParams,
    center: Point,
    radius: f64,
    k_bound: f64,
    c_pen: f64,
    c_tail: f64,
    eps: f64,
) -> Result<HarnackReport> {
    if u.len() != grid.len() {
        return Err(Error::Mismatch(format!(
            "{} values on a grid with {} nodes",
            u.len(),
            grid.len()
        )));
    }
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::Config(format!("ball radius must be positive, got {radius}")));
    }
    if !(k_bound >= 0.0) || !(c_pen >= 0.0) || !(c_tail >= 0.0) || !(eps > 0.0) {
        return Err(Error::Config(
            "harnack coefficients must be nonnegative with a positive tail factor".to_string(),
        ));
    }
    if grid.domain().boundary_distance(center) <= radius {
        return Err(Error::Precondition(format!(
            "the ball of radius {radius} about ({}, {}) leaves the domain",
            center[0], center[1]
        )));
    }
    let mut inf_ball = f64::INFINITY;
    let mut mass = 0.0;
    let mut vol = 0.0;
    for (i, &x) in grid.nodes().iter().enumerate() {
        if dist(x, center) <= radius {
            let v = u.values[i];
            if v < 0.0 {
                return Err(Error::Precondition(format!(
                    "nonnegativity on the ball is required, u = {v} at node {i}"
                )));
            }
            inf_ball = inf_ball.min(v);
            mass += v * grid.vols()[i];
            vol += grid.vols()[i];
        }
    }
    if vol == 0.0 {
        return Err(Error::Geometry(format!(
            "radius {radius} is too small, the ball holds no node"
        )));
    }
    let avg_ball = mass / vol;
    if avg_ball == 0.0 {
        return Err(Error::Precondition(
            "u vanishes identically on the ball, the quotient is undefined".to_string(),
        ));
    }
    let neg = GridFunction {
        values: u.values.iter().map(|&v| v.min(0.0)).collect(),
    };
    let tail_value = tail(&Source::Sampled { u: &neg, grid }, center, eps * radius, params)?;
    let pm1 = params.pm1();
    let penalty = c_pen * (k_bound * radius.powf(params.ps())).powf(1.0 / pm1);
    let tail_term = c_tail * tail_value;
    let sigma = (inf_ball + penalty + tail_term) / avg_ball;
    Ok(HarnackReport {
        inf_ball,
        avg_ball,
        penalty,
        tail_term,
        sigma,
        center,
        radius,
        k_bound,
        c_pen,
        c_tail,
        eps,
    })
}

/// Operator values of the distance power `delta^s` at collar probes.
#[derive(Debug, Clone)]
pub struct DeltaSReport {
    /// `(delta, value, error bar)` per probe.
    pub probes: Vec<(f64, f64, f64)>,
    /// Largest probe magnitude.
    pub sup: f64,
    /// Largest relative change when one graded level is added.
    pub drift: f64,
}

/// Evaluates the operator on the field `delta^s` at points of prescribed
/// boundary distance inside the collar of width `rho`.
///
/// The continuum estimate says these values form a bounded right-hand side;
/// the report carries each value with its quadrature bar, plus the drift
/// under one extra graded level as a stability measure.
pub fn delta_s_rhs_check(
    domain: &DomainSpec,
    params: &OperatorParams,
    deltas: &[f64],
    rho: f64,
    schedule: &EpsilonSchedule,
    far_cutoff: f64,
) -> Result<DeltaSReport> {
    domain.validate()?;
    if deltas.is_empty() {
        return Err(Error::Config("no probe distances given".to_string()));
    }
    if !rho.is_finite() || rho <= 0.0 || rho > 0.5 * domain.diameter() {
        return Err(Error::Config(format!(
            "collar width must lie in (0, diam/2], got {rho}"
        )));
    }
    for &d in deltas {
        if !(d > 0.0 && d <= rho) {
            return Err(Error::Precondition(format!(
                "probe distance {d} leaves the collar (0, {rho}]"
            )));
        }
    }
    let field = crate::domain::AnalyticField::distance_power(*domain, params.s())?;
    let probe_point = |delta: f64| -> Point {
        match *domain {
            DomainSpec::Interval { a, .. } => [a + delta, 0.0],
            DomainSpec::Disc { r0 } => [r0 - delta, 0.0],
        }
    };
    let deeper = EpsilonSchedule { eps0: schedule.eps0, levels: schedule.levels.max(12) + 1 };
    let mut probes = Vec::with_capacity(deltas.len());
    let mut sup = 0.0f64;
    let mut drift = 0.0f64;
    for &delta in deltas {
        let x = probe_point(delta);
        // the sign structure near the boundary is the point here, so the
        // evaluation runs even for exponents outside the safe pointwise range
        let coarse = eval_pointwise(&field, x, params, schedule, far_cutoff, true)?;
        let fine = eval_pointwise(&field, x, params, &deeper, far_cutoff, true)?;
        let rel = (fine.value - coarse.value).abs() / coarse.value.abs().max(1e-300);
        drift = drift.max(rel);
        sup = sup.max(coarse.value.abs());
        probes.push((delta, coarse.value, coarse.error_bar));
    }
    Ok(DeltaSReport { probes, sup, drift })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_grid;
    use crate::kernel::assemble_weights;

    fn setup(p: f64, s: f64, n: usize) -> (Grid, KernelWeights) {
        let d = DomainSpec::Interval { a: -1.0, b: 1.0 };
        let g = build_grid(&d, n).unwrap();
        let w = assemble_weights(&g, &OperatorParams::new(p, s).unwrap()).unwrap();
        (g, w)
    }

    #[test]
    fn comparison_rejects_unordered_sources() {
        let (_, w) = setup(2.0, 0.5, 16);
        let f1 = GridFunction::constant(2.0, 16);
        let f2 = GridFunction::constant(1.0, 16);
        let r = comparison_check(&w, &f1, &f2, &SolveOptions::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn equal_sources_give_no_violation() {
        let (_, w) = setup(2.0, 0.5, 16);
        let f = GridFunction::constant(1.0, 16);
        let v = comparison_check(&w, &f, &f, &SolveOptions::default()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn oscillation_of_the_coordinate_is_twice_the_radius_on_aligned_balls() {
        let d = DomainSpec::Interval { a: -1.0, b: 1.0 };
        let g = build_grid(&d, 16).unwrap();
        let u = GridFunction { values: g.nodes().iter().map(|x| x[0]).collect() };
        // nodes sit at odd multiples of h/2, so radii (k + 1/2) h hit nodes
        let h = g.h();
        let radii = [1.5 * h, 3.5 * h];
        let osc = oscillation_decay(&u, &g, [0.0, 0.0], &radii).unwrap();
        assert!((osc[0] - 2.0 * radii[0]).abs() < 1e-14);
        assert!((osc[1] - 2.0 * radii[1]).abs() < 1e-14);
        let fit = holder_fit(&radii, &osc).unwrap();
        assert!((fit.alpha - 1.0).abs() < 1e-12, "slope {}", fit.alpha);
    }

    #[test]
    fn tiny_radius_is_a_geometry_error() {
        let d = DomainSpec::Interval { a: -1.0, b: 1.0 };
        let g = build_grid(&d, 16).unwrap();
        let u = GridFunction::zeros(16);
        let r = oscillation_decay(&u, &g, [0.0, 0.0], &[1e-6]);
        assert!(matches!(r, Err(Error::Geometry(_))));
    }

    #[test]
    fn flat_profiles_fit_the_cap_with_zero_amplitude() {
        let fit = holder_fit(&[0.1, 0.2, 0.4], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(fit.alpha, 1.0);
        assert_eq!(fit.lambda, 0.0);
    }

    #[test]
    fn harnack_of_the_constant_is_exactly_its_value_ratio() {
        let d = DomainSpec::Interval { a: -1.0, b: 1.0 };
        let g = build_grid(&d, 32).unwrap();
        let u = GridFunction::constant(1.0, 32);
        let p = OperatorParams::new(2.0, 0.5).unwrap();
        let rep = harnack_check(&u, &g, &p, [0.0, 0.0], 0.5, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(rep.inf_ball, 1.0);
        assert_eq!(rep.avg_ball, 1.0);
        assert_eq!(rep.penalty, 0.0);
        assert_eq!(rep.tail_term, 0.0);
        assert_eq!(rep.sigma, 1.0);
    }

    #[test]
    fn harnack_requires_nonnegativity_on_the_ball() {
        let d = DomainSpec::Interval { a: -1.0, b: 1.0 };
        let g = build_grid(&d, 32).unwrap();
        let mut u = GridFunction::constant(1.0, 32);
        u.values[16] = -0.1;
        let p = OperatorParams::new(2.0, 0.5).unwrap();
        let r = harnack_check(&u, &g, &p, [0.0, 0.0], 0.5, 0.0, 1.0, 1.0, 1.0);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn harnack_ball_must_stay_inside_the_domain() {
        let d = DomainSpec::Interval { a: -1.0, b: 1.0 };
        let g = build_grid(&d, 32).unwrap();
        let u = GridFunction::constant(1.0, 32);
        let p = OperatorParams::new(2.0, 0.5).unwrap();
        let r = harnack_check(&u, &g, &p, [0.5, 0.0], 0.75, 0.0, 1.0, 1.0, 1.0);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn collar_probes_must_stay_in_the_collar() {
        let d = DomainSpec::Interval { a: 0.0, b: 1.0 };
        let p = OperatorParams::new(2.0, 0.5).unwrap();
        let sched = EpsilonSchedule::default();
        let r = delta_s_rhs_check(&d, &p, &[0.3], 0.125, &sched, 1e3);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
