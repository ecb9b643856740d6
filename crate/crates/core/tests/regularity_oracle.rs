//! Quantitative checks of the estimate checkers against closed forms: the
//! square-root profile for boundary ratios and the torsion height, exact
//! power-law data for the oscillation fit, and exact scaling laws for the
//! a-priori report.

use fraclab_core::domain::{build_grid, sample, AnalyticField, DomainSpec, Grid, GridFunction};
use fraclab_core::energy::{torsion, SolveOptions};
use fraclab_core::kernel::{
    assemble_weights, tail, EpsilonSchedule, KernelWeights, OperatorParams, Source,
};
use fraclab_core::regularity::{
    apriori_check, boundary_ratio, comparison_check, delta_s_rhs_check, harnack_check, holder_fit,
    oscillation_decay,
};
use fraclab_core::Error;
use std::f64::consts::TAU;

const INTERVAL: DomainSpec = DomainSpec::Interval { a: -1.0, b: 1.0 };

fn weights(p: f64, s: f64, n: usize) -> (Grid, KernelWeights) {
    let grid = build_grid(&INTERVAL, n).unwrap();
    let w = assemble_weights(&grid, &OperatorParams::new(p, s).unwrap()).unwrap();
    (grid, w)
}

#[test]
fn ordered_sources_solve_to_ordered_solutions() {
    let (_, w) = weights(2.5, 0.6, 64);
    let f1 = GridFunction::constant(0.5, 64);
    let f2 = GridFunction::constant(1.0, 64);
    let v = comparison_check(&w, &f1, &f2, &SolveOptions::default()).unwrap();
    // the solutions are separated by a fixed fraction of their height, far
    // beyond solver resolution, so the positive part of u1 - u2 is empty
    assert_eq!(v, 0.0);
}

#[test]
fn mismatched_comparison_inputs_are_rejected() {
    let (_, w) = weights(2.0, 0.5, 16);
    let short = GridFunction::constant(0.5, 8);
    let f = GridFunction::constant(1.0, 16);
    assert!(matches!(
        comparison_check(&w, &short, &f, &SolveOptions::default()),
        Err(Error::Mismatch(_))
    ));
}

#[test]
fn scaling_fit_recovers_the_exact_homogeneity_slope() {
    // the descent trajectory commutes with source scaling, so the fitted
    // slope is pinned at 1/(p-1) up to rounding, not up to solver tolerance
    let (_, w) = weights(3.0, 0.5, 64);
    let rep = apriori_check(&w, &[0.1, 1.0, 10.0], &SolveOptions::default()).unwrap();
    assert!((rep.slope - 0.5).abs() <= 1e-6, "slope {:.12}", rep.slope);
    for c in &rep.constants {
        let rel = (c - rep.constants[0]).abs() / rep.constants[0];
        assert!(rel <= 1e-6, "constants spread {rel:.3e}");
    }
    assert_eq!(rep.k_values, vec![0.1, 1.0, 10.0]);
    assert_eq!(rep.sup_norms.len(), 3);
}

#[test]
fn unit_source_constant_matches_the_profile_height() {
    // at p = 2, s = 1/2 the solution of f = K is K (1-x^2)^{1/2} / tau, so
    // sup|u| / (K diam) converges to 1 / (2 tau) under refinement
    let (_, w) = weights(2.0, 0.5, 128);
    let rep = apriori_check(&w, &[1.0, 10.0], &SolveOptions::default()).unwrap();
    for c in &rep.constants {
        assert!((c - 1.0 / (2.0 * TAU)).abs() <= 1e-3, "constant {c:.8}");
    }
    assert!((rep.slope - 1.0).abs() <= 1e-6);
}

#[test]
fn apriori_rejects_degenerate_source_lists() {
    let (_, w) = weights(2.0, 0.5, 16);
    let opts = SolveOptions::default();
    assert!(matches!(apriori_check(&w, &[1.0], &opts), Err(Error::Config(_))));
    assert!(matches!(apriori_check(&w, &[1.0, 0.0], &opts), Err(Error::Config(_))));
    assert!(matches!(apriori_check(&w, &[1.0, -2.0], &opts), Err(Error::Config(_))));
}

#[test]
fn boundary_ratio_of_the_square_root_profile_has_the_closed_form() {
    let grid = build_grid(&INTERVAL, 128).unwrap();
    let u = sample(&AnalyticField::sqrt_profile(), &grid).unwrap();
    let params = OperatorParams::new(2.0, 0.5).unwrap();
    let rep = boundary_ratio(&u, &grid, &params, 0.25).unwrap();

    // (1-x^2)^{1/2} / delta^{1/2} = (2 - delta)^{1/2} on either side
    for &(delta, ratio) in &rep.profile {
        let exact = (2.0 - delta).sqrt();
        assert!((ratio - exact).abs() <= 1e-12 * exact, "ratio at delta {delta}");
    }
    let h = grid.h();
    assert_eq!(rep.profile.len(), 32);
    assert_eq!(rep.profile[0].0, 0.5 * h);
    let sup_exact = (2.0 - 0.5 * h).sqrt();
    assert!((rep.sup_ratio - sup_exact).abs() <= 1e-12 * sup_exact);
}

#[test]
fn boundary_collar_must_contain_nodes() {
    let grid = build_grid(&INTERVAL, 16).unwrap();
    let u = GridFunction::zeros(16);
    let params = OperatorParams::new(2.0, 0.5).unwrap();
    assert!(matches!(
        boundary_ratio(&u, &grid, &params, 1e-6),
        Err(Error::Geometry(_))
    ));
}

#[test]
fn exact_power_data_fit_recovers_exponent_and_amplitude() {
    let radii = [0.1, 0.2, 0.4, 0.8];
    let osc: Vec<f64> = radii.iter().map(|r: &f64| 3.0 * r.powf(0.7)).collect();
    let fit = holder_fit(&radii, &osc).unwrap();
    assert!((fit.alpha - 0.7).abs() <= 1e-12, "alpha {:.15}", fit.alpha);
    let lambda_exact = 3.0 * 0.8f64.powf(0.7);
    assert!((fit.lambda - lambda_exact).abs() <= 1e-12 * lambda_exact);
    assert!((fit.r2 - 1.0).abs() <= 1e-12, "exact power data must fit perfectly, r2 {}", fit.r2);
}

#[test]
fn single_positive_oscillation_cannot_determine_a_rate() {
    let r = holder_fit(&[0.1, 0.2], &[0.0, 0.5]);
    assert!(matches!(r, Err(Error::Precondition(_))));
}

#[test]
fn oscillations_grow_with_the_ball_radius() {
    let grid = build_grid(&INTERVAL, 64).unwrap();
    let u = sample(&AnalyticField::sqrt_profile(), &grid).unwrap();
    let h = grid.h();
    let radii = [3.5 * h, 7.5 * h, 15.5 * h];
    let osc = oscillation_decay(&u, &grid, [-1.0 + 0.5 * h, 0.0], &radii).unwrap();
    assert!(osc[0] > 0.0);
    assert!(osc[0] <= osc[1] && osc[1] <= osc[2]);
}

#[test]
fn harnack_of_the_torsion_profile_matches_the_closed_profile() {
    let params = OperatorParams::new(2.0, 0.5).unwrap();
    let (grid, u, rep) = torsion(&INTERVAL, &params, 128).unwrap();
    assert!(rep.converged);
    let hr = harnack_check(&u, &grid, &params, [0.0, 0.0], 0.25, 1.0, 1.0, 1.0, 1.0).unwrap();

    // the continuum torsion profile is (1-x^2)^{1/2} / tau
    let mut inf = f64::INFINITY;
    let mut mass = 0.0;
    let mut vol = 0.0;
    for (i, &x) in grid.nodes().iter().enumerate() {
        if x[0].abs() <= 0.25 {
            let v = (1.0 - x[0] * x[0]).sqrt() / TAU;
            inf = inf.min(v);
            mass += v * grid.vols()[i];
            vol += grid.vols()[i];
        }
    }
    assert!((hr.inf_ball - inf).abs() <= 2e-3, "inf {:.6} vs {:.6}", hr.inf_ball, inf);
    assert!((hr.avg_ball - mass / vol).abs() <= 2e-3);
    // a nonnegative solution has no negative tail, and ps = 1 makes the
    // penalty the bare product K radius
    assert_eq!(hr.tail_term, 0.0);
    assert!((hr.penalty - 0.25).abs() <= 1e-15);
    assert!(hr.sigma > 0.0);
    let recomputed = (hr.inf_ball + hr.penalty + hr.tail_term) / hr.avg_ball;
    assert_eq!(hr.sigma, recomputed);
}

#[test]
fn harnack_tail_term_counts_the_negative_exterior() {
    let grid = build_grid(&INTERVAL, 64).unwrap();
    let params = OperatorParams::new(2.0, 0.5).unwrap();
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| if x[0].abs() <= 0.25 { 1.0 } else { -1.0 })
        .collect();
    let u = GridFunction { values };
    let hr = harnack_check(&u, &grid, &params, [0.0, 0.0], 0.25, 0.0, 1.0, 2.0, 1.0).unwrap();

    let neg = GridFunction {
        values: u.values.iter().map(|&v| v.min(0.0)).collect(),
    };
    let direct = tail(&Source::Sampled { u: &neg, grid: &grid }, [0.0, 0.0], 0.25, &params).unwrap();
    assert!(direct > 0.0);
    assert_eq!(hr.tail_term, 2.0 * direct);
    assert_eq!(hr.penalty, 0.0);
    assert_eq!(hr.avg_ball, 1.0);
    assert_eq!(hr.sigma, 1.0 + hr.tail_term);
}

#[test]
fn collar_probe_values_are_bounded_and_stable() {
    let domain = DomainSpec::Interval { a: 0.0, b: 1.0 };
    let params = OperatorParams::new(2.0, 0.5).unwrap();
    let rep = delta_s_rhs_check(
        &domain,
        &params,
        &[0.05, 0.1, 0.2],
        0.25,
        &EpsilonSchedule::default(),
        1e6,
    )
    .unwrap();
    assert_eq!(rep.probes.len(), 3);
    let mut sup = 0.0f64;
    for &(delta, value, bar) in &rep.probes {
        assert!(value.is_finite() && bar.is_finite());
        assert!(delta > 0.0);
        sup = sup.max(value.abs());
    }
    assert_eq!(rep.sup, sup);
    assert!(rep.sup > 0.0);
    assert!(rep.drift < 0.2, "drift {:.3e}", rep.drift);
}

#[test]
fn collar_width_must_fit_the_domain() {
    let domain = DomainSpec::Interval { a: 0.0, b: 1.0 };
    let params = OperatorParams::new(2.0, 0.5).unwrap();
    let sched = EpsilonSchedule::default();
    assert!(matches!(
        delta_s_rhs_check(&domain, &params, &[0.05], 0.6, &sched, 1e6),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        delta_s_rhs_check(&domain, &params, &[], 0.25, &sched, 1e6),
        Err(Error::Config(_))
    ));
}
