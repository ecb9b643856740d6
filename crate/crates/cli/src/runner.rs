//! Drivers behind the four subcommands: each stage is timed, every artifact
//! is written atomically, and the manifest records what happened even when
//! a stage dies halfway.

use std::path::Path;
use std::time::Instant;

use fraclab_core::domain::{
    build_grid, sample, AnalyticField, DomainSpec, Grid, GridFunction,
};
use fraclab_core::energy::{residual, solve, SolveOptions, SolveReport};
use fraclab_core::kernel::{assemble_weights, eps_limit_series, eval_pointwise, KernelWeights};
use fraclab_core::regularity::{
    apriori_check, boundary_ratio, comparison_check, delta_s_rhs_check, harnack_check,
    holder_fit, oscillation_decay,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, Mode, SourceSpec};
use crate::output::{atomic_write, fmt_f64, Manifest, Outcome};

/// A stage that died, with the core error it died of.
struct StageError {
    stage: String,
    message: String,
}

/// Runs `f` as one named stage: wall time lands in the manifest either way,
/// a core error is tagged with the stage name.
fn timed<T>(
    man: &mut Manifest,
    stage: &str,
    f: impl FnOnce() -> fraclab_core::Result<T>,
) -> Result<T, StageError> {
    let t0 = Instant::now();
    let r = f();
    man.stages.push((stage.to_string(), t0.elapsed().as_secs_f64()));
    r.map_err(|e| StageError { stage: stage.to_string(), message: e.to_string() })
}

fn emit(
    man: &mut Manifest,
    out_dir: &Path,
    name: &str,
    content: &str,
) -> Result<(), StageError> {
    let t0 = Instant::now();
    atomic_write(&out_dir.join(name), content.as_bytes()).map_err(|e| StageError {
        stage: format!("write {name}"),
        message: e.to_string(),
    })?;
    man.stages.push((format!("write {name}"), t0.elapsed().as_secs_f64()));
    man.files.push(name.to_string());
    Ok(())
}

/// Exit contract: 0 all assertions pass, 1 an assertion failed, 2 the run
/// itself could not complete. The manifest is written in every case.
pub fn run(
    mode: Mode,
    cfg: &ExperimentConfig,
    out_dir: &Path,
    override_singular: bool,
    quiet: bool,
    parse_seconds: f64,
) -> i32 {
    let mut echo = cfg.echo();
    echo.push(("out_dir".into(), out_dir.display().to_string()));
    let mut man = Manifest::new(mode.name(), echo);
    man.stages.push(("parse".into(), parse_seconds));

    let drove = match mode {
        Mode::Solve => run_solve(cfg, out_dir, &mut man, quiet),
        Mode::EvalOp => run_eval(cfg, out_dir, &mut man, override_singular, quiet),
        Mode::Verify => run_verify(cfg, out_dir, &mut man, quiet),
        Mode::Suite => run_suite(cfg, out_dir, &mut man, quiet),
    };

    let code = match drove {
        Ok(()) => {
            if man.any_fail() {
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("fraclab: stage {} failed: {}", e.stage, e.message);
            man.failure_stage = Some(e.stage);
            2
        }
    };
    if let Err(e) = atomic_write(&out_dir.join("run_manifest.txt"), man.render().as_bytes()) {
        eprintln!("fraclab: cannot write run_manifest.txt: {e}");
        return 2;
    }
    if !quiet {
        let status = match code {
            0 => "pass",
            1 => "assertion failure",
            _ => "error",
        };
        println!("{}: {status}, manifest in {}", mode.name(), out_dir.display());
    }
    code
}

fn build_field(cfg: &ExperimentConfig) -> fraclab_core::Result<AnalyticField> {
    match cfg.field.as_str() {
        "halfspace_power" => AnalyticField::halfspace_power(cfg.params.s()),
        "sqrt_profile" => Ok(AnalyticField::sqrt_profile()),
        "bump" => AnalyticField::bump(cfg.domain.center()[0], cfg.domain.diameter() / 4.0),
        "distance_power" => AnalyticField::distance_power(cfg.domain, cfg.params.s()),
        other => unreachable!("field name {other} passed validation"),
    }
}

fn source_vector(cfg: &ExperimentConfig, grid: &Grid) -> fraclab_core::Result<GridFunction> {
    match &cfg.source {
        SourceSpec::Constant(k) => Ok(GridFunction::constant(*k, grid.len())),
        SourceSpec::Field { name, k } => {
            let f = match name.as_str() {
                "sqrt_profile" => AnalyticField::sqrt_profile(),
                "bump" => {
                    AnalyticField::bump(cfg.domain.center()[0], cfg.domain.diameter() / 4.0)?
                }
                other => unreachable!("source name {other} passed validation"),
            };
            let mut g = sample(&f, grid)?;
            for v in &mut g.values {
                *v *= k;
            }
            Ok(g)
        }
    }
}

fn solve_options(cfg: &ExperimentConfig) -> SolveOptions {
    SolveOptions {
        tolerance: cfg.solver_tolerance(),
        max_iterations: cfg.max_iterations,
        ..Default::default()
    }
}

fn convergence_outcome(rep: &SolveReport) -> Outcome {
    if rep.converged {
        Outcome::Pass
    } else {
        Outcome::Fail(format!(
            "residual {:.3e} after {} iterations, target not met",
            rep.residual_sup, rep.iterations
        ))
    }
}

/// Grid, weights, source, and minimizer for the config's own problem.
struct BaseSolve {
    grid: Grid,
    w: KernelWeights,
    f: GridFunction,
    u: GridFunction,
    report: SolveReport,
}

fn base_solve(cfg: &ExperimentConfig, man: &mut Manifest) -> Result<BaseSolve, StageError> {
    let n = cfg.n.expect("n validated for this subcommand");
    let grid = timed(man, "grid", || build_grid(&cfg.domain, n))?;
    let w = timed(man, "assemble", || assemble_weights(&grid, &cfg.params))?;
    let f = timed(man, "source", || source_vector(cfg, &grid))?;
    let opts = solve_options(cfg);
    let (u, report) = timed(man, "solve", || solve(&w, &f, &opts))?;
    Ok(BaseSolve { grid, w, f, u, report })
}

fn run_solve(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    man: &mut Manifest,
    quiet: bool,
) -> Result<(), StageError> {
    let base = base_solve(cfg, man)?;
    if !quiet {
        println!(
            "solved {} nodes in {} iterations, residual {:.3e}",
            base.grid.len(),
            base.report.iterations,
            base.report.residual_sup
        );
    }
    man.assertions
        .push(("solver_converged".into(), convergence_outcome(&base.report)));

    let s = cfg.params.s();
    let dim = cfg.domain.dim();
    let mut csv = String::from(if dim == 1 {
        "x,delta,u,u_over_delta_s\n"
    } else {
        "x,y,delta,u,u_over_delta_s\n"
    });
    for (i, &x) in base.grid.nodes().iter().enumerate() {
        let delta = cfg.domain.boundary_distance(x);
        let mut cols = vec![fmt_f64(x[0])];
        if dim == 2 {
            cols.push(fmt_f64(x[1]));
        }
        cols.push(fmt_f64(delta));
        cols.push(fmt_f64(base.u.values[i]));
        cols.push(fmt_f64(base.u.values[i] / delta.powf(s)));
        csv.push_str(&cols.join(","));
        csv.push('\n');
    }
    emit(man, out_dir, "solve.csv", &csv)
}

fn run_eval(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    man: &mut Manifest,
    override_singular: bool,
    quiet: bool,
) -> Result<(), StageError> {
    let field = timed(man, "field", || build_field(cfg))?;
    let evals = timed(man, "evaluate", || {
        let mut v = Vec::new();
        for &x in &cfg.probes {
            let pt = [x, 0.0];
            let pe = eval_pointwise(
                &field,
                pt,
                &cfg.params,
                &cfg.schedule,
                cfg.far_cutoff,
                override_singular,
            )?;
            let series =
                eps_limit_series(&field, pt, &cfg.params, &cfg.schedule, cfg.far_cutoff)?;
            v.push((x, pe, series));
        }
        Ok(v)
    })?;

    let partials = evals[0].2.partials.len();
    let mut header: Vec<String> = vec!["x".into(), "value".into(), "error_bar".into()];
    header.extend((0..partials).map(|k| format!("partial_{k}")));
    let mut csv = header.join(",");
    csv.push('\n');
    let mut finite = true;
    for (x, pe, series) in &evals {
        if !quiet {
            println!("eval at x = {x}: {} within {:.3e}", fmt_f64(pe.value), pe.error_bar);
        }
        finite &= pe.value.is_finite() && pe.error_bar.is_finite();
        let mut cols = vec![fmt_f64(*x), fmt_f64(pe.value), fmt_f64(pe.error_bar)];
        cols.extend(series.partials.iter().map(|&v| fmt_f64(v)));
        csv.push_str(&cols.join(","));
        csv.push('\n');
    }
    man.assertions.push((
        "values_finite".into(),
        if finite {
            Outcome::Pass
        } else {
            Outcome::Fail("a value or error bar came back non-finite".into())
        },
    ));
    emit(man, out_dir, "eval_op.csv", &csv)
}

fn run_verify(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    man: &mut Manifest,
    quiet: bool,
) -> Result<(), StageError> {
    let check = cfg.check.clone().expect("check validated for verify");
    let pr = &cfg.params;
    let diam = cfg.domain.diameter();
    match check.as_str() {
        "comparison" => {
            let n = cfg.n.expect("n validated");
            let grid = timed(man, "grid", || build_grid(&cfg.domain, n))?;
            let w = timed(man, "assemble", || assemble_weights(&grid, &cfg.params))?;
            let opts = solve_options(cfg);
            let tol = opts.tolerance;
            let rows = timed(man, "compare", || {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                let mut rows = Vec::new();
                for _ in 0..cfg.pairs {
                    let f1: Vec<f64> =
                        (0..grid.len()).map(|_| 2.0 * rng.random::<f64>()).collect();
                    let f2: Vec<f64> = f1.iter().map(|v| v + rng.random::<f64>()).collect();
                    let sup2 = f2.iter().fold(0.0f64, |m, &v| m.max(v));
                    let allowance =
                        10.0 * tol * sup2.powf(1.0 / pr.pm1()) * diam.powf(pr.s());
                    let violation = comparison_check(
                        &w,
                        &GridFunction { values: f1 },
                        &GridFunction { values: f2 },
                        &opts,
                    )?;
                    rows.push((violation, allowance));
                }
                Ok(rows)
            })?;
            let mut csv = String::from("pair,violation,allowance\n");
            let mut ok = true;
            for (i, (v, a)) in rows.iter().enumerate() {
                csv.push_str(&format!("{i},{},{}\n", fmt_f64(*v), fmt_f64(*a)));
                ok &= v <= a;
                if !quiet {
                    println!("pair {i}: violation {v:.3e}, allowance {a:.3e}");
                }
            }
            man.assertions.push((
                "comparison_no_crossing".into(),
                if ok {
                    Outcome::Pass
                } else {
                    Outcome::Fail("an ordered pair crossed beyond the solver allowance".into())
                },
            ));
            emit(man, out_dir, "verify.csv", &csv)
        }
        "apriori" => {
            let n = cfg.n.expect("n validated");
            let grid = timed(man, "grid", || build_grid(&cfg.domain, n))?;
            let w = timed(man, "assemble", || assemble_weights(&grid, &cfg.params))?;
            let opts = SolveOptions {
                tolerance: cfg.scaling_tolerance(),
                max_iterations: cfg.max_iterations,
                ..Default::default()
            };
            let rep = timed(man, "scale", || apriori_check(&w, &cfg.k_list, &opts))?;
            let mut csv = String::from("k,sup_norm,constant\n");
            for i in 0..rep.k_values.len() {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    fmt_f64(rep.k_values[i]),
                    fmt_f64(rep.sup_norms[i]),
                    fmt_f64(rep.constants[i])
                ));
            }
            let slope_err = (rep.slope - 1.0 / pr.pm1()).abs();
            let cmax = rep.constants.iter().fold(f64::MIN, |m, &c| m.max(c));
            let cmin = rep.constants.iter().fold(f64::MAX, |m, &c| m.min(c));
            let spread = (cmax - cmin) / cmax;
            if !quiet {
                println!("slope error {slope_err:.3e}, constant spread {spread:.3e}");
            }
            man.assertions.push((
                "scaling_slope".into(),
                if slope_err <= 1e-6 {
                    Outcome::Pass
                } else {
                    Outcome::Fail(format!("slope off 1/(p-1) by {slope_err:.3e}"))
                },
            ));
            man.assertions.push((
                "scaling_constant".into(),
                if spread <= 1e-6 {
                    Outcome::Pass
                } else {
                    Outcome::Fail(format!("constants spread {spread:.3e} across k_list"))
                },
            ));
            emit(man, out_dir, "verify.csv", &csv)
        }
        "boundary" => {
            let base = base_solve(cfg, man)?;
            man.assertions
                .push(("solver_converged".into(), convergence_outcome(&base.report)));
            let rep = timed(man, "collar", || {
                boundary_ratio(&base.u, &base.grid, pr, cfg.collar())
            })?;
            let mut csv = String::from("delta,ratio\n");
            for (d, r) in &rep.profile {
                csv.push_str(&format!("{},{}\n", fmt_f64(*d), fmt_f64(*r)));
            }
            if !quiet {
                println!("sup |u|/delta^s = {:.6} over the collar", rep.sup_ratio);
            }
            man.assertions.push((
                "boundary_ratio_finite".into(),
                if rep.sup_ratio.is_finite() {
                    Outcome::Pass
                } else {
                    Outcome::Fail("the collar ratio is not finite".into())
                },
            ));
            emit(man, out_dir, "verify.csv", &csv)
        }
        "harnack" => {
            let base = base_solve(cfg, man)?;
            man.assertions
                .push(("solver_converged".into(), convergence_outcome(&base.report)));
            let k_bound = base.f.sup_norm();
            let hr = timed(man, "harnack", || {
                harnack_check(
                    &base.u,
                    &base.grid,
                    pr,
                    cfg.domain.center(),
                    diam / 8.0,
                    k_bound,
                    1.0,
                    1.0,
                    1.0,
                )
            })?;
            let mut csv = String::from("inf_ball,avg_ball,penalty,tail_term,sigma\n");
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_f64(hr.inf_ball),
                fmt_f64(hr.avg_ball),
                fmt_f64(hr.penalty),
                fmt_f64(hr.tail_term),
                fmt_f64(hr.sigma)
            ));
            if !quiet {
                println!("harnack quotient sigma = {:.6}", hr.sigma);
            }
            man.assertions.push((
                "harnack_sigma_positive".into(),
                if hr.sigma > 0.0 {
                    Outcome::Pass
                } else {
                    Outcome::Fail(format!("sigma = {:.6e}", hr.sigma))
                },
            ));
            emit(man, out_dir, "verify.csv", &csv)
        }
        "holder" => {
            let base = base_solve(cfg, man)?;
            man.assertions
                .push(("solver_converged".into(), convergence_outcome(&base.report)));
            let (alpha, radii, oscs) = timed(man, "oscillation", || {
                collar_alpha_min(cfg, &base.grid, &base.u)
            })?;
            let mut csv = String::from("radius,oscillation\n");
            for (r, o) in radii.iter().zip(&oscs) {
                csv.push_str(&format!("{},{}\n", fmt_f64(*r), fmt_f64(*o)));
            }
            if !quiet {
                println!("smallest collar decay exponent {alpha:.4}");
            }
            man.assertions.push((
                "oscillation_exponent_positive".into(),
                if alpha.is_finite() && alpha > 0.0 {
                    Outcome::Pass
                } else {
                    Outcome::Fail(format!("fitted exponent {alpha:.6e}"))
                },
            ));
            emit(man, out_dir, "verify.csv", &csv)
        }
        "delta_s" => {
            let (deltas, rho) = delta_probes(cfg);
            let rep = timed(man, "probe", || {
                delta_s_rhs_check(&cfg.domain, pr, &deltas, rho, &cfg.schedule, cfg.far_cutoff)
            })?;
            let mut csv = String::from("delta,value,error_bar\n");
            for (d, v, b) in &rep.probes {
                csv.push_str(&format!("{},{},{}\n", fmt_f64(*d), fmt_f64(*v), fmt_f64(*b)));
            }
            if !quiet {
                println!("sup {:.4}, refinement drift {:.4}", rep.sup, rep.drift);
            }
            man.assertions.push((
                "delta_s_sup_finite".into(),
                if rep.sup.is_finite() {
                    Outcome::Pass
                } else {
                    Outcome::Fail("operator values on delta^s are not finite".into())
                },
            ));
            man.assertions.push((
                "delta_s_drift_small".into(),
                if rep.drift < 0.2 {
                    Outcome::Pass
                } else {
                    Outcome::Fail(format!("drift {:.4} under one extra level", rep.drift))
                },
            ));
            emit(man, out_dir, "verify.csv", &csv)
        }
        other => unreachable!("check name {other} passed validation"),
    }
}

/// Probe distances and collar width for the distance-power source check.
fn delta_probes(cfg: &ExperimentConfig) -> (Vec<f64>, f64) {
    let diam = cfg.domain.diameter();
    let deltas = cfg
        .deltas
        .clone()
        .unwrap_or_else(|| vec![0.025 * diam, 0.05 * diam, 0.1 * diam]);
    (deltas, cfg.collar())
}

/// Smallest fitted oscillation-decay exponent over all collar centers,
/// with the profile of the minimizing center.
fn collar_alpha_min(
    cfg: &ExperimentConfig,
    grid: &Grid,
    u: &GridFunction,
) -> fraclab_core::Result<(f64, Vec<f64>, Vec<f64>)> {
    let radii = cfg.radii.clone().unwrap_or_else(|| {
        (2..=5).map(|k| grid.h() * f64::from(1u32 << k)).collect()
    });
    let rho = cfg.collar();
    let mut alpha = f64::INFINITY;
    let mut best: Option<Vec<f64>> = None;
    for &x in grid.nodes() {
        if grid.domain().boundary_distance(x) < rho {
            let oscs = oscillation_decay(u, grid, x, &radii)?;
            let fit = holder_fit(&radii, &oscs)?;
            if fit.alpha < alpha {
                alpha = fit.alpha;
                best = Some(oscs);
            }
        }
    }
    let oscs = best.ok_or_else(|| {
        fraclab_core::Error::Geometry("no node lies inside the collar".to_string())
    })?;
    Ok((alpha, radii, oscs))
}

struct Row {
    name: &'static str,
    outcome: Outcome,
    measured: Option<f64>,
    gate: &'static str,
    note: String,
}

fn run_suite(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    man: &mut Manifest,
    quiet: bool,
) -> Result<(), StageError> {
    let pr = &cfg.params;
    let (p, s) = (pr.p(), pr.s());
    let diam = cfg.domain.diameter();
    let base = base_solve(cfg, man)?;
    let constant_k = match cfg.source {
        SourceSpec::Constant(k) if k > 0.0 => Some(k),
        _ => None,
    };
    let mut rows: Vec<Row> = vec![Row {
        name: "solver_converged",
        outcome: convergence_outcome(&base.report),
        measured: Some(base.report.residual_sup),
        gate: "residual target met",
        note: format!("{} iterations", base.report.iterations),
    }];

    // Exact discrete identity: scaling the state by 2 scales the operator
    // part of the residual by 2^(p-1). Doubling is exact in floating point
    // for every state, so the defect is the operator's own.
    let rel = timed(man, "row homogeneity", || {
        let probe: Vec<f64> = base.grid.nodes().iter().map(|q| q[0] + 0.25 * q[0] * q[0]).collect();
        let zero = GridFunction::constant(0.0, base.grid.len());
        let r1 = residual(&GridFunction { values: probe.clone() }, &base.w, &zero)?;
        let r2 = residual(
            &GridFunction { values: probe.iter().map(|v| 2.0 * v).collect() },
            &base.w,
            &zero,
        )?;
        let factor = 2.0f64.powf(pr.pm1());
        let sup = r2.sup_norm();
        let dev = r1
            .values
            .iter()
            .zip(&r2.values)
            .map(|(a, b)| (b - factor * a).abs())
            .fold(0.0f64, f64::max);
        Ok(dev / sup)
    })?;
    rows.push(Row {
        name: "homogeneity",
        outcome: if rel <= 1e-12 {
            Outcome::Pass
        } else {
            Outcome::Fail(format!("relative defect {rel:.3e}"))
        },
        measured: Some(rel),
        gate: "relative defect <= 1e-12",
        note: "residual state doubled".into(),
    });

    // At the linear exponent with order one half the interval profile is
    // known in closed form, and solutions scale exactly with the source in
    // the discrete system, so the unit-source minimizer rescales to it.
    if p == 2.0 && s == 0.5 && matches!(cfg.domain, DomainSpec::Interval { .. }) {
        let worst = timed(man, "row closed_form", || {
            let tau = std::f64::consts::TAU;
            let u2pi = match constant_k {
                Some(k) => GridFunction {
                    values: base.u.values.iter().map(|v| v * tau / k).collect(),
                },
                None => {
                    let f = GridFunction::constant(tau, base.grid.len());
                    solve(&base.w, &f, &solve_options(cfg))?.0
                }
            };
            let (a, b) = match cfg.domain {
                DomainSpec::Interval { a, b } => (a, b),
                DomainSpec::Disc { .. } => unreachable!(),
            };
            let mid = 0.5 * (a + b);
            let radius = 0.5 * (b - a);
            let h = base.grid.h();
            let mut worst = 0.0f64;
            for (i, &x) in base.grid.nodes().iter().enumerate() {
                if (x[0] - mid).abs() <= 0.75 * h {
                    let exact = (radius * radius - (x[0] - mid) * (x[0] - mid)).sqrt();
                    worst = worst.max((u2pi.values[i] - exact).abs() / radius);
                }
            }
            Ok(worst)
        })?;
        rows.push(Row {
            name: "closed_form",
            outcome: if worst <= 5e-3 {
                Outcome::Pass
            } else {
                Outcome::Fail(format!("center deviation {worst:.3e}"))
            },
            measured: Some(worst),
            gate: "center value within 5e-3",
            note: "unit-source profile rescaled to the 2 pi source".into(),
        });
    } else {
        rows.push(Row {
            name: "closed_form",
            outcome: Outcome::Skip(
                "the closed-form profile needs p = 2, s = 0.5 on an interval".into(),
            ),
            measured: None,
            gate: "center value within 5e-3",
            note: String::new(),
        });
    }

    match constant_k {
        Some(_) => {
            let min_u = base.u.values.iter().fold(f64::INFINITY, |m, &v| m.min(v));
            rows.push(Row {
                name: "positivity",
                outcome: if min_u > 0.0 {
                    Outcome::Pass
                } else {
                    Outcome::Fail(format!("min u = {min_u:.3e}"))
                },
                measured: Some(min_u),
                gate: "min u > 0",
                note: "positive constant source forces a positive profile".into(),
            });

            let spread = symmetry_spread(cfg, &base.grid, &base.u);
            rows.push(Row {
                name: "symmetry",
                outcome: if spread <= 5e-2 {
                    Outcome::Pass
                } else {
                    Outcome::Fail(format!("symmetry spread {spread:.3e}"))
                },
                measured: Some(spread),
                gate: "symmetric within 5%",
                note: "profile must share the domain's symmetry".into(),
            });
        }
        None => {
            for name in ["positivity", "symmetry"] {
                rows.push(Row {
                    name,
                    outcome: Outcome::Skip("needs a positive constant source".into()),
                    measured: None,
                    gate: "",
                    note: String::new(),
                });
            }
        }
    }

    let opts = solve_options(cfg);
    let tol = opts.tolerance;
    let (worst_violation, worst_allowance, crossings) = timed(man, "row comparison", || {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut worst_v = 0.0f64;
        let mut worst_a = f64::INFINITY;
        let mut crossings = 0usize;
        for _ in 0..cfg.pairs {
            let f1: Vec<f64> =
                (0..base.grid.len()).map(|_| 2.0 * rng.random::<f64>()).collect();
            let f2: Vec<f64> = f1.iter().map(|v| v + rng.random::<f64>()).collect();
            let sup2 = f2.iter().fold(0.0f64, |m, &v| m.max(v));
            let allowance = 10.0 * tol * sup2.powf(1.0 / pr.pm1()) * diam.powf(s);
            let violation = comparison_check(
                &base.w,
                &GridFunction { values: f1 },
                &GridFunction { values: f2 },
                &opts,
            )?;
            if violation > allowance {
                crossings += 1;
            }
            worst_v = worst_v.max(violation);
            worst_a = worst_a.min(allowance);
        }
        Ok((worst_v, worst_a, crossings))
    })?;
    rows.push(Row {
        name: "comparison",
        outcome: if crossings == 0 {
            Outcome::Pass
        } else {
            Outcome::Fail(format!("{crossings} ordered pairs crossed"))
        },
        measured: Some(worst_violation),
        gate: "no crossing beyond 10x solver tolerance",
        note: format!("{} random ordered pairs; smallest allowance {worst_allowance:.3e}", cfg.pairs),
    });

    // The source-scaling law is resolution-independent, so the scan runs at
    // a coarse resolution where the tight residual targets stay cheap.
    let m = cfg.n.expect("n validated").min(if cfg.domain.dim() == 1 { 64 } else { 32 });
    let (slope_err, spread) = timed(man, "row apriori", || {
        let g = build_grid(&cfg.domain, m)?;
        let wa = assemble_weights(&g, pr)?;
        let sopts = SolveOptions {
            tolerance: cfg.scaling_tolerance(),
            max_iterations: cfg.max_iterations,
            ..Default::default()
        };
        let rep = apriori_check(&wa, &cfg.k_list, &sopts)?;
        let slope_err = (rep.slope - 1.0 / pr.pm1()).abs();
        let cmax = rep.constants.iter().fold(f64::MIN, |m, &c| m.max(c));
        let cmin = rep.constants.iter().fold(f64::MAX, |m, &c| m.min(c));
        Ok((slope_err, (cmax - cmin) / cmax))
    })?;
    rows.push(Row {
        name: "apriori",
        outcome: if slope_err <= 1e-6 && spread <= 1e-6 {
            Outcome::Pass
        } else {
            Outcome::Fail(format!("slope error {slope_err:.3e}, spread {spread:.3e}"))
        },
        measured: Some(slope_err.max(spread)),
        gate: "slope and constancy within 1e-6",
        note: format!("resolution {m}"),
    });

    let sup_ratio = timed(man, "row boundary", || {
        Ok(boundary_ratio(&base.u, &base.grid, pr, cfg.collar())?.sup_ratio)
    })?;
    rows.push(Row {
        name: "boundary",
        outcome: if sup_ratio.is_finite() {
            Outcome::Pass
        } else {
            Outcome::Fail("collar ratio diverged".into())
        },
        measured: Some(sup_ratio),
        gate: "sup |u|/delta^s finite",
        note: String::new(),
    });

    if constant_k.is_some() {
        let sigma = timed(man, "row harnack", || {
            Ok(harnack_check(
                &base.u,
                &base.grid,
                pr,
                cfg.domain.center(),
                diam / 8.0,
                base.f.sup_norm(),
                1.0,
                1.0,
                1.0,
            )?
            .sigma)
        })?;
        rows.push(Row {
            name: "harnack",
            outcome: if sigma > 0.0 {
                Outcome::Pass
            } else {
                Outcome::Fail(format!("sigma = {sigma:.3e}"))
            },
            measured: Some(sigma),
            gate: "sigma > 0",
            note: String::new(),
        });
    } else {
        rows.push(Row {
            name: "harnack",
            outcome: Outcome::Skip("needs a positive constant source".into()),
            measured: None,
            gate: "sigma > 0",
            note: String::new(),
        });
    }

    let alpha = timed(man, "row oscillation", || {
        collar_alpha_min(cfg, &base.grid, &base.u).map(|(a, _, _)| a)
    })?;
    rows.push(Row {
        name: "oscillation",
        outcome: if alpha > 0.0 && alpha <= s + 0.05 + 1e-12 {
            Outcome::Pass
        } else {
            Outcome::Fail(format!("fitted exponent {alpha:.4}"))
        },
        measured: Some(alpha),
        gate: "exponent in (0, s + 0.05]",
        note: "smallest collar fit".into(),
    });

    // Below the singular threshold the truncation series must settle on the
    // half-space power at a smooth point; above it the critical point of a
    // smooth bump must be flagged as non-convergent.
    let (series_ok, series_note) = timed(man, "row series", || {
        if pr.pointwise_valid() {
            let hf = AnalyticField::halfspace_power(s)?;
            let es = eps_limit_series(&hf, [0.5, 0.0], pr, &cfg.schedule, cfg.far_cutoff)?;
            Ok((es.converged, "half-space series at a smooth point must converge"))
        } else {
            let bump = AnalyticField::bump(0.0, 1.0)?;
            let es = eps_limit_series(&bump, [0.0, 0.0], pr, &cfg.schedule, cfg.far_cutoff)?;
            Ok((!es.converged, "critical-point series past the threshold must diverge"))
        }
    })?;
    rows.push(Row {
        name: "series",
        outcome: if series_ok {
            Outcome::Pass
        } else {
            Outcome::Fail("the convergence flag contradicts the regime".into())
        },
        measured: None,
        gate: "convergence flag matches the regime",
        note: series_note.into(),
    });

    let (deltas, rho) = delta_probes(cfg);
    let (d_sup, d_drift) = timed(man, "row delta_s", || {
        let rep =
            delta_s_rhs_check(&cfg.domain, pr, &deltas, rho, &cfg.schedule, cfg.far_cutoff)?;
        Ok((rep.sup, rep.drift))
    })?;
    rows.push(Row {
        name: "delta_s",
        outcome: if d_sup.is_finite() && d_drift < 0.2 {
            Outcome::Pass
        } else {
            Outcome::Fail(format!("sup {d_sup:.3e}, drift {d_drift:.3e}"))
        },
        measured: Some(d_sup),
        gate: "finite sup, drift < 20%",
        note: format!("refinement drift {d_drift:.4}"),
    });

    let mut csv = String::from("criterion,status,measured,gate,note\n");
    for row in &rows {
        if !quiet {
            println!("suite {} {} ({})", row.name, row.outcome.word(), row.gate);
        }
        let measured = row.measured.map(fmt_f64).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.name,
            row.outcome.word(),
            measured,
            row.gate.replace(',', ";"),
            row.note.replace(',', ";")
        ));
        man.assertions.push((row.name.to_string(), row.outcome.clone()));
    }
    emit(man, out_dir, "suite_summary.csv", &csv)
}

/// Worst relative deviation of the profile from the domain's symmetry:
/// mirror pairs on an interval, radial orbits on the disc.
fn symmetry_spread(cfg: &ExperimentConfig, grid: &Grid, u: &GridFunction) -> f64 {
    match cfg.domain {
        DomainSpec::Interval { .. } => {
            let sup = u.sup_norm().max(1e-300);
            let n = grid.len();
            let mut worst = 0.0f64;
            for i in 0..n {
                worst = worst.max((u.values[i] - u.values[n - 1 - i]).abs() / sup);
            }
            worst
        }
        DomainSpec::Disc { .. } => {
            let h = grid.h();
            let mut orbits: std::collections::BTreeMap<i64, Vec<f64>> =
                std::collections::BTreeMap::new();
            for (i, &x) in grid.nodes().iter().enumerate() {
                // nodes sit on a half-integer lattice, so 4 r^2 / h^2 is an
                // exact integer and groups one radial orbit
                let key = (4.0 * (x[0] * x[0] + x[1] * x[1]) / (h * h)).round() as i64;
                orbits.entry(key).or_default().push(u.values[i]);
            }
            let mut worst = 0.0f64;
            for vals in orbits.values() {
                if vals.len() < 2 {
                    continue;
                }
                let mx = vals.iter().fold(f64::MIN, |m, &v| m.max(v));
                let mn = vals.iter().fold(f64::MAX, |m, &v| m.min(v));
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                worst = worst.max((mx - mn) / mean.abs().max(1e-300));
            }
            worst
        }
    }
}
