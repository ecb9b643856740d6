//! The discrete nonlocal energy, its residual, and the direct minimizer.
//!
//! The energy of nodal values `u` is
//! `J(u) = (1/p) [sum_{i != j} W_ij |u_i - u_j|^p + sum_i 2 A_i |u_i|^p]
//!  - sum_i f_i u_i vol_i`,
//! with `W` the pair weights and `A` the volume-scaled absorption. It is
//! strictly convex and coercive, so the minimizer exists, is unique, and
//! solves the discrete Dirichlet problem.
//!
//! The default minimizer runs two phases: a preconditioned two-point
//! gradient method for fast initial decrease, then deterministic cycles of a
//! closed-form amplitude rescale and one nonlinear Gauss-Seidel sweep. The
//! second phase makes progress below the resolution at which energy
//! comparisons can still distinguish iterates, which is what deep residual
//! tolerances require.

use crate::domain::{build_grid, DomainSpec, Grid, GridFunction};
use crate::kernel::{assemble_weights, signed_power, KernelWeights, OperatorParams};
use crate::{Error, Result};

/// Step selection inside the minimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepStrategy {
    /// Backtracked gradient steps starting from the given trial step.
    /// The reference strategy: simple, slow, no second phase.
    Fixed(f64),
    /// Two-point (Barzilai-Borwein) steps on the preconditioned residual,
    /// followed by the rescale-and-sweep phase. The default.
    AdaptiveTwoPoint,
}

/// Knobs of one solve.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Residual target relative to the natural scale
    /// `(sup |f|)^(1/(p-1)) diam^s`.
    pub tolerance: f64,
    /// Combined cap on accepted steps and sweep cycles.
    pub max_iterations: usize,
    /// Step selection.
    pub step: StepStrategy,
    /// Starting iterate; zero when absent.
    pub initial: Option<GridFunction>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerance: 1e-10,
            max_iterations: 50_000,
            step: StepStrategy::AdaptiveTwoPoint,
            initial: None,
        }
    }
}

/// What one solve did.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Accepted steps and sweep cycles.
    pub iterations: usize,
    /// Final energy.
    pub energy: f64,
    /// Final sup norm of the residual.
    pub residual_sup: f64,
    /// Energy after each accepted iteration, starting at the initial guess.
    pub trajectory: Vec<f64>,
    /// Whether the residual target was met.
    pub converged: bool,
}

/// `|m|^p` with a fast exact branch at `p = 2`.
#[inline]
fn abs_pow(m: f64, p: f64) -> f64 {
    if p == 2.0 {
        m * m
    } else {
        m.powf(p)
    }
}

fn check_lengths(w: &KernelWeights, u: &GridFunction, f: &GridFunction) -> Result<()> {
    if u.len() != w.n_nodes() || f.len() != w.n_nodes() {
        return Err(Error::Mismatch(format!(
            "weights carry {} nodes, got {} state and {} source values",
            w.n_nodes(),
            u.len(),
            f.len()
        )));
    }
    Ok(())
}

/// The discrete energy `J(u)`.
pub fn discrete_energy(u: &GridFunction, w: &KernelWeights, f: &GridFunction) -> Result<f64> {
    check_lengths(w, u, f)?;
    Ok(energy_of(w, &u.values, &f.values))
}

/// The scaled residual `r_i = (grad J)_i / vol_i`, the nodal defect
/// `2 sum_j W_ij sp(u_i - u_j) + 2 A_i sp(u_i)` over the cell volume minus
/// `f_i`. At the minimizer it vanishes.
pub fn residual(u: &GridFunction, w: &KernelWeights, f: &GridFunction) -> Result<GridFunction> {
    check_lengths(w, u, f)?;
    let mut r = vec![0.0; w.n_nodes()];
    residual_into(w, &u.values, &f.values, &mut r);
    Ok(GridFunction { values: r })
}

fn energy_of(w: &KernelWeights, u: &[f64], f: &[f64]) -> f64 {
    let n = w.n_nodes();
    let p = w.params().p();
    let mut form = 0.0;
    for i in 0..n {
        let row = w.row(i);
        let ui = u[i];
        let mut acc = 0.0;
        for j in (i + 1)..n {
            let d = ui - u[j];
            if d != 0.0 {
                acc += row[j] * abs_pow(d.abs(), p);
            }
        }
        form += 2.0 * acc + 2.0 * w.absorption(i) * abs_pow(ui.abs(), p);
    }
    let mut source = 0.0;
    for i in 0..n {
        source += f[i] * u[i] * w.vol(i);
    }
    form / p - source
}

/// The `p`-form `sum_{i != j} W |du|^p + sum 2 A |u|^p`, the energy without
/// the `1/p` factor and the source part.
fn p_form(w: &KernelWeights, u: &[f64]) -> f64 {
    let n = w.n_nodes();
    let p = w.params().p();
    let mut form = 0.0;
    for i in 0..n {
        let row = w.row(i);
        let ui = u[i];
        let mut acc = 0.0;
        for j in (i + 1)..n {
            let d = ui - u[j];
            if d != 0.0 {
                acc += row[j] * abs_pow(d.abs(), p);
            }
        }
        form += 2.0 * acc + 2.0 * w.absorption(i) * abs_pow(ui.abs(), p);
    }
    form
}

fn source_of(w: &KernelWeights, u: &[f64], f: &[f64]) -> f64 {
    (0..w.n_nodes()).map(|i| f[i] * u[i] * w.vol(i)).sum()
}

fn residual_into(w: &KernelWeights, u: &[f64], f: &[f64], r: &mut [f64]) {
    let n = w.n_nodes();
    let pm1 = w.params().pm1();
    for i in 0..n {
        let row = w.row(i);
        let ui = u[i];
        let mut acc = 0.0;
        for (j, &wij) in row.iter().enumerate() {
            if wij != 0.0 {
                acc += wij * signed_power(ui - u[j], pm1);
            }
        }
        r[i] = (2.0 * acc + 2.0 * w.absorption(i) * signed_power(ui, pm1)) / w.vol(i) - f[i];
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Derivative of `t -> J(u - t d)`, evaluated through the residual:
/// `-sum_i r_i(u - t d) d_i vol_i`.
fn dir_deriv(
    w: &KernelWeights,
    f: &[f64],
    u: &[f64],
    d: &[f64],
    t: f64,
    u_try: &mut [f64],
    r_try: &mut [f64],
) -> f64 {
    for i in 0..u.len() {
        u_try[i] = u[i] - t * d[i];
    }
    residual_into(w, u_try, f, r_try);
    -(0..u.len()).map(|i| r_try[i] * d[i] * w.vol(i)).sum::<f64>()
}

/// Exact line minimization along `-d` by bracketing the directional
/// derivative's sign change and bisecting it to float resolution.
fn line_minimum(
    w: &KernelWeights,
    f: &[f64],
    u: &[f64],
    d: &[f64],
    t_init: f64,
    u_try: &mut [f64],
    r_try: &mut [f64],
) -> f64 {
    let mut t_hi = t_init.max(1e-12);
    let mut grew = 0;
    while dir_deriv(w, f, u, d, t_hi, u_try, r_try) < 0.0 && grew < 80 {
        t_hi *= 2.0;
        grew += 1;
    }
    let mut lo = 0.0;
    let mut hi = t_hi;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if dir_deriv(w, f, u, d, mid, u_try, r_try) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One nodal equation: the unique root in `t` of
/// `2 sum_j W_ij sp(t - u_j) + 2 A_i sp(t) = f_i vol_i`,
/// found by safeguarded Newton inside a sign-change bracket. The map is
/// strictly increasing, so the bracket always exists.
fn node_solve(w: &KernelWeights, f: &[f64], u: &mut [f64], i: usize, amp: f64) {
    let pm1 = w.params().pm1();
    let row = w.row(i);
    let target = f[i] * w.vol(i);
    let n = u.len();

    let eval = |t: f64, u: &[f64]| -> (f64, f64) {
        let mut g = 0.0;
        let mut dg = 0.0;
        for j in 0..n {
            let wij = row[j];
            if wij == 0.0 {
                continue;
            }
            let d = t - u[j];
            if d == 0.0 {
                continue;
            }
            let m = d.abs();
            let mp = if pm1 == 1.0 { m } else { m.powf(pm1) };
            g += wij * if d > 0.0 { mp } else { -mp };
            dg += wij * mp / m;
        }
        let a = w.absorption(i);
        if t != 0.0 {
            let m = t.abs();
            let mp = if pm1 == 1.0 { m } else { m.powf(pm1) };
            g += a * if t > 0.0 { mp } else { -mp };
            dg += a * mp / m;
        }
        (2.0 * g - target, 2.0 * pm1 * dg)
    };

    let t0 = u[i];
    let (g0, _) = eval(t0, u);
    if g0 == 0.0 {
        return;
    }

    // walk away from t0 against the sign of g until the root is bracketed;
    // the root usually sits within a residual-sized distance, so probe small
    let mut step = 1e-3 * amp.max(t0.abs()).max(1e-300);
    let dirn = if g0 > 0.0 { -1.0 } else { 1.0 };
    let mut lo;
    let mut hi;
    let mut probe = t0;
    let mut bounded = false;
    for _ in 0..100 {
        probe = t0 + dirn * step;
        let (g, _) = eval(probe, u);
        if g0 > 0.0 && g < 0.0 || g0 < 0.0 && g > 0.0 {
            bounded = true;
            break;
        }
        step *= 2.0;
    }
    if !bounded {
        return;
    }
    if g0 > 0.0 {
        lo = probe;
        hi = t0;
    } else {
        lo = t0;
        hi = probe;
    }

    // g(lo) < 0 < g(hi); Newton accelerates, bisection guarantees progress
    let mut t = 0.5 * (lo + hi);
    for _ in 0..80 {
        let (g, dg) = eval(t, u);
        if g == 0.0 {
            break;
        }
        if g < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let width = hi - lo;
        if width <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1e-300) {
            break;
        }
        let newton = t - g / dg;
        t = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    u[i] = t;
}

struct Phase<'a> {
    w: &'a KernelWeights,
    f: &'a [f64],
    thr: f64,
    max_iterations: usize,
}

/// Outcome of one phase: iterate state plus bookkeeping shared across phases.
struct State {
    u: Vec<f64>,
    r: Vec<f64>,
    rinf: f64,
    energy: f64,
    iterations: usize,
    trajectory: Vec<f64>,
    converged: bool,
}

fn two_point_phase(ph: &Phase, st: &mut State, budget: usize) {
    let w = ph.w;
    let f = ph.f;
    let n = st.u.len();
    let precond: Vec<f64> = (0..n)
        .map(|i| {
            let row_sum: f64 = w.row(i).iter().sum();
            (2.0 * row_sum + 2.0 * w.absorption(i)) / w.vol(i)
        })
        .collect();

    let mut d: Vec<f64> = (0..n).map(|i| st.r[i] / precond[i]).collect();
    let mut u_try = vec![0.0; n];
    let mut r_try = vec![0.0; n];
    let mut alpha = line_minimum(w, f, &st.u, &d, 1.0, &mut u_try, &mut r_try);
    let mut rinf_window: Vec<f64> = vec![st.rinf];
    let mut taken = 0;

    while taken < budget && st.iterations < ph.max_iterations {
        let mut a = alpha;
        let mut halvings = 0;
        let mut energy_new;
        loop {
            for i in 0..n {
                u_try[i] = st.u[i] - a * d[i];
            }
            energy_new = energy_of(w, &u_try, f);
            if energy_new < st.energy {
                break;
            }
            halvings += 1;
            if halvings > 8 {
                // the two-point step failed outright, fall back to the line
                a = line_minimum(w, f, &st.u, &d, alpha, &mut u_try, &mut r_try);
                for i in 0..n {
                    u_try[i] = st.u[i] - a * d[i];
                }
                energy_new = energy_of(w, &u_try, f);
                break;
            }
            a *= 0.5;
        }
        if !(energy_new < st.energy) {
            return; // no descent left at float resolution, hand over
        }

        residual_into(w, &u_try, f, &mut r_try);
        // two-point step from the accepted displacement and residual change
        let mut num = 0.0;
        let mut den1 = 0.0;
        let mut den2 = 0.0;
        for i in 0..n {
            let du = u_try[i] - st.u[i];
            let dd = r_try[i] / precond[i] - d[i];
            num += du * du;
            den1 += du * dd;
            den2 += dd * dd;
        }
        alpha = if taken % 2 == 0 {
            if den1 > 0.0 && num.is_finite() { num / den1 } else { 2.0 * a }
        } else if den2 > 0.0 && den1.is_finite() {
            den1.max(0.0) / den2
        } else {
            2.0 * a
        };
        if !alpha.is_finite() || alpha <= 0.0 {
            alpha = 2.0 * a;
        }

        std::mem::swap(&mut st.u, &mut u_try);
        std::mem::swap(&mut st.r, &mut r_try);
        for i in 0..n {
            d[i] = st.r[i] / precond[i];
        }
        st.rinf = sup(&st.r);
        st.energy = energy_new;
        st.iterations += 1;
        taken += 1;
        st.trajectory.push(st.energy);
        rinf_window.push(st.rinf);

        if st.rinf <= ph.thr {
            st.converged = true;
            return;
        }
        // a residual that refuses to drop 10% over 50 steps will not recover
        let k = rinf_window.len();
        if k > 50 && st.rinf > 0.90 * rinf_window[k - 51] {
            return;
        }
    }
}

fn sweep_phase(ph: &Phase, st: &mut State, scale: f64) {
    let w = ph.w;
    let f = ph.f;
    let n = st.u.len();
    let pm1 = w.params().pm1();
    let mut prev = vec![f64::NAN; n];
    let mut prev2 = vec![f64::NAN; n];

    while st.iterations < ph.max_iterations {
        prev2.copy_from_slice(&prev);
        prev.copy_from_slice(&st.u);

        // optimal uniform rescale: along the ray t u the energy is
        // t^p S/p - t F, minimized at (F/S)^(1/(p-1))
        let s_form = p_form(w, &st.u);
        let f_part = source_of(w, &st.u, f);
        if s_form > 0.0 && f_part > 0.0 {
            let lambda = (f_part / s_form).powf(1.0 / pm1);
            if (lambda - 1.0).abs() > 1e-15 {
                for v in st.u.iter_mut() {
                    *v *= lambda;
                }
            }
        }

        let amp = sup(&st.u).max(scale).max(1e-300);
        for i in 0..n {
            node_solve(w, f, &mut st.u, i, amp);
        }

        residual_into(w, &st.u, f, &mut st.r);
        st.rinf = sup(&st.r);
        st.energy = energy_of(w, &st.u, f);
        st.iterations += 1;
        st.trajectory.push(st.energy);

        if st.rinf <= ph.thr {
            st.converged = true;
            return;
        }
        if st.u == prev || st.u == prev2 {
            return; // fixed point or two-cycle at float resolution
        }
    }
}

fn fixed_step_phase(ph: &Phase, st: &mut State, t0: f64) {
    let w = ph.w;
    let f = ph.f;
    let n = st.u.len();
    let mut u_try = vec![0.0; n];
    while st.iterations < ph.max_iterations {
        let mut t = t0;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                u_try[i] = st.u[i] - t * st.r[i];
            }
            let energy_new = energy_of(w, &u_try, f);
            if energy_new < st.energy {
                std::mem::swap(&mut st.u, &mut u_try);
                st.energy = energy_new;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return;
        }
        residual_into(w, &st.u, f, &mut st.r);
        st.rinf = sup(&st.r);
        st.iterations += 1;
        st.trajectory.push(st.energy);
        if st.rinf <= ph.thr {
            st.converged = true;
            return;
        }
    }
}

/// Minimizes the discrete energy for the source `f`.
///
/// Returns the minimizer and a report. `converged` is false when the residual
/// target was not met within the iteration budget or at float resolution;
/// the returned iterate is still the best one found, and every accepted step
/// decreased the energy.
pub fn solve(
    w: &KernelWeights,
    f: &GridFunction,
    opts: &SolveOptions,
) -> Result<(GridFunction, SolveReport)> {
    if f.len() != w.n_nodes() {
        return Err(Error::Mismatch(format!(
            "weights carry {} nodes, source has {} values",
            w.n_nodes(),
            f.len()
        )));
    }
    if !opts.tolerance.is_finite() || opts.tolerance < 0.0 {
        return Err(Error::Config(format!(
            "tolerance must be finite and nonnegative, got {}",
            opts.tolerance
        )));
    }
    let params = w.params();
    // natural solution scale of the problem, from the a-priori bound shape
    let scale = f.sup_norm().powf(1.0 / params.pm1()) * w.diam().powf(params.s());
    let thr = opts.tolerance * scale;

    let u0 = match &opts.initial {
        Some(g) => {
            if g.len() != w.n_nodes() {
                return Err(Error::Mismatch(format!(
                    "initial guess has {} values on {} nodes",
                    g.len(),
                    w.n_nodes()
                )));
            }
            g.values.clone()
        }
        None => vec![0.0; w.n_nodes()],
    };

    let mut st = State {
        r: vec![0.0; w.n_nodes()],
        rinf: 0.0,
        energy: 0.0,
        iterations: 0,
        trajectory: Vec::new(),
        converged: false,
        u: u0,
    };
    residual_into(w, &st.u, &f.values, &mut st.r);
    st.rinf = sup(&st.r);
    st.energy = energy_of(w, &st.u, &f.values);
    st.trajectory.push(st.energy);

    if st.rinf <= thr {
        st.converged = true;
    } else {
        let ph = Phase { w, f: &f.values, thr, max_iterations: opts.max_iterations };
        match opts.step {
            StepStrategy::Fixed(t0) => {
                if !t0.is_finite() || t0 <= 0.0 {
                    return Err(Error::Config(format!(
                        "fixed step must be positive, got {t0}"
                    )));
                }
                fixed_step_phase(&ph, &mut st, t0);
            }
            StepStrategy::AdaptiveTwoPoint => {
                let budget = opts.max_iterations.min(1500);
                two_point_phase(&ph, &mut st, budget);
                if !st.converged && st.iterations < opts.max_iterations {
                    sweep_phase(&ph, &mut st, scale);
                }
            }
        }
    }

    let report = SolveReport {
        iterations: st.iterations,
        energy: st.energy,
        residual_sup: st.rinf,
        trajectory: st.trajectory,
        converged: st.converged,
    };
    Ok((GridFunction { values: st.u }, report))
}

/// Solves the unit-source problem on a fresh grid: the discrete torsion
/// profile of the domain.
///
/// Uses default options; pass explicit options through `solve` for `p < 2`,
/// where the default residual target is below what energy descent can
/// certify.
pub fn torsion(
    domain: &DomainSpec,
    params: &OperatorParams,
    n: usize,
) -> Result<(Grid, GridFunction, SolveReport)> {
    let grid = build_grid(domain, n)?;
    let w = assemble_weights(&grid, params)?;
    let f = GridFunction::constant(1.0, grid.len());
    let (u, report) = solve(&w, &f, &SolveOptions::default())?;
    Ok((grid, u, report))
}
