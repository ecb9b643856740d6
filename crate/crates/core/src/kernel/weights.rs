//! Interaction weights between grid cells and absorption from the domain
//! complement.
//!
//! Interval cells get closed forms throughout, including the regularized
//! adjacent-cell weight when the kernel is too singular for the raw double
//! integral. Square cells get tensor Gauss rules. All formulas integrate the
//! kernel `|x - y|^(-N - ps)` over a cell pair, without any field factor.

use crate::domain::{Cell, DomainSpec, Grid, Point};
use crate::kernel::quad::{GAUSS2, GAUSS4};
use crate::kernel::{KernelWeights, OperatorParams};
use crate::{Error, Result};

/// Relative slack used when classifying cell contact.
const GEOM_TOL: f64 = 1e-12;

/// Kernel integral over a pair of disjoint intervals `[a0, a1]`, `[b0, b1]`
/// with `a1 <= b0`, via the second antiderivative of `t^(-1-q)`.
///
/// The four antiderivative terms enter with signs `+ - - +`, so the constant
/// parts cancel and each term can run through `expm1`. That kills the
/// catastrophic cancellation the raw power form suffers for `q` near 1.
fn interval_pair_disjoint(q: f64, d_oo: f64, d_oi: f64, d_io: f64, d_ii: f64) -> f64 {
    if (q - 1.0).abs() < 1e-9 {
        // -log is the antiderivative pair at q = 1
        return -(d_oo.ln() - d_oi.ln() - d_io.ln() + d_ii.ln());
    }
    let c = 1.0 - q;
    let term = |t: f64| (c * t.ln()).exp_m1();
    (term(d_oo) - term(d_oi) - term(d_io) + term(d_ii)) / (q * (q - 1.0))
}

/// Kernel integral over two adjacent intervals of common length `h` when
/// `q < 1`, where the corner singularity is integrable.
fn interval_adjacent_subcritical(q: f64, h: f64) -> f64 {
    h.powf(1.0 - q) * (2.0 - (1.0 - q).exp2()) / (q * (1.0 - q))
}

/// Regularized adjacent-cell weight for `q >= 1`: the corner region
/// `|x - y| <= h/2` is cut out of the double integral, and what remains has
/// the closed form `h^(1-q)` times a bracket that tends to 1 as `q -> 1`.
fn interval_adjacent_regularized(q: f64, h: f64) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    let near_one = |x: f64| x.abs() < 1e-12;
    let a = {
        let e = (q - 1.0) * ln2;
        if near_one(e) {
            ln2
        } else {
            e.exp_m1() / (q - 1.0)
        }
    };
    let b = (2.0 / q) * (1.0 - (-q).exp2());
    let c = {
        let e = (1.0 - q) * ln2;
        if near_one(e) {
            ln2
        } else {
            e.exp_m1() / (1.0 - q)
        }
    };
    // a - c first: the two shoulder terms agree at q = 1 and cancel exactly
    ((1.0 - q) * h.ln()).exp() * (a - c + b)
}

fn line_pair(q: f64, lo_a: f64, hi_a: f64, lo_b: f64, hi_b: f64) -> Result<f64> {
    let (la, ha, lb, hb) = if lo_a <= lo_b { (lo_a, hi_a, lo_b, hi_b) } else { (lo_b, hi_b, lo_a, hi_a) };
    let len_a = ha - la;
    let len_b = hb - lb;
    if !(len_a > 0.0) || !(len_b > 0.0) {
        return Err(Error::Geometry(format!(
            "interval cells must have positive length, got [{la}, {ha}] and [{lb}, {hb}]"
        )));
    }
    let tol = GEOM_TOL * len_a.min(len_b);
    let gap = lb - ha;
    if gap < -tol {
        return Err(Error::Geometry(format!(
            "cells [{la}, {ha}] and [{lb}, {hb}] overlap, pair weights need disjoint interiors"
        )));
    }
    if gap.abs() <= tol {
        // adjacent cells share one endpoint
        if (len_a - len_b).abs() > GEOM_TOL * len_a.max(len_b) {
            return Err(Error::Geometry(format!(
                "adjacent cells must share a common length, got {len_a} and {len_b}"
            )));
        }
        let h = len_a;
        if q < 1.0 {
            return Ok(interval_adjacent_subcritical(q, h));
        }
        return Ok(interval_adjacent_regularized(q, h));
    }
    Ok(interval_pair_disjoint(q, hb - la, hb - ha, lb - la, gap))
}

/// Kernel integral over a pair of equal squares by tensor Gauss quadrature.
///
/// Well separated pairs, chessboard gap at least twice the side, use the
/// 2-point rule per axis; everything closer uses the 4-point rule. Touching
/// squares with `q >= 1` drop the region `|x - y| <= side/2`, matching the
/// regularized interval weight.
fn square_pair(q: f64, ca: Point, cb: Point, side: f64) -> Result<f64> {
    let dx = (ca[0] - cb[0]).abs();
    let dy = (ca[1] - cb[1]).abs();
    let tol = GEOM_TOL * side;
    if dx < side - tol && dy < side - tol {
        return Err(Error::Geometry(format!(
            "square cells at ({}, {}) and ({}, {}) overlap",
            ca[0], ca[1], cb[0], cb[1]
        )));
    }
    let gap = dx.max(dy) - side;
    let touching = gap.abs() <= tol;
    let cut = if touching && q >= 1.0 { 0.5 * side } else { 0.0 };
    let rule = if gap >= 2.0 * side { GAUSS2 } else { GAUSS4 };
    let half = 0.5 * side;
    let mut acc = 0.0;
    for &(tax, wax) in rule {
        let xa = ca[0] + half * tax;
        for &(tay, way) in rule {
            let ya = ca[1] + half * tay;
            for &(tbx, wbx) in rule {
                let xb = cb[0] + half * tbx;
                for &(tby, wby) in rule {
                    let yb = cb[1] + half * tby;
                    let r = (xa - xb).hypot(ya - yb);
                    if r > cut {
                        acc += wax * way * wbx * wby * r.powf(-2.0 - q);
                    }
                }
            }
        }
    }
    // each Gauss weight set sums to 2, the Jacobian per axis is side/2
    Ok(acc * (half * half * half * half))
}

/// Kernel integral over a pair of grid cells.
///
/// Cells must be disjoint or adjacent and of matching kind. Adjacent cells
/// need equal sizes; for `ps >= 1` their weight is the regularized one with
/// the near-diagonal region removed.
pub fn cell_pair_weight(a: &Cell, b: &Cell, params: &OperatorParams) -> Result<f64> {
    let q = params.ps();
    match (a, b) {
        (Cell::Line { lo: la, hi: ha }, Cell::Line { lo: lb, hi: hb }) => {
            line_pair(q, *la, *ha, *lb, *hb)
        }
        (Cell::Square { center: ca, side: sa }, Cell::Square { center: cb, side: sb }) => {
            if (sa - sb).abs() > GEOM_TOL * sa.max(*sb) {
                return Err(Error::Geometry(format!(
                    "square cells must share a side length, got {sa} and {sb}"
                )));
            }
            square_pair(q, *ca, *cb, *sa)
        }
        _ => Err(Error::Geometry(
            "cannot pair an interval cell with a square cell".to_string(),
        )),
    }
}

/// Number of angular panels in disc complement integrals.
const DISC_ANGLES: usize = 64;

/// Kernel integral from a node over the domain complement.
///
/// Intervals have the exact form `(d_left^-q + d_right^-q)/q`. For the disc
/// the radial integral is exact and the angular one uses a midpoint rule,
/// which converges spectrally for the smooth periodic integrand.
pub fn exterior_weight(x: Point, domain: &DomainSpec, params: &OperatorParams) -> Result<f64> {
    domain.validate()?;
    let q = params.ps();
    let delta = domain.boundary_distance(x);
    if !(delta > 0.0) {
        return Err(Error::Geometry(format!(
            "complement integral needs a node strictly inside the domain, \
             got boundary distance {delta}"
        )));
    }
    match *domain {
        DomainSpec::Interval { a, b } => {
            let dl = x[0] - a;
            let dr = b - x[0];
            Ok((dl.powf(-q) + dr.powf(-q)) / q)
        }
        DomainSpec::Disc { r0 } => {
            let rho = x[0].hypot(x[1]);
            let mut acc = 0.0;
            for m in 0..DISC_ANGLES {
                let theta = (m as f64 + 0.5) * std::f64::consts::TAU / DISC_ANGLES as f64;
                // distance from x to the boundary circle along direction theta
                let st = theta.sin();
                let rb = -rho * theta.cos() + (r0 * r0 - rho * rho * st * st).sqrt();
                acc += rb.powf(-q);
            }
            Ok(acc * std::f64::consts::TAU / (DISC_ANGLES as f64 * q))
        }
    }
}

/// Assembles the full weight set of a grid: the symmetric pair matrix and the
/// volume-scaled absorption vector.
///
/// Interval grids reduce to one closed-form weight per node offset. Square
/// cells take full-cell quadrature scaled by both clip fractions, so boundary
/// cells of a disc grid interact in proportion to the area actually inside.
pub fn assemble_weights(grid: &Grid, params: &OperatorParams) -> Result<KernelWeights> {
    let n = grid.len();
    let q = params.ps();
    let h = grid.h();
    let mut w = vec![0.0; n * n];
    let mut absorption = vec![0.0; n];

    match *grid.domain() {
        DomainSpec::Interval { .. } => {
            // weight depends only on the node offset d: adjacent at d = 1,
            // disjoint with gap (d-1)h beyond
            let mut by_offset = vec![0.0; n];
            for d in 1..n {
                by_offset[d] = if d == 1 {
                    if q < 1.0 {
                        interval_adjacent_subcritical(q, h)
                    } else {
                        interval_adjacent_regularized(q, h)
                    }
                } else {
                    let df = d as f64;
                    interval_pair_disjoint(q, (df + 1.0) * h, df * h, df * h, (df - 1.0) * h)
                };
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    let wij = by_offset[j - i];
                    w[i * n + j] = wij;
                    w[j * n + i] = wij;
                }
            }
        }
        DomainSpec::Disc { .. } => {
            let clip: Vec<f64> = grid.vols().iter().map(|&v| v / (h * h)).collect();
            for i in 0..n {
                let ci = grid.node(i);
                for j in (i + 1)..n {
                    let wij = square_pair(q, ci, grid.node(j), h)? * clip[i] * clip[j];
                    w[i * n + j] = wij;
                    w[j * n + i] = wij;
                }
            }
        }
    }

    for i in 0..n {
        let ext = exterior_weight(grid.node(i), grid.domain(), params)?;
        absorption[i] = grid.vols()[i] * ext;
    }

    Ok(KernelWeights::from_parts(
        n,
        w,
        absorption,
        grid.vols().to_vec(),
        grid.domain().diameter(),
        *params,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_grid;

    fn params(p: f64, s: f64) -> OperatorParams {
        OperatorParams::new(p, s).unwrap()
    }

    #[test]
    fn disjoint_interval_weight_has_log_closed_form_at_q_one() {
        // cells [0, h] and [2h, 3h] with ps = 1 integrate to log(4/3)
        let h = 0.25;
        let a = Cell::Line { lo: 0.0, hi: h };
        let b = Cell::Line { lo: 2.0 * h, hi: 3.0 * h };
        let w = cell_pair_weight(&a, &b, &params(2.0, 0.5)).unwrap();
        assert!((w - (4.0f64 / 3.0).ln()).abs() < 1e-14, "got {w}");
    }

    #[test]
    fn near_critical_exponents_stay_smooth() {
        // the expm1 route must not blow up approaching q = 1 from either side
        let a = Cell::Line { lo: 0.0, hi: 0.25 };
        let b = Cell::Line { lo: 0.5, hi: 0.75 };
        let at = |q: f64| {
            let pr = params(2.0, q / 2.0);
            cell_pair_weight(&a, &b, &pr).unwrap()
        };
        let w1 = at(1.0);
        for dq in [1e-7, 1e-10] {
            assert!((at(1.0 - dq) - w1).abs() < 1e-5 * w1);
            assert!((at(1.0 + dq) - w1).abs() < 1e-5 * w1);
        }
    }

    #[test]
    fn adjacent_weight_is_continuous_across_the_critical_exponent() {
        let cell = |lo: f64| Cell::Line { lo, hi: lo + 0.25 };
        let at = |q: f64| cell_pair_weight(&cell(0.0), &cell(0.25), &params(2.0, q / 2.0)).unwrap();
        // exactly 1.0 at q = 1 for any h: the bracket collapses to 1
        assert_eq!(at(1.0), 1.0);
        assert!((at(1.0 + 1e-9) - 1.0).abs() < 1e-8);
        // below q = 1 the unregularized weight diverges, by design
        assert!(at(0.999) > 100.0);
    }

    #[test]
    fn overlapping_cells_are_rejected() {
        let a = Cell::Line { lo: 0.0, hi: 1.0 };
        let b = Cell::Line { lo: 0.5, hi: 1.5 };
        assert!(matches!(cell_pair_weight(&a, &b, &params(2.0, 0.5)), Err(Error::Geometry(_))));
        let sa = Cell::Square { center: [0.0, 0.0], side: 1.0 };
        let sb = Cell::Square { center: [0.25, 0.0], side: 1.0 };
        assert!(matches!(cell_pair_weight(&sa, &sb, &params(2.0, 0.5)), Err(Error::Geometry(_))));
        assert!(matches!(cell_pair_weight(&a, &sa, &params(2.0, 0.5)), Err(Error::Geometry(_))));
    }

    #[test]
    fn exterior_weight_interval_closed_form() {
        // centered node in (0, 1) at ps = 1: (2^-1)^-1 + (2^-1)^-1 = 4
        let d = DomainSpec::Interval { a: 0.0, b: 1.0 };
        let e = exterior_weight([0.5, 0.0], &d, &params(2.0, 0.5)).unwrap();
        assert!((e - 4.0).abs() < 1e-12, "got {e}");
        assert!(exterior_weight([0.0, 0.0], &d, &params(2.0, 0.5)).is_err());
        assert!(exterior_weight([1.25, 0.0], &d, &params(2.0, 0.5)).is_err());
    }

    #[test]
    fn exterior_weight_disc_center() {
        // at the center every boundary ray has length r0, the integral is
        // 2 pi r0^-q / q
        let d = DomainSpec::Disc { r0: 1.0 };
        let e = exterior_weight([0.0, 0.0], &d, &params(2.0, 0.5)).unwrap();
        assert!((e - std::f64::consts::TAU).abs() < 1e-12, "got {e}");
    }

    #[test]
    fn exterior_weight_disc_off_center_matches_reference() {
        let d = DomainSpec::Disc { r0: 1.0 };
        // frozen from a 4096-angle evaluation of the same radial closed form
        let e1 = exterior_weight([0.5, 0.0], &d, &params(2.0, 0.5)).unwrap();
        assert!((e1 - 7.826_465_116_476_945).abs() < 1e-9, "got {e1}");
        let e2 = exterior_weight([0.0, 0.7], &d, &params(3.0, 0.5)).unwrap();
        assert!((e2 - 10.395_712_963_162_305).abs() < 1e-9, "got {e2}");
    }

    #[test]
    fn assembly_is_symmetric_with_positive_entries() {
        let d = DomainSpec::Interval { a: 0.0, b: 1.0 };
        let g = build_grid(&d, 16).unwrap();
        let kw = assemble_weights(&g, &params(2.5, 0.6)).unwrap();
        for i in 0..kw.n_nodes() {
            assert_eq!(kw.w(i, i), 0.0);
            assert!(kw.absorption(i) > 0.0);
            for j in 0..kw.n_nodes() {
                assert_eq!(kw.w(i, j), kw.w(j, i));
                if i != j {
                    assert!(kw.w(i, j) > 0.0);
                }
            }
        }
    }

    #[test]
    fn absorption_grows_toward_the_boundary() {
        let d = DomainSpec::Interval { a: 0.0, b: 1.0 };
        let g = build_grid(&d, 32).unwrap();
        let kw = assemble_weights(&g, &params(2.0, 0.5)).unwrap();
        // interval cells share one volume, so the stored values order like
        // the bare complement integrals
        for i in 0..15 {
            assert!(kw.absorption(i) > kw.absorption(i + 1));
        }
    }
}
