//! Domains, midpoint grids, grid functions, and closed-form fields.

use crate::{Error, Result};

/// A point in the plane. One-dimensional geometry uses the first coordinate
/// and keeps the second at zero.
pub type Point = [f64; 2];

/// Euclidean distance between two points.
pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Bounded open domain on which the Dirichlet problem is posed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainSpec {
    /// Open interval `(a, b)`.
    Interval { a: f64, b: f64 },
    /// Open disc of radius `r0` centered at the origin.
    Disc { r0: f64 },
}

impl DomainSpec {
    /// Ambient dimension: 1 for intervals, 2 for discs.
    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            DomainSpec::Disc { .. } => 2,
        }
    }

    /// Diameter of the domain.
    pub fn diameter(&self) -> f64 {
        match self {
            DomainSpec::Interval { a, b } => b - a,
            DomainSpec::Disc { r0 } => 2.0 * r0,
        }
    }

    /// Distance from `x` to the complement, negative outside the closure.
    pub fn boundary_distance(&self, x: Point) -> f64 {
        match self {
            DomainSpec::Interval { a, b } => (x[0] - a).min(b - x[0]),
            DomainSpec::Disc { r0 } => r0 - x[0].hypot(x[1]),
        }
    }

    /// True when `x` lies strictly inside the domain.
    pub fn contains(&self, x: Point) -> bool {
        self.boundary_distance(x) > 0.0
    }

    /// Center of the smallest ball containing the domain.
    pub fn center(&self) -> Point {
        match self {
            DomainSpec::Interval { a, b } => [0.5 * (a + b), 0.0],
            DomainSpec::Disc { .. } => [0.0, 0.0],
        }
    }

    /// Rejects empty, degenerate, or non-finite domains.
    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::Interval { a, b } => {
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::Config(format!(
                        "interval endpoints must be finite, got ({a}, {b})"
                    )));
                }
                if !(a < b) {
                    return Err(Error::Config(format!(
                        "interval needs a < b, got ({a}, {b})"
                    )));
                }
            }
            DomainSpec::Disc { r0 } => {
                if !r0.is_finite() || !(*r0 > 0.0) {
                    return Err(Error::Config(format!("disc radius must be positive, got {r0}")));
                }
            }
        }
        Ok(())
    }
}

/// Axis-aligned cell of a grid, the support of one nodal basis function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    /// Interval cell `[lo, hi]`.
    Line { lo: f64, hi: f64 },
    /// Square cell with the given center and side length.
    Square { center: Point, side: f64 },
}

/// Uniform cell-midpoint discretization of a domain.
///
/// Interval grids split `(a, b)` into `n` equal cells. Disc grids lay an
/// `n` by `n` square lattice over the bounding box and keep the cells whose
/// midpoints fall strictly inside the disc; boundary cells carry clipped
/// volumes so the total measure tracks the disc area.
#[derive(Debug, Clone)]
pub struct Grid {
    domain: DomainSpec,
    n: usize,
    h: f64,
    nodes: Vec<Point>,
    vols: Vec<f64>,
}

/// Builds the midpoint grid with `n` cells per axis.
///
/// Fails when the domain is invalid or `n < 8`, which is too coarse for any
/// of the estimates this crate measures.
pub fn build_grid(domain: &DomainSpec, n: usize) -> Result<Grid> {
    domain.validate()?;
    if n < 8 {
        return Err(Error::Config(format!("grid needs n >= 8 cells per axis, got {n}")));
    }
    match *domain {
        DomainSpec::Interval { a, b } => {
            let h = (b - a) / n as f64;
            let nodes: Vec<Point> = (0..n).map(|i| [a + (i as f64 + 0.5) * h, 0.0]).collect();
            let vols = vec![h; n];
            Ok(Grid { domain: *domain, n, h, nodes, vols })
        }
        DomainSpec::Disc { r0 } => {
            let h = 2.0 * r0 / n as f64;
            let mut nodes = Vec::new();
            let mut vols = Vec::new();
            for iy in 0..n {
                let cy = -r0 + (iy as f64 + 0.5) * h;
                for ix in 0..n {
                    let cx = -r0 + (ix as f64 + 0.5) * h;
                    if cx.hypot(cy) < r0 {
                        nodes.push([cx, cy]);
                        vols.push(clipped_volume([cx, cy], h, r0));
                    }
                }
            }
            if nodes.is_empty() {
                return Err(Error::Geometry(format!(
                    "no cell midpoint falls inside the disc of radius {r0} at n = {n}"
                )));
            }
            Ok(Grid { domain: *domain, n, h, nodes, vols })
        }
    }
}

/// Fraction of the square cell at `center` inside the disc, times the cell area.
/// Tensor Gauss rule on the cell applied to the disc indicator.
fn clipped_volume(center: Point, h: f64, r0: f64) -> f64 {
    let mut inside = 0.0;
    for &(tx, wx) in GAUSS4 {
        for &(ty, wy) in GAUSS4 {
            let x = center[0] + 0.5 * h * tx;
            let y = center[1] + 0.5 * h * ty;
            if x.hypot(y) < r0 {
                inside += wx * wy;
            }
        }
    }
    h * h * inside / 4.0
}

/// Four-point Gauss-Legendre rule on `[-1, 1]`, `(node, weight)` pairs.
const GAUSS4: &[(f64, f64)] = &[
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
    (-0.339_981_043_584_856_26, 0.652_145_154_862_546_2),
    (0.339_981_043_584_856_26, 0.652_145_154_862_546_2),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
];

impl Grid {
    /// The domain this grid discretizes.
    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    /// Cells per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Cell side length.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of interior nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// True when the grid has no interior nodes. `build_grid` never returns such a grid.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// All interior nodes in assembly order.
    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    /// Node coordinates of interior node `i`.
    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    /// Cell volumes, clipped against the domain for boundary cells.
    pub fn vols(&self) -> &[f64] {
        &self.vols
    }

    /// The cell owned by node `i`.
    pub fn cell(&self, i: usize) -> Cell {
        let x = self.nodes[i];
        match self.domain {
            DomainSpec::Interval { .. } => Cell::Line { lo: x[0] - 0.5 * self.h, hi: x[0] + 0.5 * self.h },
            DomainSpec::Disc { .. } => Cell::Square { center: x, side: self.h },
        }
    }

    /// Index of the node at `x`, if one matches to within `1e-12 * h`.
    pub fn node_index(&self, x: Point) -> Option<usize> {
        let tol = 1e-12 * self.h;
        self.nodes.iter().position(|&p| dist(p, x) <= tol)
    }
}

/// One real value per interior node of some grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    /// Nodal values in grid assembly order.
    pub values: Vec<f64>,
}

impl GridFunction {
    /// The zero function on a grid with `n` nodes.
    pub fn zeros(n: usize) -> Self {
        GridFunction { values: vec![0.0; n] }
    }

    /// The constant function `c` on a grid with `n` nodes.
    pub fn constant(c: f64, n: usize) -> Self {
        GridFunction { values: vec![c; n] }
    }

    /// Number of nodal values.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when there are no nodal values.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Supremum norm over the nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Distance from each node to the complement of the domain.
pub fn distance_to_complement(grid: &Grid) -> GridFunction {
    let values = grid
        .nodes()
        .iter()
        .map(|&x| grid.domain().boundary_distance(x))
        .collect();
    GridFunction { values }
}

/// Bound on a field away from a bounded set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    /// The field vanishes outside the ball of radius `radius` about `center`.
    Compact { center: Point, radius: f64 },
    /// `|u(x)| <= coeff * (1 + |x|)^gamma` everywhere.
    Growth { gamma: f64, coeff: f64 },
}

type EvalFn = dyn Fn(Point) -> f64 + Send + Sync;
type DiffFn = dyn Fn(Point, Point) -> f64 + Send + Sync;

/// A closed-form field on the ambient space.
///
/// Carries the evaluation rule, a support or growth descriptor used to close
/// quadrature tails, and optionally a cancellation-safe rule for differences
/// `u(x) - u(y)`, which the pointwise evaluator consumes deep inside the
/// singular range where direct subtraction loses every digit.
pub struct AnalyticField {
    eval: Box<EvalFn>,
    diff: Option<Box<DiffFn>>,
    support: Support,
    smoothness: &'static str,
    dim: usize,
}

impl std::fmt::Debug for AnalyticField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticField")
            .field("support", &self.support)
            .field("smoothness", &self.smoothness)
            .finish_non_exhaustive()
    }
}

impl AnalyticField {
    /// Wraps an evaluation rule with its support descriptor.
    pub fn new<F>(eval: F, support: Support, smoothness: &'static str) -> Self
    where
        F: Fn(Point) -> f64 + Send + Sync + 'static,
    {
        AnalyticField { eval: Box::new(eval), diff: None, support, smoothness, dim: 1 }
    }

    /// Marks the field as a function of both coordinates. The nonlocal
    /// evaluator then integrates over the plane instead of the line.
    pub fn planar(mut self) -> Self {
        self.dim = 2;
        self
    }

    /// Ambient dimension the field is integrated over, 1 or 2.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Attaches a cancellation-safe difference rule computing `u(x) - u(y)`.
    pub fn with_diff<D>(mut self, diff: D) -> Self
    where
        D: Fn(Point, Point) -> f64 + Send + Sync + 'static,
    {
        self.diff = Some(Box::new(diff));
        self
    }

    /// Evaluates the field at `x`.
    pub fn value(&self, x: Point) -> f64 {
        (self.eval)(x)
    }

    /// `u(x) - u(y)`, through the safe difference rule when one is attached.
    pub fn difference(&self, x: Point, y: Point) -> f64 {
        match &self.diff {
            Some(d) => d(x, y),
            None => (self.eval)(x) - (self.eval)(y),
        }
    }

    /// The support or growth descriptor.
    pub fn support(&self) -> Support {
        self.support
    }

    /// Free-text smoothness tag, for reports only.
    pub fn smoothness(&self) -> &'static str {
        self.smoothness
    }

    /// The constant field.
    pub fn constant(c: f64) -> Self {
        AnalyticField::new(move |_| c, Support::Growth { gamma: 0.0, coeff: c.abs() }, "smooth")
            .with_diff(|_, _| 0.0)
    }

    /// The coordinate field `u(x) = x` in one dimension.
    pub fn identity_1d() -> Self {
        AnalyticField::new(|p| p[0], Support::Growth { gamma: 1.0, coeff: 1.0 }, "smooth")
            .with_diff(|x, y| x[0] - y[0])
    }

    /// The one-sided power `u(x) = max(x, 0)^s` in one dimension.
    ///
    /// Requires `0 < s < 1`. The difference rule routes through `expm1` and
    /// `log1p` so nearby positive arguments keep full relative accuracy.
    pub fn halfspace_power(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Config(format!("halfspace power needs 0 < s < 1, got {s}")));
        }
        let eval = move |p: Point| if p[0] > 0.0 { p[0].powf(s) } else { 0.0 };
        let diff = move |x: Point, y: Point| {
            let (a, b) = (x[0], y[0]);
            match (a > 0.0, b > 0.0) {
                (false, false) => 0.0,
                (true, false) => a.powf(s),
                (false, true) => -b.powf(s),
                (true, true) => {
                    // a^s - b^s = b^s * expm1(s * log(a / b)), stable for a near b
                    b.powf(s) * (s * ((a - b) / b).ln_1p()).exp_m1()
                }
            }
        };
        Ok(AnalyticField::new(eval, Support::Growth { gamma: s, coeff: 1.0 }, "boundary cusp")
            .with_diff(diff))
    }

    /// The profile `u(x) = (1 - x^2)_+^(1/2)` in one dimension.
    ///
    /// Differences use `u(x) - u(y) = (y^2 - x^2) / (u(x) + u(y))`, exact up
    /// to rounding whenever the denominator is positive.
    pub fn sqrt_profile() -> Self {
        let val = |t: f64| {
            let w = 1.0 - t * t;
            if w > 0.0 {
                w.sqrt()
            } else {
                0.0
            }
        };
        let eval = move |p: Point| val(p[0]);
        // the factored quotient is the difference identity only while both
        // points stay inside the support; across the edge one value is zero
        // and the plain difference is already exact
        let diff = move |x: Point, y: Point| {
            let (wx, wy) = (1.0 - x[0] * x[0], 1.0 - y[0] * y[0]);
            if wx > 0.0 && wy > 0.0 {
                ((y[0] - x[0]) * (y[0] + x[0])) / (wx.sqrt() + wy.sqrt())
            } else {
                val(x[0]) - val(y[0])
            }
        };
        AnalyticField::new(
            eval,
            Support::Compact { center: [0.0, 0.0], radius: 1.0 },
            "boundary cusp",
        )
        .with_diff(diff)
    }

    /// Smooth bump `exp(1 - 1/(1 - t^2))` with `t = (x - center)/halfwidth`,
    /// supported on `[center - halfwidth, center + halfwidth]` in one dimension.
    pub fn bump(center: f64, halfwidth: f64) -> Result<Self> {
        if !(halfwidth > 0.0) || !halfwidth.is_finite() || !center.is_finite() {
            return Err(Error::Config(format!(
                "bump needs finite center and positive halfwidth, got ({center}, {halfwidth})"
            )));
        }
        let eval = move |p: Point| {
            let t = (p[0] - center) / halfwidth;
            let w = 1.0 - t * t;
            if w > 0.0 {
                (1.0 - 1.0 / w).exp()
            } else {
                0.0
            }
        };
        Ok(AnalyticField::new(
            eval,
            Support::Compact { center: [center, 0.0], radius: halfwidth },
            "smooth",
        ))
    }

    /// Indicator of the interval `[lo, hi]` in one dimension.
    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!("indicator needs lo < hi, got ({lo}, {hi})")));
        }
        let eval = move |p: Point| if p[0] >= lo && p[0] <= hi { 1.0 } else { 0.0 };
        Ok(AnalyticField::new(
            eval,
            Support::Compact { center: [0.5 * (lo + hi), 0.0], radius: 0.5 * (hi - lo) },
            "discontinuous",
        ))
    }

    /// Power of the boundary distance, `u(x) = d(x, complement)^s`, zero outside.
    pub fn distance_power(domain: DomainSpec, s: f64) -> Result<Self> {
        domain.validate()?;
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Config(format!("distance power needs 0 < s < 1, got {s}")));
        }
        let eval = move |p: Point| {
            let d = domain.boundary_distance(p);
            if d > 0.0 {
                d.powf(s)
            } else {
                0.0
            }
        };
        let diff = move |x: Point, y: Point| {
            let (da, db) = (domain.boundary_distance(x), domain.boundary_distance(y));
            match (da > 0.0, db > 0.0) {
                (false, false) => 0.0,
                (true, false) => da.powf(s),
                (false, true) => -db.powf(s),
                (true, true) => db.powf(s) * (s * ((da - db) / db).ln_1p()).exp_m1(),
            }
        };
        let center = domain.center();
        let radius = 0.5 * domain.diameter();
        let mut field = AnalyticField::new(eval, Support::Compact { center, radius }, "boundary cusp")
            .with_diff(diff);
        field.dim = domain.dim();
        Ok(field)
    }
}

/// Evaluates a field at every node of a grid.
///
/// Fails when any nodal value is non-finite.
pub fn sample(field: &AnalyticField, grid: &Grid) -> Result<GridFunction> {
    let mut values = Vec::with_capacity(grid.len());
    for (i, &x) in grid.nodes().iter().enumerate() {
        let v = field.value(x);
        if !v.is_finite() {
            return Err(Error::Evaluation(format!(
                "field evaluated to {v} at node {i} ({}, {})",
                x[0], x[1]
            )));
        }
        values.push(v);
    }
    Ok(GridFunction { values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_grid_has_uniform_midpoints() {
        let d = DomainSpec::Interval { a: -1.0, b: 1.0 };
        let g = build_grid(&d, 16).unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g.h(), 0.125);
        assert_eq!(g.node(0)[0], -1.0 + 0.0625);
        assert_eq!(g.node(15)[0], 1.0 - 0.0625);
        assert!(g.vols().iter().all(|&v| v == 0.125));
    }

    #[test]
    fn grid_rejects_coarse_and_degenerate_input() {
        let d = DomainSpec::Interval { a: 0.0, b: 1.0 };
        assert!(build_grid(&d, 7).is_err());
        let bad = DomainSpec::Interval { a: 1.0, b: 1.0 };
        assert!(build_grid(&bad, 16).is_err());
        let bad_disc = DomainSpec::Disc { r0: -1.0 };
        assert!(build_grid(&bad_disc, 16).is_err());
    }

    #[test]
    fn disc_grid_volume_tracks_disc_area() {
        let d = DomainSpec::Disc { r0: 1.0 };
        for n in [16, 32] {
            let g = build_grid(&d, n).unwrap();
            let vol: f64 = g.vols().iter().sum();
            let rel = (vol - std::f64::consts::PI).abs() / std::f64::consts::PI;
            assert!(rel < 0.02, "n = {n}: volume {vol} deviates {rel:.4} from the disc area");
            assert!(g.nodes().iter().all(|&x| d.contains(x)));
        }
    }

    #[test]
    fn boundary_distance_matches_geometry() {
        let d = DomainSpec::Interval { a: 0.0, b: 1.0 };
        let g = build_grid(&d, 8).unwrap();
        let delta = distance_to_complement(&g);
        assert_eq!(delta.values[0], g.h() / 2.0);
        assert_eq!(delta.values[4], g.node(4)[0].min(1.0 - g.node(4)[0]));

        let disc = DomainSpec::Disc { r0 : 2.0 };
        let gd = build_grid(&disc, 16).unwrap();
        let dd = distance_to_complement(&gd);
        for (i, &x) in gd.nodes().iter().enumerate() {
            assert!((dd.values[i] - (2.0 - x[0].hypot(x[1]))).abs() < 1e-14);
            assert!(dd.values[i] > 0.0);
        }
    }

    #[test]
    fn sample_rejects_non_finite_fields() {
        let d = DomainSpec::Interval { a: 0.0, b: 1.0 };
        let g = build_grid(&d, 8).unwrap();
        let f = AnalyticField::new(
            |p| 1.0 / (p[0] - p[0]),
            Support::Growth { gamma: 0.0, coeff: 1.0 },
            "singular",
        );
        assert!(matches!(sample(&f, &g), Err(Error::Evaluation(_))));
    }

    #[test]
    fn halfspace_difference_rule_is_cancellation_safe() {
        let f = AnalyticField::halfspace_power(0.5).unwrap();
        let x = 0.5f64;
        let r = 1e-13;
        let d = f.difference([x, 0.0], [x + r, 0.0]);
        // d/dx x^(1/2) = 1/(2 sqrt(x)), so the difference is about -r / (2 sqrt(x))
        let expect = -r / (2.0 * x.sqrt());
        assert!((d - expect).abs() <= 1e-3 * expect.abs(), "{d} vs {expect}");
    }

    #[test]
    fn sqrt_profile_difference_is_exact_in_the_interior() {
        let f = AnalyticField::sqrt_profile();
        let (x, y) = ([0.25, 0.0], [0.75, 0.0]);
        let direct = f.value(x) - f.value(y);
        assert!((f.difference(x, y) - direct).abs() < 1e-15);
        assert_eq!(f.value([2.0, 0.0]), 0.0);
    }
}
