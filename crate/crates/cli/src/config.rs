//! Run configuration: a flat TOML schema, strict about unknown keys,
//! resolved against per-subcommand requirements into validated settings.

use fraclab_core::domain::DomainSpec;
use fraclab_core::kernel::{EpsilonSchedule, OperatorParams};
use serde::Deserialize;

/// The subcommand a config is resolved for. Requirements differ: a grid is
/// pointless for pointwise evaluation, a checker name only steers `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Solve,
    EvalOp,
    Verify,
    Suite,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::EvalOp => "eval-op",
            Mode::Verify => "verify",
            Mode::Suite => "suite",
        }
    }
}

/// The schema exactly as written in the file. Unknown keys are rejected at
/// parse time with the key name and its position in the file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: Option<String>,
    a: Option<f64>,
    b: Option<f64>,
    r0: Option<f64>,
    p: Option<f64>,
    s: Option<f64>,
    n: Option<usize>,
    source: Option<String>,
    k: Option<f64>,
    tolerance: Option<f64>,
    max_iterations: Option<usize>,
    field: Option<String>,
    probes: Option<Vec<f64>>,
    far_cutoff: Option<f64>,
    eps0: Option<f64>,
    levels: Option<usize>,
    check: Option<String>,
    k_list: Option<Vec<f64>>,
    rho: Option<f64>,
    radii: Option<Vec<f64>>,
    deltas: Option<Vec<f64>>,
    pairs: Option<usize>,
    seed: Option<u64>,
    out: Option<String>,
}

/// How the solved profile's source term is built.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    /// `f` identically equal to the amplitude.
    Constant(f64),
    /// The amplitude times a named closed-form field sampled at the nodes.
    Field { name: String, k: f64 },
}

pub const SOURCE_NAMES: &[&str] = &["constant", "sqrt_profile", "bump"];
pub const FIELD_NAMES: &[&str] =
    &["halfspace_power", "sqrt_profile", "bump", "distance_power"];
pub const CHECK_NAMES: &[&str] =
    &["comparison", "apriori", "boundary", "harnack", "holder", "delta_s"];

/// Everything a run needs, defaults resolved and every value checked.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub params: OperatorParams,
    pub n: Option<usize>,
    pub source: SourceSpec,
    /// Residual target; `None` picks a default by `p` at the point of use.
    pub tolerance: Option<f64>,
    pub max_iterations: usize,
    pub field: String,
    pub probes: Vec<f64>,
    pub far_cutoff: f64,
    pub schedule: EpsilonSchedule,
    pub check: Option<String>,
    pub k_list: Vec<f64>,
    /// Boundary collar width; `None` means one eighth of the diameter.
    pub rho: Option<f64>,
    /// Oscillation radii; `None` means dyadic multiples of the spacing.
    pub radii: Option<Vec<f64>>,
    /// Probe distances for the distance-power source; `None` scales the
    /// diameter by {0.025, 0.05, 0.1}.
    pub deltas: Option<Vec<f64>>,
    pub pairs: usize,
    pub seed: u64,
    pub out: Option<String>,
}

fn finite_pos(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

/// Parses and validates one config text for the given subcommand.
///
/// Syntax problems, unknown keys, and type mismatches come back as the
/// parser's message with line and column; semantic problems are collected,
/// one message per offending key.
pub fn parse_config(
    text: &str,
    mode: Mode,
    override_singular: bool,
) -> Result<ExperimentConfig, Vec<String>> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| vec![e.to_string()])?;
    let mut errors = Vec::new();

    let domain = match raw.domain.as_deref() {
        None => {
            errors.push("domain is required, \"interval\" or \"disc\"".to_string());
            None
        }
        Some("interval") => {
            if raw.r0.is_some() {
                errors.push("r0 is a disc key, not meaningful on an interval".to_string());
            }
            let a = raw.a.unwrap_or(-1.0);
            let b = raw.b.unwrap_or(1.0);
            if !a.is_finite() || !b.is_finite() || !(a < b) {
                errors.push(format!("interval needs finite a < b, got a = {a}, b = {b}"));
                None
            } else {
                Some(DomainSpec::Interval { a, b })
            }
        }
        Some("disc") => {
            if raw.a.is_some() || raw.b.is_some() {
                errors.push("a and b are interval keys, not meaningful on a disc".to_string());
            }
            let r0 = raw.r0.unwrap_or(1.0);
            if !finite_pos(r0) {
                errors.push(format!("disc needs r0 > 0, got {r0}"));
                None
            } else {
                Some(DomainSpec::Disc { r0 })
            }
        }
        Some(other) => {
            errors.push(format!("domain must be \"interval\" or \"disc\", got \"{other}\""));
            None
        }
    };

    let params = match (raw.p, raw.s) {
        (Some(p), Some(s)) => match OperatorParams::new(p, s) {
            Ok(pr) => Some(pr),
            Err(e) => {
                errors.push(e.to_string());
                None
            }
        },
        (p, s) => {
            if p.is_none() {
                errors.push("p is required".to_string());
            }
            if s.is_none() {
                errors.push("s is required".to_string());
            }
            None
        }
    };

    if let Some(n) = raw.n {
        if n < 2 {
            errors.push(format!("n must be at least 2, got {n}"));
        }
    } else if matches!(mode, Mode::Solve | Mode::Verify | Mode::Suite) {
        errors.push(format!("n is required for the {} subcommand", mode.name()));
    }

    let k = raw.k.unwrap_or(1.0);
    if !k.is_finite() {
        errors.push(format!("k must be finite, got {k}"));
    }
    let source_name = raw.source.as_deref().unwrap_or("constant");
    let source = if SOURCE_NAMES.contains(&source_name) {
        if source_name == "constant" {
            SourceSpec::Constant(k)
        } else {
            SourceSpec::Field { name: source_name.to_string(), k }
        }
    } else {
        errors.push(format!(
            "source must be one of {}, got \"{source_name}\"",
            SOURCE_NAMES.join(", ")
        ));
        SourceSpec::Constant(k)
    };

    if let Some(t) = raw.tolerance {
        if !finite_pos(t) {
            errors.push(format!("tolerance must be positive and finite, got {t}"));
        }
    }
    let max_iterations = raw.max_iterations.unwrap_or(50_000);
    if max_iterations == 0 {
        errors.push("max_iterations must be at least 1".to_string());
    }

    let field = raw.field.unwrap_or_else(|| "halfspace_power".to_string());
    if !FIELD_NAMES.contains(&field.as_str()) {
        errors.push(format!(
            "field must be one of {}, got \"{field}\"",
            FIELD_NAMES.join(", ")
        ));
    }
    let probes = raw.probes.unwrap_or_else(|| vec![0.5]);
    if probes.is_empty() {
        errors.push("probes must not be empty".to_string());
    }
    if probes.iter().any(|x| !x.is_finite()) {
        errors.push("probes must be finite".to_string());
    }

    let far_cutoff = raw.far_cutoff.unwrap_or(1e6);
    if !finite_pos(far_cutoff) {
        errors.push(format!("far_cutoff must be positive and finite, got {far_cutoff}"));
    }
    let eps0 = raw.eps0.unwrap_or(1.0);
    if !finite_pos(eps0) {
        errors.push(format!("eps0 must be positive and finite, got {eps0}"));
    }
    let levels = raw.levels.unwrap_or(20);
    if levels == 0 {
        errors.push("levels must be at least 1".to_string());
    }

    if let Some(c) = raw.check.as_deref() {
        if !CHECK_NAMES.contains(&c) {
            errors.push(format!(
                "check must be one of {}, got \"{c}\"",
                CHECK_NAMES.join(", ")
            ));
        }
    } else if mode == Mode::Verify {
        errors.push(format!(
            "check is required for the verify subcommand, one of {}",
            CHECK_NAMES.join(", ")
        ));
    }

    let k_list = raw.k_list.unwrap_or_else(|| vec![0.1, 1.0, 10.0]);
    if k_list.len() < 2 {
        errors.push("k_list needs at least two source levels".to_string());
    }
    if k_list.iter().any(|&v| !finite_pos(v)) {
        errors.push("k_list entries must be positive and finite".to_string());
    }

    if let Some(r) = raw.rho {
        if !finite_pos(r) {
            errors.push(format!("rho must be positive and finite, got {r}"));
        }
    }
    if let Some(rs) = &raw.radii {
        if rs.len() < 2 {
            errors.push("radii needs at least two entries for a decay fit".to_string());
        }
        if rs.iter().any(|&r| !finite_pos(r)) {
            errors.push("radii must be positive and finite".to_string());
        }
    }
    if let Some(ds) = &raw.deltas {
        if ds.is_empty() {
            errors.push("deltas must not be empty".to_string());
        }
        if ds.iter().any(|&d| !finite_pos(d)) {
            errors.push("deltas must be positive and finite".to_string());
        }
    }
    let pairs = raw.pairs.unwrap_or(10);
    if pairs == 0 {
        errors.push("pairs must be at least 1".to_string());
    }

    // Merely critical smooth points break the principal value at small p
    // with large s, so a pointwise evaluation request there is refused
    // up front rather than after the quadrature has run.
    if mode == Mode::EvalOp && !override_singular {
        if let Some(pr) = &params {
            if !pr.pointwise_valid() {
                errors.push(format!(
                    "pointwise evaluation needs s below the singular threshold \
                     2(p - 1)/p = {:.6} at p = {}, got s = {}; the truncation series \
                     is still meaningful, pass --override-singular-check to evaluate anyway",
                    pr.pointwise_threshold(),
                    pr.p(),
                    pr.s()
                ));
            }
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(ExperimentConfig {
        domain: domain.unwrap(),
        params: params.unwrap(),
        n: raw.n,
        source,
        tolerance: raw.tolerance,
        max_iterations,
        field,
        probes,
        far_cutoff,
        schedule: EpsilonSchedule { eps0, levels },
        check: raw.check,
        k_list,
        rho: raw.rho,
        radii: raw.radii,
        deltas: raw.deltas,
        pairs: raw.pairs.unwrap_or(10),
        seed: raw.seed.unwrap_or(42),
        out: raw.out,
    })
}

impl ExperimentConfig {
    /// Residual target applied when the config leaves `tolerance` unset.
    /// The degenerate energies below `p = 2` converge slowly, so their
    /// default is the battery-grade target rather than the tight one.
    pub fn solver_tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(if self.params.p() < 2.0 { 1e-3 } else { 1e-9 })
    }

    /// Tighter default used where a 1e-6 scaling gate consumes the solver
    /// error directly.
    pub fn scaling_tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(if self.params.p() < 2.0 { 2e-6 } else { 1e-10 })
    }

    /// Collar width, one eighth of the diameter unless configured.
    pub fn collar(&self) -> f64 {
        self.rho.unwrap_or(self.domain.diameter() / 8.0)
    }

    /// Resolved settings as manifest lines, defaults spelled out.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        match self.domain {
            DomainSpec::Interval { a, b } => {
                out.push(("domain".into(), format!("interval [{a}, {b}]")));
            }
            DomainSpec::Disc { r0 } => {
                out.push(("domain".into(), format!("disc of radius {r0}")));
            }
        }
        out.push(("p".into(), self.params.p().to_string()));
        out.push(("s".into(), self.params.s().to_string()));
        out.push((
            "n".into(),
            self.n.map_or_else(|| "unset".into(), |n| n.to_string()),
        ));
        out.push((
            "source".into(),
            match &self.source {
                SourceSpec::Constant(k) => format!("constant {k}"),
                SourceSpec::Field { name, k } => format!("{name} scaled by {k}"),
            },
        ));
        out.push((
            "tolerance".into(),
            self.tolerance
                .map_or_else(|| format!("auto ({})", self.solver_tolerance()), |t| t.to_string()),
        ));
        out.push(("max_iterations".into(), self.max_iterations.to_string()));
        out.push(("field".into(), self.field.clone()));
        out.push((
            "probes".into(),
            format!("[{}]", self.probes.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")),
        ));
        out.push(("far_cutoff".into(), self.far_cutoff.to_string()));
        out.push(("eps0".into(), self.schedule.eps0.to_string()));
        out.push(("levels".into(), self.schedule.levels.to_string()));
        out.push((
            "check".into(),
            self.check.clone().unwrap_or_else(|| "unset".into()),
        ));
        out.push((
            "k_list".into(),
            format!("[{}]", self.k_list.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")),
        ));
        out.push((
            "rho".into(),
            self.rho.map_or_else(|| format!("auto ({})", self.collar()), |r| r.to_string()),
        ));
        out.push((
            "radii".into(),
            self.radii.as_ref().map_or_else(
                || "auto (dyadic multiples of the spacing)".into(),
                |rs| format!("[{}]", rs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")),
            ),
        ));
        out.push((
            "deltas".into(),
            self.deltas.as_ref().map_or_else(
                || "auto (diameter fractions 0.025, 0.05, 0.1)".into(),
                |ds| format!("[{}]", ds.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")),
            ),
        ));
        out.push(("pairs".into(), self.pairs.to_string()));
        out.push(("seed".into(), self.seed.to_string()));
        out
    }
}
