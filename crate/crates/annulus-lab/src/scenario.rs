//! Scenario orchestration: named checks over a field, machine-readable
//! reports, compiled-in scenarios for the catalog flows, and a descriptive
//! audit that matches a flow against the rigidity hypothesis sets.

use std::cell::OnceCell;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::flows::{
    divergence_at, euler_residual, fd_step, vorticity_transport_at, FieldSpec, FlowError,
    VectorField,
};
use crate::geometry::Point;
use crate::stream::{
    classify_stagnation, default_tol_speed, radial_decay_report, stream_on_grid, tangency_max,
    StagnationClass, StreamGrid, Verdict as TrendVerdict,
};
use crate::symmetry::{critical_points, overdetermined_audit, radial_deviation};
use crate::trace::{
    build_chart, extract_vorticity_profile, trace_gradient_curve, trace_streamline, TracerOptions,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown check `{name}`; available: {available:?}")]
    UnknownCheck {
        name: String,
        available: Vec<&'static str>,
    },
    #[error("unknown builtin scenario `{name}`; available: {available:?}")]
    UnknownScenario {
        name: String,
        available: Vec<&'static str>,
    },
    #[error(transparent)]
    Field(#[from] FlowError),
}

/// JSON schema tag stamped on every report.
pub const REPORT_SCHEMA: &str = "annulus-lab/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CheckVerdict {
    Pass,
    Fail,
    /// Descriptive record: never affects the exit status.
    Info,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub inputs: Value,
    pub values: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub verdict: CheckVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// Grid sizes and tolerances the records were produced under.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Environment {
    pub grid_n_r: usize,
    pub grid_n_theta: usize,
    pub audit_points: usize,
    pub tracer_rel_tol: f64,
    pub tracer_abs_tol: f64,
    pub quasi_random_skip: usize,
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            grid_n_r: 96,
            grid_n_theta: 256,
            audit_points: 1000,
            tracer_rel_tol: 1e-9,
            tracer_abs_tol: 1e-12,
            quasi_random_skip: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub scenario: String,
    pub field: FieldSpec,
    pub environment: Environment,
    pub records: Vec<CheckRecord>,
}

impl Report {
    pub fn any_fail(&self) -> bool {
        self.records
            .iter()
            .any(|r| r.verdict == CheckVerdict::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One CSV row per record: `scenario,check,verdict,threshold,values`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,check,verdict,threshold,values\n");
        for r in &self.records {
            let threshold = r
                .threshold
                .map(|t| t.to_string())
                .unwrap_or_default();
            let values = r.values.to_string().replace('"', "\"\"");
            out.push_str(&format!(
                "{},{},{:?},{},\"{}\"\n",
                self.scenario, r.check, r.verdict, threshold, values
            ));
        }
        out
    }
}

/// A scenario: a field, a grid resolution, and an ordered list of checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub field: FieldSpec,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    pub checks: Vec<CheckSpec>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_r: usize,
    pub n_theta: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckSpec {
    pub check: String,
    #[serde(flatten)]
    pub params: serde_json::Map<String, Value>,
}

impl CheckSpec {
    pub fn bare(name: &str) -> CheckSpec {
        CheckSpec {
            check: name.to_string(),
            params: Default::default(),
        }
    }

    fn f64_param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).and_then(Value::as_f64).unwrap_or(default)
    }
}

struct CheckContext<'a> {
    field: &'a VectorField,
    grid: GridSpec,
    env: &'a Environment,
    stream: OnceCell<Result<StreamGrid, String>>,
}

impl<'a> CheckContext<'a> {
    fn new(field: &'a VectorField, grid: GridSpec, env: &'a Environment) -> Self {
        CheckContext {
            field,
            grid,
            env,
            stream: OnceCell::new(),
        }
    }

    /// Quasi-random points of the truncated band, shrunk by the widest
    /// finite-difference stencil reach (the transport check differences the
    /// vorticity on a 10x step).
    fn band_points(&self, n: usize) -> Vec<Point> {
        let dom = self.field.domain();
        let margin = 25.0 * fd_step(dom.trunc_outer);
        let lo = dom.trunc_inner + 25.0 * fd_step(dom.trunc_inner);
        let hi = dom.trunc_outer - margin;
        let skip = self.env.quasi_random_skip;
        (0..n)
            .map(|k| {
                let r = lo + (hi - lo) * halton(k + skip, 2);
                let theta = std::f64::consts::TAU * halton(k + skip, 3);
                Point::from_polar(r, theta)
            })
            .collect()
    }

    fn stream_grid(&self) -> Result<&StreamGrid, String> {
        self.stream
            .get_or_init(|| {
                let dom = self.field.domain();
                let grid = crate::geometry::polar_grid(dom, self.grid.n_r, self.grid.n_theta)
                    .map_err(|e| e.to_string())?;
                let base = Point::new(dom.trunc_inner, 0.0);
                let base_value = self.field.stream_at(base).unwrap_or(0.0);
                stream_on_grid(self.field, &grid, base, base_value).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| e.clone())
    }

    /// Boundary circles of the true domain that lie in the band.
    fn fixed_circles(&self) -> Vec<f64> {
        let dom = self.field.domain();
        let mut out = Vec::new();
        if dom.inner_radius > 0.0 {
            out.push(dom.inner_radius);
        }
        if dom.outer_radius.is_finite() {
            out.push(dom.outer_radius);
        }
        out
    }
}

fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index + 1;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// A named check.
pub struct CheckDef {
    pub name: &'static str,
    pub summary: &'static str,
    run: fn(&CheckContext, &CheckSpec) -> CheckRecord,
}

static CHECKS: &[CheckDef] = &[
    CheckDef {
        name: "divergence",
        summary: "max |div v| over quasi-random band points",
        run: check_divergence,
    },
    CheckDef {
        name: "tangency",
        summary: "max |v . e_r| on the fixed boundary circles",
        run: check_tangency,
    },
    CheckDef {
        name: "euler_residual",
        summary: "max |(v . grad) v + grad p| over band points",
        run: check_euler,
    },
    CheckDef {
        name: "vorticity_transport",
        summary: "max |v . grad omega| over band points",
        run: check_transport,
    },
    CheckDef {
        name: "circularity",
        summary: "radial deviation of the reconstructed stream function",
        run: check_circularity,
    },
    CheckDef {
        name: "radial_decay",
        summary: "decay trends of the radial velocity component",
        run: check_decay,
    },
    CheckDef {
        name: "stagnation",
        summary: "stagnation set restricted to a proper boundary subset",
        run: check_stagnation,
    },
    CheckDef {
        name: "unique_stagnation",
        summary: "exactly one interior stagnation cluster",
        run: check_unique_stagnation,
    },
    CheckDef {
        name: "overdetermined",
        summary: "boundary oscillations of u and its normal derivative",
        run: check_overdetermined,
    },
    CheckDef {
        name: "conservation",
        summary: "stream-value drift along traced closed orbits",
        run: check_conservation,
    },
    CheckDef {
        name: "critical_points",
        summary: "critical-point census of the stream function",
        run: check_critical_points,
    },
    CheckDef {
        name: "speed_range",
        summary: "min/max speed over the band (descriptive)",
        run: check_speed_range,
    },
    CheckDef {
        name: "lipschitz",
        summary: "endpoint Lipschitz estimate of the extracted vorticity function (descriptive)",
        run: check_lipschitz,
    },
];

pub fn check_registry() -> &'static [CheckDef] {
    CHECKS
}

fn record(
    spec: &CheckSpec,
    inputs: Value,
    values: Value,
    threshold: Option<f64>,
    verdict: CheckVerdict,
    message: Option<String>,
) -> CheckRecord {
    CheckRecord {
        check: spec.check.clone(),
        inputs,
        values,
        threshold,
        verdict,
        message,
    }
}

fn fail_with(spec: &CheckSpec, message: String) -> CheckRecord {
    record(
        spec,
        json!({}),
        json!({}),
        None,
        CheckVerdict::Fail,
        Some(message),
    )
}

fn pass_fail(ok: bool) -> CheckVerdict {
    if ok {
        CheckVerdict::Pass
    } else {
        CheckVerdict::Fail
    }
}

fn check_divergence(ctx: &CheckContext, spec: &CheckSpec) -> CheckRecord {
    let threshold = spec.f64_param("threshold", 1e-8);
    let n = spec.f64_param("points", ctx.env.audit_points as f64) as usize;
    let mut worst: f64 = 0.0;
    for x in ctx.band_points(n) {
        match divergence_at(ctx.field, x) {
            Ok(d) => worst = worst.max(d.abs()),
            Err(e) => return fail_with(spec, e.to_string()),
        }
    }
    record(
        spec,
        json!({ "points": n }),
        json!({ "max_abs_divergence": worst }),
        Some(threshold),
        pass_fail(worst <= threshold),
        None,
    )
}

fn check_tangency(ctx: &CheckContext, spec: &CheckSpec) -> CheckRecord {
    let threshold = spec.f64_param("threshold", 1e-10);
    let circles = ctx.fixed_circles();
    let mut worst: f64 = 0.0;
    for &r in &circles {
        worst = worst.max(tangency_max(ctx.field, r, 720));
    }
    record(
        spec,
        json!({ "circles": circles }),
        json!({ "max_abs_radial_component": worst }),
        Some(threshold),
        pass_fail(worst <= threshold),
        None,
    )
}

fn check_euler(ctx: &CheckContext, spec: &CheckSpec) -> CheckRecord {
    let threshold = spec.f64_param("threshold", 1e-8);
    let n = spec.f64_param("points", ctx.env.audit_points as f64) as usize;
    let mut worst: f64 = 0.0;
    for x in ctx.band_points(n) {
        match euler_residual(ctx.field, x) {
            Ok(res) => worst = worst.max(res.norm()),
            Err(e) => return fail_with(spec, e.to_string()),
        }
    }
    record(
        spec,
        json!({ "points": n }),
        json!({ "max_residual_norm": worst }),
        Some(threshold),
        pass_fail(worst <= threshold),
        None,
    )
}

fn check_transport(ctx: &CheckContext, spec: &CheckSpec) -> CheckRecord {
    let threshold = spec.f64_param("threshold", 1e-6);
    let n = spec.f64_param("points", ctx.env.audit_points as f64) as usize;
    let mut worst: f64 = 0.0;
    for x in ctx.band_points(n) {
        match vorticity_transport_at(ctx.field, x) {
            Ok(t) => worst = worst.max(t.abs()),
            Err(e) => return fail_with(spec, e.to_string()),
        }
    }
    record(
        spec,
        json!({ "points": n }),
        json!({ "max_abs_transport": worst }),
        Some(threshold),
        pass_fail(worst <= threshold),
        None,
    )
}

fn check_circularity(ctx: &CheckContext, spec: &CheckSpec) -> CheckRecord {
    let threshold = spec.f64_param("threshold", 1e-6);
    match ctx.stream_grid() {
        Ok(sg) => {
            let score = radial_deviation(sg);
            record(
                spec,
                json!({ "grid": [ctx.grid.n_r, ctx.grid.n_theta] }),
                json!({ "radial_deviation": score, "path_discrepancy": sg.path_discrepancy }),
                Some(threshold),
                pass_fail(score <= threshold),
                None,
            )
        }
        Err(e) => fail_with(spec, e),
    }
}

fn decay_radii(ctx: &CheckContext) -> Vec<f64> {
    let dom = ctx.field.domain();
    let (ti, to) = (dom.trunc_inner, dom.trunc_outer);
    let mut out = vec![];
    for f in [1.0, 2.0, 4.0, 8.0] {
        let r = ti * f;
        if r < to {
            out.push(r);
        }
    }
    for f in [8.0, 4.0, 2.0, 1.0] {
        let r = to / f;
        if r > ti && !out.iter().any(|&x| (x - r).abs() < 1e-12 * to) {
            out.push(r);
        }
    }
    out
}

fn check_decay(ctx: &CheckContext, spec: &CheckSpec) -> CheckRecord {
    let radii = match spec.params.get("radii") {
        Some(Value::Array(vals)) => vals.iter().filter_map(Value::as_f64).collect(),
        _ => decay_radii(ctx),
    };
    match radial_decay_report(ctx.field, &radii) {
        Ok(rep) => {
            let dom = ctx.field.domain();
            let mut ok = true;
            if dom.is_unbounded() {
                ok &= rep.outer_decay == TrendVerdict::Pass;
            }
            if dom.is_punctured() {
                ok &= rep.inner_flux_decay == TrendVerdict::Pass;
            }
            record(
                spec,
                json!({ "radii": radii }),
                serde_json::to_value(&rep).unwrap(),
                None,
                pass_fail(ok),
                None,
            )
        }
        Err(e) => fail_with(spec, e.to_string()),
    }
}

fn check_stagnation(ctx: &CheckContext, spec: &CheckSpec) -> CheckRecord {
    let tol = match spec.params.get("tol_speed").and_then(Value::as_f64) {
        Some(t) => t,
        None => default_tol_speed(ctx.field, ctx.field.domain()),
    };
    let rep = classify_stagnation(ctx.field, ctx.field.domain(), tol);
    let ok = matches!(
        rep.classification,
        StagnationClass::Empty
            | StagnationClass::ProperSubsetInner
            | StagnationClass::ProperSubsetOuter
    ) && !(rep.boundary_inner_fraction > 0.0 && rep.boundary_outer_fraction > 0.0);
    record(
        spec,
        json!({ "tol_speed": tol }),
        serde_json::to_value(&rep).unwrap(),
        None,
        pass_fail(ok),
        None,
    )
}

fn check_unique_stagnation(ctx: &CheckContext, spec: &CheckSpec) -> CheckRecord {
    let tol = match spec.params.get("tol_speed").and_then(Value::as_f64) {
        Some(t) => t,
        None => default_tol_speed(ctx.field, ctx.field.domain()),
    };
    let rep = classify_stagnation(ctx.field, ctx.field.domain(), tol);
    let ok = rep.interior_points.len() == 1
        && rep.boundary_inner_fraction == 0.0
        && rep.boundary_outer_fraction == 0.0;
    record(
        spec,
        json!({ "tol_speed": tol }),
        serde_json::to_value(&rep).unwrap(),
        None,
        pass_fail(ok),
        None,
    )
}

fn check_overdetermined(ctx: &CheckContext, spec: &CheckSpec) -> CheckRecord {
    let dom = ctx.field.domain();
    let default_circle = if dom.outer_radius.is_finite() {
        dom.outer_radius
    } else {
        dom.inner_radius
    };
    let r = spec.f64_param("circle", default_circle);
    let tol_u = spec.f64_param("tol_u", 1e-4);
    let tol_dn = spec.f64_param("tol_dn", 1e-4);
    let boundary = match crate::geometry::JordanPolygon::circle(r, 1024) {
        Ok(b) => b,
        Err(e) => return fail_with(spec, e.to_string()),
    };
    match ctx.stream_grid() {
        Ok(sg) => match overdetermined_audit(sg, &boundary) {
            Ok(rep) => record(
                spec,
                json!({ "circle": r, "tol_u": tol_u, "tol_dn": tol_dn }),
                serde_json::to_value(rep).unwrap(),
                None,
                pass_fail(rep.osc_u <= tol_u && rep.osc_normal_derivative <= tol_dn),
                None,
            ),
            Err(e) => fail_with(spec, e.to_string()),
        },
        Err(e) => fail_with(spec, e),
    }
}

fn check_conservation(ctx: &CheckContext, spec: &CheckSpec) -> CheckRecord {
    let opts = TracerOptions::default();
    let threshold = spec.f64_param("threshold", 10.0 * opts.rel_tol);
    let dom = ctx.field.domain();
    let seeds: Vec<Point> = [0.25, 0.5, 0.75]
        .iter()
        .map(|f| {
            Point::new(
                dom.trunc_inner + f * (dom.trunc_outer - dom.trunc_inner),
                0.0,
            )
        })
        .collect();
    let mut worst_drift: f64 = 0.0;
    let mut all_closed = true;
    let mut details = Vec::new();
    for seed in &seeds {
        match trace_streamline(ctx.field, *seed, &opts) {
            Ok(s) => {
                all_closed &= s.closed;
                if let Some(d) = s.u_drift {
                    worst_drift = worst_drift.max(d);
                }
                details.push(json!({
                    "seed_r": seed.norm(),
                    "closed": s.closed,
                    "period": s.period,
                    "winding": s.winding,
                    "u_drift": s.u_drift,
                }));
            }
            Err(e) => return fail_with(spec, e.to_string()),
        }
    }
    record(
        spec,
        json!({ "seeds": seeds.len() }),
        json!({ "orbits": details, "max_u_drift": worst_drift }),
        Some(threshold),
        pass_fail(all_closed && worst_drift <= threshold),
        None,
    )
}

fn check_critical_points(ctx: &CheckContext, spec: &CheckSpec) -> CheckRecord {
    match ctx.stream_grid() {
        Ok(sg) => {
            let scale = {
                let grid = sg.grid();
                let mut worst: f64 = 0.0;
                for i in 0..grid.n_r() {
                    for j in 0..grid.n_theta() {
                        worst = worst.max(sg.node_gradient(i, j).norm());
                    }
                }
                worst
            };
            let tol = spec.f64_param("tol", 0.01 * scale);
            let pts = critical_points(sg, tol);
            let expected = spec.params.get("expect_count").and_then(Value::as_u64);
            let verdict = match expected {
                Some(n) => pass_fail(pts.len() as u64 == n),
                None => CheckVerdict::Info,
            };
            record(
                spec,
                json!({ "tol": tol }),
                serde_json::to_value(&pts).unwrap(),
                None,
                verdict,
                None,
            )
        }
        Err(e) => fail_with(spec, e),
    }
}

fn check_speed_range(ctx: &CheckContext, spec: &CheckSpec) -> CheckRecord {
    let n = spec.f64_param("points", ctx.env.audit_points as f64) as usize;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for x in ctx.band_points(n) {
        let s = ctx.field.speed(x);
        lo = lo.min(s);
        hi = hi.max(s);
    }
    record(
        spec,
        json!({ "points": n }),
        json!({ "min_speed": lo, "max_speed": hi }),
        None,
        CheckVerdict::Info,
        None,
    )
}

fn check_lipschitz(ctx: &CheckContext, spec: &CheckSpec) -> CheckRecord {
    let dom = ctx.field.domain();
    let default_seed = dom.trunc_inner + 1e-3 * (dom.trunc_outer - dom.trunc_inner);
    let seed_r = spec.f64_param("seed_r", default_seed);
    let direction = spec.f64_param("direction", 1.0) as i8;
    let curve = match trace_gradient_curve(
        ctx.field,
        Point::new(seed_r, 0.0),
        direction,
        &TracerOptions::default(),
    ) {
        Ok(c) => c,
        Err(e) => return fail_with(spec, e.to_string()),
    };
    if let Err(e) = build_chart(&curve) {
        return fail_with(spec, e.to_string());
    }
    match extract_vorticity_profile(ctx.field, &curve) {
        Ok(profile) => {
            let (lo, hi) = profile.range();
            record(
                spec,
                json!({ "seed_r": seed_r, "direction": direction }),
                json!({
                    "tau_range": [lo, hi],
                    "endpoint_lipschitz": profile.endpoint_lipschitz,
                    "midrange_lipschitz": profile.midrange_lipschitz,
                }),
                None,
                CheckVerdict::Info,
                None,
            )
        }
        Err(e) => fail_with(spec, e.to_string()),
    }
}

/// Parse and run a scenario from JSON text. Unknown checks are rejected
/// before anything runs.
pub fn run_scenario_json(config: &str) -> Result<Report, ScenarioError> {
    let config: ScenarioConfig =
        serde_json::from_str(config).map_err(|e| ScenarioError::ConfigParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    run_scenario(&config)
}

/// Run a scenario: checks execute in declared order, a failing check records
/// FAIL (with its error message when it could not run) without aborting the
/// rest.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Report, ScenarioError> {
    let available: Vec<&'static str> = CHECKS.iter().map(|c| c.name).collect();
    for spec in &config.checks {
        if !available.contains(&spec.check.as_str()) {
            return Err(ScenarioError::UnknownCheck {
                name: spec.check.clone(),
                available,
            });
        }
    }
    let field = config.field.build()?;
    let env = Environment::default();
    let grid = config.grid.unwrap_or(GridSpec {
        n_r: env.grid_n_r,
        n_theta: env.grid_n_theta,
    });
    let ctx = CheckContext::new(&field, grid, &env);
    let records = config
        .checks
        .iter()
        .map(|spec| {
            let def = CHECKS
                .iter()
                .find(|c| c.name == spec.check)
                .expect("validated above");
            (def.run)(&ctx, spec)
        })
        .collect();
    Ok(Report {
        schema: REPORT_SCHEMA.to_string(),
        scenario: config.name.clone(),
        field: config.field.clone(),
        environment: env,
        records,
    })
}

/// A compiled-in scenario.
pub struct BuiltinScenario {
    pub name: &'static str,
    pub summary: &'static str,
    build: fn() -> ScenarioConfig,
}

fn catalog_field(name: &str, params: &[(&str, f64)]) -> FieldSpec {
    FieldSpec::Catalog {
        name: name.to_string(),
        params: params
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect::<BTreeMap<_, _>>(),
        domain: None,
    }
}

/// Catalog field with an explicit truncation band. Flows with a 1/r blow-up
/// toward the puncture need a band where f64 residual checks stay
/// well-conditioned.
fn catalog_field_banded(
    name: &str,
    params: &[(&str, f64)],
    a: f64,
    b: f64,
    trunc: (f64, f64),
) -> FieldSpec {
    FieldSpec::Catalog {
        name: name.to_string(),
        params: params
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect::<BTreeMap<_, _>>(),
        domain: Some(crate::flows::DomainSpec {
            a,
            b: json!(b),
            trunc_inner: Some(trunc.0),
            trunc_outer: Some(trunc.1),
        }),
    }
}

fn checks(names: &[&str]) -> Vec<CheckSpec> {
    names.iter().map(|n| CheckSpec::bare(n)).collect()
}

static BUILTINS: &[BuiltinScenario] = &[
    BuiltinScenario {
        name: "th1-circular",
        summary: "rigid rotation on the annulus: every hypothesis and conclusion holds",
        build: || ScenarioConfig {
            name: "th1-circular".into(),
            field: catalog_field("rigid", &[]),
            grid: None,
            checks: checks(&[
                "divergence",
                "tangency",
                "euler_residual",
                "vorticity_transport",
                "stagnation",
                "circularity",
                "conservation",
            ]),
        },
    },
    BuiltinScenario {
        name: "th2-counterexample",
        summary: "exterior flow with O(1/r) radial component: decay and circularity fail",
        build: || ScenarioConfig {
            name: "th2-counterexample".into(),
            field: catalog_field("ext_counterexample", &[("a", 1.0)]),
            grid: None,
            checks: checks(&[
                "divergence",
                "tangency",
                "euler_residual",
                "radial_decay",
                "circularity",
            ]),
        },
    },
    BuiltinScenario {
        name: "th3-counterexample",
        summary: "harmonic punctured-disk flow: inner flux blows up, circularity fails",
        build: || ScenarioConfig {
            name: "th3-counterexample".into(),
            field: catalog_field_banded("punct_counterexample", &[("b", 1.0)], 0.0, 1.0, (0.05, 1.0)),
            grid: None,
            checks: checks(&[
                "divergence",
                "tangency",
                "euler_residual",
                "stagnation",
                "radial_decay",
                "circularity",
            ]),
        },
    },
    BuiltinScenario {
        name: "serrin-quartic",
        summary: "free-boundary model flow on the disk: constant boundary data, one stagnation point",
        build: || ScenarioConfig {
            name: "serrin-quartic".into(),
            field: catalog_field("quartic", &[("R", 1.0)]),
            grid: Some(GridSpec {
                n_r: 128,
                n_theta: 192,
            }),
            checks: vec![
                CheckSpec::bare("divergence"),
                CheckSpec::bare("tangency"),
                CheckSpec::bare("euler_residual"),
                CheckSpec::bare("overdetermined"),
                CheckSpec::bare("unique_stagnation"),
            ],
        },
    },
    BuiltinScenario {
        name: "eigenflow-annulus",
        summary: "mode-1 eigenflow: six critical points, non-circular, constant-u boundary",
        build: || ScenarioConfig {
            name: "eigenflow-annulus".into(),
            field: catalog_field("eigenflow_m1", &[("a", 1.0), ("b", 2.0)]),
            grid: Some(GridSpec {
                n_r: 128,
                n_theta: 512,
            }),
            checks: vec![
                CheckSpec::bare("divergence"),
                CheckSpec::bare("tangency"),
                CheckSpec::bare("stagnation"),
                CheckSpec {
                    check: "critical_points".into(),
                    params: [("expect_count".to_string(), json!(6))]
                        .into_iter()
                        .collect(),
                },
                CheckSpec::bare("circularity"),
                CheckSpec::bare("overdetermined"),
            ],
        },
    },
    BuiltinScenario {
        name: "log-punctured",
        summary: "logarithmic vortex in the punctured disk: all hypotheses hold, flow is circular",
        build: || ScenarioConfig {
            name: "log-punctured".into(),
            field: catalog_field_banded("log", &[], 0.0, 1.0, (0.01, 1.0)),
            grid: None,
            checks: checks(&[
                "divergence",
                "tangency",
                "euler_residual",
                "stagnation",
                "radial_decay",
                "circularity",
            ]),
        },
    },
    BuiltinScenario {
        name: "q1-shifted",
        summary: "circular flow stagnant on the inner circle: the open-question configuration, with a blow-up Lipschitz report",
        build: || ScenarioConfig {
            name: "q1-shifted".into(),
            field: catalog_field("shifted", &[("a", 1.0)]),
            grid: None,
            checks: vec![
                CheckSpec::bare("divergence"),
                CheckSpec::bare("tangency"),
                CheckSpec::bare("euler_residual"),
                CheckSpec::bare("stagnation"),
                CheckSpec::bare("circularity"),
                CheckSpec {
                    check: "lipschitz".into(),
                    params: [("seed_r".to_string(), json!(1.001))].into_iter().collect(),
                },
            ],
        },
    },
    BuiltinScenario {
        name: "conjecture-offcenter",
        summary: "off-center vortex with its image in the unit disk: steady, tangential, unbounded near the puncture (exploratory)",
        build: || {
            // stream u = ln|x - z| - ln|x - z'| with z = (0.35, 0) and the
            // image z' = (1/0.35, 0); tangential on the unit circle
            let alpha = "0.35";
            let beta = "(1/0.35)";
            let va = format!("(r-{a}*cos(theta))/(r^2-2*{a}*r*cos(theta)+{a}^2)", a = alpha);
            let vb = format!("(r-{b}*cos(theta))/(r^2-2*{b}*r*cos(theta)+{b}^2)", b = beta);
            let wa = format!("{a}*sin(theta)/(r^2-2*{a}*r*cos(theta)+{a}^2)", a = alpha);
            let wb = format!("{b}*sin(theta)/(r^2-2*{b}*r*cos(theta)+{b}^2)", b = beta);
            ScenarioConfig {
                name: "conjecture-offcenter".into(),
                field: FieldSpec::Expression {
                    v_theta: format!("{va}-{vb}"),
                    v_r: Some(format!("-({wa}-{wb})")),
                    domain: crate::flows::DomainSpec {
                        a: 0.0,
                        b: json!(1.0),
                        trunc_inner: Some(0.02),
                        trunc_outer: Some(1.0),
                    },
                },
                grid: None,
                // no circularity here: the stream function diverges at the
                // interior vortex, so grid reconstruction is ill-posed
                checks: checks(&["divergence", "tangency", "speed_range", "stagnation"]),
            }
        },
    },
];

pub fn builtin_scenarios() -> &'static [BuiltinScenario] {
    BUILTINS
}

pub fn builtin(name: &str) -> Result<ScenarioConfig, ScenarioError> {
    BUILTINS
        .iter()
        .find(|s| s.name == name)
        .map(|s| (s.build)())
        .ok_or_else(|| ScenarioError::UnknownScenario {
            name: name.to_string(),
            available: BUILTINS.iter().map(|s| s.name).collect(),
        })
}

/// Domain archetypes the audit matches hypotheses against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainType {
    BoundedAnnulus,
    Exterior,
    PuncturedDisk,
    PuncturedPlane,
}

fn domain_type(dom: &crate::geometry::AnnularDomain) -> DomainType {
    match (dom.is_punctured(), dom.is_unbounded()) {
        (false, false) => DomainType::BoundedAnnulus,
        (false, true) => DomainType::Exterior,
        (true, false) => DomainType::PuncturedDisk,
        (true, true) => DomainType::PuncturedPlane,
    }
}

const CONSISTENT: &str = "CONSISTENT";
const INCONSISTENT: &str = "INCONSISTENT";
const CONFIRMED: &str = "CONFIRMED-NUMERICALLY";
const NOT_CIRCULAR: &str = "NO";
const SKIPPED: &str = "SKIPPED";

/// Descriptive audit: run the stagnation, decay, circularity, and transport
/// diagnostics and label which rigidity hypothesis set the data are
/// consistent with. Labels are observations at finite radius, never proofs.
pub fn audit_flow(field: &VectorField) -> Result<Report, ScenarioError> {
    let env = Environment::default();
    let grid = GridSpec {
        n_r: env.grid_n_r,
        n_theta: env.grid_n_theta,
    };
    let ctx = CheckContext::new(field, grid, &env);
    let dom = field.domain();
    let dtype = domain_type(dom);
    let mut records: Vec<CheckRecord> = Vec::new();

    // degenerate-field guard: an identically tiny field skips the audits
    let speeds: Vec<f64> = ctx.band_points(512).iter().map(|x| field.speed(*x)).collect();
    let max_speed = speeds.iter().cloned().fold(0.0, f64::max);
    if max_speed <= 1e-300 {
        records.push(CheckRecord {
            check: "degenerate".into(),
            inputs: json!({}),
            values: json!({
                "max_speed": max_speed,
                "note": "field is identically zero: stagnation everywhere, symmetry checks skipped",
                "hypotheses": INCONSISTENT,
                "circular": SKIPPED,
            }),
            threshold: None,
            verdict: CheckVerdict::Info,
            message: None,
        });
        return Ok(Report {
            schema: REPORT_SCHEMA.to_string(),
            scenario: format!("audit:{}", field.name()),
            field: FieldSpec::Catalog {
                name: field.name().to_string(),
                params: Default::default(),
                domain: Some(crate::flows::DomainSpec::from_domain(dom)),
            },
            environment: env,
            records,
        });
    }

    let tol_speed = default_tol_speed(field, dom);
    let stag = classify_stagnation(field, dom, tol_speed);
    let stagnation_ok = matches!(
        stag.classification,
        StagnationClass::Empty
            | StagnationClass::ProperSubsetInner
            | StagnationClass::ProperSubsetOuter
    ) && !(stag.boundary_inner_fraction > 0.0 && stag.boundary_outer_fraction > 0.0);
    records.push(CheckRecord {
        check: "stagnation".into(),
        inputs: json!({ "tol_speed": tol_speed }),
        values: serde_json::to_value(&stag).unwrap(),
        threshold: None,
        verdict: CheckVerdict::Info,
        message: None,
    });

    let decay = radial_decay_report(field, &decay_radii(&ctx)).map_err(|e| {
        ScenarioError::Field(FlowError::BuildFailed {
            name: field.name().to_string(),
            message: e.to_string(),
        })
    })?;
    let outer_ok = decay.outer_decay == TrendVerdict::Pass;
    let inner_ok = decay.inner_flux_decay == TrendVerdict::Pass;
    records.push(CheckRecord {
        check: "radial_decay".into(),
        inputs: json!({}),
        values: serde_json::to_value(&decay).unwrap(),
        threshold: None,
        verdict: CheckVerdict::Info,
        message: None,
    });

    let mut transport_worst: f64 = 0.0;
    for x in ctx.band_points(256) {
        if let Ok(t) = vorticity_transport_at(field, x) {
            transport_worst = transport_worst.max(t.abs());
        }
    }
    records.push(CheckRecord {
        check: "vorticity_transport".into(),
        inputs: json!({ "points": 256 }),
        values: json!({ "max_abs_transport": transport_worst }),
        threshold: None,
        verdict: CheckVerdict::Info,
        message: None,
    });

    let (hypothesis_label, hypotheses): (String, Value) = match dtype {
        DomainType::BoundedAnnulus => {
            let label = if stagnation_ok { CONSISTENT } else { INCONSISTENT };
            (
                label.to_string(),
                json!({ "stagnation_proper_subset": label }),
            )
        }
        DomainType::Exterior => {
            let inf_speed = (0..720)
                .map(|k| {
                    field.speed(Point::from_polar(
                        dom.trunc_outer,
                        std::f64::consts::TAU * k as f64 / 720.0,
                    ))
                })
                .fold(f64::INFINITY, f64::min);
            let nondegenerate = inf_speed > 1e-8 * max_speed;
            let all = stagnation_ok && outer_ok && nondegenerate;
            (
                (if all { CONSISTENT } else { INCONSISTENT }).to_string(),
                json!({
                    "stagnation_proper_subset": if stagnation_ok { CONSISTENT } else { INCONSISTENT },
                    "outer_radial_decay": if outer_ok { CONSISTENT } else { INCONSISTENT },
                    "speed_bounded_below_at_truncation": if nondegenerate { CONSISTENT } else { INCONSISTENT },
                }),
            )
        }
        DomainType::PuncturedDisk => {
            let all = stagnation_ok && inner_ok;
            (
                (if all { CONSISTENT } else { INCONSISTENT }).to_string(),
                json!({
                    "stagnation_proper_subset": if stagnation_ok { CONSISTENT } else { INCONSISTENT },
                    "inner_flux_decay": if inner_ok { CONSISTENT } else { INCONSISTENT },
                }),
            )
        }
        DomainType::PuncturedPlane => {
            let all = stagnation_ok && inner_ok && outer_ok;
            (
                (if all { CONSISTENT } else { INCONSISTENT }).to_string(),
                json!({
                    "no_stagnation_in_band": if stagnation_ok { CONSISTENT } else { INCONSISTENT },
                    "outer_radial_decay": if outer_ok { CONSISTENT } else { INCONSISTENT },
                    "inner_flux_decay": if inner_ok { CONSISTENT } else { INCONSISTENT },
                }),
            )
        }
    };

    let circular_label = match ctx.stream_grid() {
        Ok(sg) => {
            let score = radial_deviation(sg);
            records.push(CheckRecord {
                check: "circularity".into(),
                inputs: json!({}),
                values: json!({ "radial_deviation": score }),
                threshold: None,
                verdict: CheckVerdict::Info,
                message: None,
            });
            if score <= 1e-6 {
                CONFIRMED
            } else {
                NOT_CIRCULAR
            }
        }
        Err(e) => {
            records.push(CheckRecord {
                check: "circularity".into(),
                inputs: json!({}),
                values: json!({}),
                threshold: None,
                verdict: CheckVerdict::Info,
                message: Some(e),
            });
            SKIPPED
        }
    };

    records.push(CheckRecord {
        check: "consistency".into(),
        inputs: json!({ "domain_type": dtype }),
        values: json!({
            "hypotheses": hypotheses,
            "hypothesis_set": hypothesis_label,
            "circular_conclusion": circular_label,
        }),
        threshold: None,
        verdict: CheckVerdict::Info,
        message: None,
    });

    Ok(Report {
        schema: REPORT_SCHEMA.to_string(),
        scenario: format!("audit:{}", field.name()),
        field: FieldSpec::Catalog {
            name: field.name().to_string(),
            params: Default::default(),
            domain: Some(crate::flows::DomainSpec::from_domain(dom)),
        },
        environment: env,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn th1_circular_passes_everything() {
        let config = builtin("th1-circular").unwrap();
        let report = run_scenario(&config).unwrap();
        assert!(!report.any_fail(), "report: {}", report.to_json());
        assert_eq!(report.schema, "annulus-lab/1");
    }

    #[test]
    fn th2_counterexample_fails_decay_and_circularity() {
        let report = run_scenario(&builtin("th2-counterexample").unwrap()).unwrap();
        let verdict = |name: &str| {
            report
                .records
                .iter()
                .find(|r| r.check == name)
                .unwrap()
                .verdict
        };
        assert_eq!(verdict("euler_residual"), CheckVerdict::Pass);
        assert_eq!(verdict("divergence"), CheckVerdict::Pass);
        assert_eq!(verdict("tangency"), CheckVerdict::Pass);
        assert_eq!(verdict("radial_decay"), CheckVerdict::Fail);
        assert_eq!(verdict("circularity"), CheckVerdict::Fail);
        assert!(report.any_fail());
    }

    #[test]
    fn unknown_check_rejected_before_running() {
        let config = r#"{
            "name": "bad",
            "field": {"kind": "catalog", "name": "rigid"},
            "checks": [{"check": "divergence"}, {"check": "nonsense"}]
        }"#;
        match run_scenario_json(config) {
            Err(ScenarioError::UnknownCheck { name, .. }) => assert_eq!(name, "nonsense"),
            other => panic!("expected UnknownCheck, got {other:?}"),
        }
    }

    #[test]
    fn parse_error_carries_position() {
        match run_scenario_json("{ not json") {
            Err(ScenarioError::ConfigParse { line, column, .. }) => {
                assert_eq!(line, 1);
                assert!(column > 0);
            }
            other => panic!("expected ConfigParse, got {other:?}"),
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let config = builtin("th1-circular").unwrap();
        let a = run_scenario(&config).unwrap().to_json();
        let b = run_scenario(&config).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn audit_log_flow_is_consistent_and_circular() {
        let field = crate::flows::catalog::catalog("log", &Default::default()).unwrap();
        let report = audit_flow(&field).unwrap();
        let consistency = report
            .records
            .iter()
            .find(|r| r.check == "consistency")
            .unwrap();
        assert_eq!(consistency.values["hypothesis_set"], CONSISTENT);
        assert_eq!(consistency.values["circular_conclusion"], CONFIRMED);
    }

    #[test]
    fn audit_punct_counterexample_flags_flux() {
        let mut params = BTreeMap::new();
        params.insert("b".to_string(), 1.0);
        let field = crate::flows::catalog::catalog("punct_counterexample", &params).unwrap();
        let report = audit_flow(&field).unwrap();
        let consistency = report
            .records
            .iter()
            .find(|r| r.check == "consistency")
            .unwrap();
        assert_eq!(
            consistency.values["hypotheses"]["stagnation_proper_subset"],
            CONSISTENT
        );
        assert_eq!(
            consistency.values["hypotheses"]["inner_flux_decay"],
            INCONSISTENT
        );
        assert_eq!(consistency.values["circular_conclusion"], NOT_CIRCULAR);
    }

    #[test]
    fn audit_zero_field_degenerates_gracefully() {
        let mut params = BTreeMap::new();
        params.insert("c".to_string(), 0.0);
        let field = crate::flows::catalog::catalog("circular", &params).unwrap();
        let report = audit_flow(&field).unwrap();
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.records[0].check, "degenerate");
        assert!(!report.any_fail());
    }
}
