//! Velocity fields over annular domains.
//!
//! Every concrete flow (catalog entry, parsed expression, grid-sampled copy)
//! sits behind the [`FlowModel`] trait, which reports velocity and optional
//! analytic data in polar components. [`VectorField`] wraps a model with its
//! domain and provides the Cartesian interface plus finite-difference
//! fallbacks for anything the model does not supply analytically.

pub mod catalog;
pub mod expr;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{AnnularDomain, GeometryError, Point, PolarGrid};
use crate::interp::{CubicHermite, InterpError};
use crate::trace::VorticityProfile;
use expr::{EvalError, Expr, ParseError, VarSet};

/// Velocity in polar components at a point `(r, theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarVelocity {
    pub v_r: f64,
    pub v_theta: f64,
}

/// Partial derivatives of the polar velocity components with respect to
/// `r` and `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarDerivs {
    pub dvr_dr: f64,
    pub dvr_dtheta: f64,
    pub dvtheta_dr: f64,
    pub dvtheta_dtheta: f64,
}

/// A flow model: the strategy interface all catalog entries, expression
/// fields, and grid-sampled fields implement. Models work in polar
/// components; non-finite values signal an evaluation failure and are turned
/// into errors by the checked [`VectorField`] operations.
pub trait FlowModel: Send + Sync {
    fn name(&self) -> &str;

    fn velocity(&self, r: f64, theta: f64) -> PolarVelocity;

    /// Analytic polar derivatives, when available. `None` means derivative
    /// queries fall back to central differences.
    fn derivs(&self, _r: f64, _theta: f64) -> Option<PolarDerivs> {
        None
    }

    /// Pressure, when the model carries one (defined up to a constant).
    fn pressure(&self, _r: f64, _theta: f64) -> Option<f64> {
        None
    }

    /// Analytic pressure gradient `(dp/dr, dp/dtheta)`, when available.
    fn pressure_gradient(&self, _r: f64, _theta: f64) -> Option<(f64, f64)> {
        None
    }

    /// Stream function value, when known in closed form (up to a constant).
    fn stream(&self, _r: f64, _theta: f64) -> Option<f64> {
        None
    }
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("unknown catalog flow `{name}`; available: {available:?}")]
    UnknownCatalog {
        name: String,
        available: Vec<&'static str>,
    },
    #[error("catalog flow `{name}` needs parameter `{param}`")]
    MissingParameter { name: String, param: &'static str },
    #[error("catalog flow `{name}`: parameter `{param}` = {value} is invalid ({reason})")]
    BadParameter {
        name: String,
        param: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("building catalog flow `{name}` failed: {message}")]
    BuildFailed { name: String, message: String },
    #[error("point at radius {radius:.6e} outside the truncated band [{lo:.6e}, {hi:.6e}]")]
    OutsideBand { radius: f64, lo: f64, hi: f64 },
    #[error("field `{name}` has no pressure attached; derive one with bernoulli_pressure from a vorticity profile")]
    MissingPressure { name: String },
    #[error("field evaluation returned a non-finite value at ({x:.6e}, {y:.6e})")]
    NonFiniteVelocity { x: f64, y: f64 },
    #[error("stream value {u:.6e} outside the tabulated profile range [{lo:.6e}, {hi:.6e}]")]
    ProfileRange { u: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Interp(#[from] InterpError),
}

/// How a field was constructed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FieldKind {
    Catalog {
        name: String,
        params: BTreeMap<String, f64>,
    },
    Expression,
    GridSampled,
}

/// An evaluatable planar velocity field on an annular domain.
#[derive(Clone)]
pub struct VectorField {
    model: Arc<dyn FlowModel>,
    domain: AnnularDomain,
    kind: FieldKind,
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorField")
            .field("name", &self.model.name())
            .field("kind", &self.kind)
            .field("domain", &self.domain)
            .finish()
    }
}

/// Finite-difference step for derivative fallbacks: `max(1e-5, 1e-4 |x|)`.
pub fn fd_step(r: f64) -> f64 {
    (1e-4 * r).max(1e-5)
}

fn fd4(values: [f64; 4], h: f64) -> f64 {
    // values at x-2h, x-h, x+h, x+2h
    (values[0] - 8.0 * values[1] + 8.0 * values[2] - values[3]) / (12.0 * h)
}

impl VectorField {
    pub fn new(model: Arc<dyn FlowModel>, domain: AnnularDomain, kind: FieldKind) -> VectorField {
        VectorField {
            model,
            domain,
            kind,
        }
    }

    pub fn domain(&self) -> &AnnularDomain {
        &self.domain
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn name(&self) -> &str {
        self.model.name()
    }

    /// Same field on a different truncation band (true radii unchanged).
    pub fn with_truncation(&self, ti: f64, to: f64) -> Result<VectorField, FlowError> {
        Ok(VectorField {
            model: Arc::clone(&self.model),
            domain: self.domain.with_truncation(ti, to)?,
            kind: self.kind.clone(),
        })
    }

    /// Cartesian velocity. Components may be non-finite if the underlying
    /// model failed to evaluate; checked operations report that as an error.
    pub fn velocity(&self, x: Point) -> Point {
        let r = x.norm();
        let theta = x.angle();
        let v = self.model.velocity(r, theta);
        polar_to_cartesian(v, theta)
    }

    pub fn velocity_checked(&self, x: Point) -> Result<Point, FlowError> {
        let v = self.velocity(x);
        if v.x.is_finite() && v.y.is_finite() {
            Ok(v)
        } else {
            Err(FlowError::NonFiniteVelocity { x: x.x, y: x.y })
        }
    }

    pub fn speed(&self, x: Point) -> f64 {
        self.velocity(x).norm()
    }

    /// Radial velocity component `v . e_r`.
    pub fn radial_component(&self, x: Point) -> f64 {
        self.model.velocity(x.norm(), x.angle()).v_r
    }

    /// Angular velocity component `v . e_theta`.
    pub fn angular_component(&self, x: Point) -> f64 {
        self.model.velocity(x.norm(), x.angle()).v_theta
    }

    /// Stream function gradient `grad u = (v2, -v1)`.
    pub fn stream_gradient(&self, x: Point) -> Point {
        let v = self.velocity(x);
        Point::new(v.y, -v.x)
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.model.derivs(self.probe_radius(), 0.0).is_some()
    }

    pub fn has_pressure(&self) -> bool {
        self.model
            .pressure(self.probe_radius(), 0.0)
            .is_some_and(|p| p.is_finite())
    }

    /// Stream function value if the model knows one in closed form.
    pub fn stream_at(&self, x: Point) -> Option<f64> {
        self.model.stream(x.norm(), x.angle())
    }

    pub fn pressure_at(&self, x: Point) -> Option<f64> {
        self.model.pressure(x.norm(), x.angle())
    }

    fn probe_radius(&self) -> f64 {
        0.5 * (self.domain.trunc_inner + self.domain.trunc_outer)
    }

    fn check_band(&self, x: Point, fd_margin: bool) -> Result<(), FlowError> {
        let r = x.norm();
        let (lo, hi) = (self.domain.trunc_inner, self.domain.trunc_outer);
        let margin = if fd_margin { 2.0 * fd_step(r) } else { 0.0 };
        // allow a hair of roundoff at the band edges
        let slack = 1e-12 * hi;
        if r - margin < lo - slack || r + margin > hi + slack {
            return Err(FlowError::OutsideBand { radius: r, lo, hi });
        }
        Ok(())
    }

    /// Cartesian velocity jacobian `J[i][j] = dv_i/dx_j`: analytic when the
    /// model provides polar derivatives, else 4th-order central differences.
    pub fn jacobian(&self, x: Point) -> Result<[[f64; 2]; 2], FlowError> {
        let r = x.norm();
        let theta = x.angle();
        if let Some(d) = self.model.derivs(r, theta) {
            let v = self.model.velocity(r, theta);
            return Ok(polar_jacobian_to_cartesian(v, d, r, theta));
        }
        self.check_band(x, true)?;
        let h = fd_step(r);
        let mut j = [[0.0; 2]; 2];
        for (axis, e) in [Point::new(1.0, 0.0), Point::new(0.0, 1.0)]
            .into_iter()
            .enumerate()
        {
            let stencil: Vec<Point> = [-2.0, -1.0, 1.0, 2.0]
                .iter()
                .map(|&s| self.velocity_checked(x + e.scale(s * h)))
                .collect::<Result<_, _>>()?;
            j[0][axis] = fd4([stencil[0].x, stencil[1].x, stencil[2].x, stencil[3].x], h);
            j[1][axis] = fd4([stencil[0].y, stencil[1].y, stencil[2].y, stencil[3].y], h);
        }
        Ok(j)
    }
}

fn polar_to_cartesian(v: PolarVelocity, theta: f64) -> Point {
    let (s, c) = theta.sin_cos();
    Point::new(v.v_r * c - v.v_theta * s, v.v_r * s + v.v_theta * c)
}

fn polar_jacobian_to_cartesian(
    v: PolarVelocity,
    d: PolarDerivs,
    r: f64,
    theta: f64,
) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    // Cartesian components as functions of (r, theta)
    let dv1_dr = d.dvr_dr * c - d.dvtheta_dr * s;
    let dv1_dth = d.dvr_dtheta * c - v.v_r * s - d.dvtheta_dtheta * s - v.v_theta * c;
    let dv2_dr = d.dvr_dr * s + d.dvtheta_dr * c;
    let dv2_dth = d.dvr_dtheta * s + v.v_r * c + d.dvtheta_dtheta * c - v.v_theta * s;
    // chain rule through r(x), theta(x)
    [
        [dv1_dr * c - dv1_dth * s / r, dv1_dr * s + dv1_dth * c / r],
        [dv2_dr * c - dv2_dth * s / r, dv2_dr * s + dv2_dth * c / r],
    ]
}

/// Scalar curl `dv2/dx1 - dv1/dx2` at `x`.
pub fn vorticity_at(field: &VectorField, x: Point) -> Result<f64, FlowError> {
    field.check_band(x, !field.has_analytic_jacobian())?;
    let j = field.jacobian(x)?;
    Ok(j[1][0] - j[0][1])
}

/// Divergence `dv1/dx1 + dv2/dx2` at `x`.
pub fn divergence_at(field: &VectorField, x: Point) -> Result<f64, FlowError> {
    field.check_band(x, !field.has_analytic_jacobian())?;
    let j = field.jacobian(x)?;
    Ok(j[0][0] + j[1][1])
}

/// Steady momentum residual `(v . grad) v + grad p` at `x`. Vanishes where
/// the field and its attached pressure solve the steady momentum balance.
pub fn euler_residual(field: &VectorField, x: Point) -> Result<Point, FlowError> {
    if !field.has_pressure() {
        return Err(FlowError::MissingPressure {
            name: field.name().to_string(),
        });
    }
    field.check_band(x, true)?;
    let v = field.velocity_checked(x)?;
    let j = field.jacobian(x)?;
    let advect = Point::new(
        v.x * j[0][0] + v.y * j[0][1],
        v.x * j[1][0] + v.y * j[1][1],
    );
    let grad_p = pressure_gradient(field, x)?;
    Ok(advect + grad_p)
}

fn pressure_gradient(field: &VectorField, x: Point) -> Result<Point, FlowError> {
    let r = x.norm();
    let theta = x.angle();
    if let Some((dp_dr, dp_dth)) = field.model.pressure_gradient(r, theta) {
        let (s, c) = theta.sin_cos();
        // grad p = dp_dr e_r + (dp_dtheta / r) e_theta
        return Ok(Point::new(
            dp_dr * c - dp_dth * s / r,
            dp_dr * s + dp_dth * c / r,
        ));
    }
    let h = fd_step(r);
    let mut grad = [0.0; 2];
    for (axis, e) in [Point::new(1.0, 0.0), Point::new(0.0, 1.0)]
        .into_iter()
        .enumerate()
    {
        let p = |s: f64| -> Result<f64, FlowError> {
            let y = x + e.scale(s * h);
            field
                .model
                .pressure(y.norm(), y.angle())
                .filter(|v| v.is_finite())
                .ok_or_else(|| FlowError::MissingPressure {
                    name: field.name().to_string(),
                })
        };
        grad[axis] = fd4([p(-2.0)?, p(-1.0)?, p(1.0)?, p(2.0)?], h);
    }
    Ok(Point::new(grad[0], grad[1]))
}

/// Advective derivative of the vorticity, `v . grad omega`, at `x`.
/// Central-differences the (possibly analytic) vorticity with a step ten
/// times the base one: omega is itself a derivative, so its rounding noise
/// needs a wider stencil before the truncation error matters.
pub fn vorticity_transport_at(field: &VectorField, x: Point) -> Result<f64, FlowError> {
    let v = field.velocity_checked(x)?;
    let r = x.norm();
    let h = 10.0 * fd_step(r);
    let (lo, hi) = (field.domain.trunc_inner, field.domain.trunc_outer);
    if r - 2.0 * h < lo - 1e-12 * hi || r + 2.0 * h > hi + 1e-12 * hi {
        return Err(FlowError::OutsideBand { radius: r, lo, hi });
    }
    let mut grad = [0.0; 2];
    for (axis, e) in [Point::new(1.0, 0.0), Point::new(0.0, 1.0)]
        .into_iter()
        .enumerate()
    {
        let w = |s: f64| -> Result<f64, FlowError> {
            let y = x + e.scale(s * h);
            let j = field.jacobian(y)?;
            Ok(j[1][0] - j[0][1])
        };
        grad[axis] = fd4([w(-2.0)?, w(-1.0)?, w(1.0)?, w(2.0)?], h);
    }
    Ok(v.x * grad[0] + v.y * grad[1])
}

/// Bernoulli pressure `-speed^2/2 - F(u)` with `F` the antiderivative carried
/// by the vorticity profile (anchored to zero at the low end of its range).
pub fn bernoulli_pressure(
    u_value: f64,
    speed: f64,
    profile: &VorticityProfile,
) -> Result<f64, FlowError> {
    let (lo, hi) = profile.range();
    if u_value < lo || u_value > hi {
        return Err(FlowError::ProfileRange { u: u_value, lo, hi });
    }
    Ok(-0.5 * speed * speed - profile.antiderivative(u_value))
}

/// Sample a field onto a polar grid; the copy interpolates bilinearly in
/// `(r, theta)` with periodic wrap in `theta` and differentiates by finite
/// differences.
pub fn sample_on_grid(field: &VectorField, grid: &PolarGrid) -> VectorField {
    let (n_r, n_th) = (grid.n_r(), grid.n_theta());
    let mut v_r = vec![0.0; n_r * n_th];
    let mut v_theta = vec![0.0; n_r * n_th];
    for i in 0..n_r {
        for j in 0..n_th {
            let v = field.model.velocity(grid.radii[i], grid.angles[j]);
            v_r[i * n_th + j] = v.v_r;
            v_theta[i * n_th + j] = v.v_theta;
        }
    }
    let model = GridSampledModel {
        name: format!("{}(grid)", field.name()),
        grid: grid.clone(),
        v_r,
        v_theta,
    };
    VectorField::new(Arc::new(model), grid.domain, FieldKind::GridSampled)
}

struct GridSampledModel {
    name: String,
    grid: PolarGrid,
    v_r: Vec<f64>,
    v_theta: Vec<f64>,
}

impl GridSampledModel {
    fn interp(&self, values: &[f64], r: f64, theta: f64) -> f64 {
        let g = &self.grid;
        let n_th = g.n_theta();
        if r < g.radii[0] - 1e-12 * g.radii[0] || r > *g.radii.last().unwrap() * (1.0 + 1e-12) {
            return f64::NAN;
        }
        let i = g.radial_cell(r.clamp(g.radii[0], *g.radii.last().unwrap()));
        let tr = ((r - g.radii[i]) / (g.radii[i + 1] - g.radii[i])).clamp(0.0, 1.0);
        let dth = g.angular_step();
        let t = (theta.rem_euclid(std::f64::consts::TAU)) / dth;
        let j = (t.floor() as usize).min(n_th - 1);
        let tt = t - j as f64;
        let j1 = (j + 1) % n_th;
        let f = |ii: usize, jj: usize| values[ii * n_th + jj];
        let lo = f(i, j) * (1.0 - tt) + f(i, j1) * tt;
        let hi = f(i + 1, j) * (1.0 - tt) + f(i + 1, j1) * tt;
        lo * (1.0 - tr) + hi * tr
    }
}

impl FlowModel for GridSampledModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn velocity(&self, r: f64, theta: f64) -> PolarVelocity {
        PolarVelocity {
            v_r: self.interp(&self.v_r, r, theta),
            v_theta: self.interp(&self.v_theta, r, theta),
        }
    }
}

/// Radial profile `V(r)`: a parsed closed form (with symbolic derivative) or
/// tabulated samples (monotone-cubic interpolated).
#[derive(Clone)]
pub struct RadialProfile {
    repr: ProfileRepr,
}

#[derive(Clone)]
enum ProfileRepr {
    Expression { expr: Expr, deriv: Expr },
    Sampled { v: Arc<CubicHermite> },
}

/// Parse a radial profile expression over the variable `r`.
pub fn parse_profile(src: &str) -> Result<RadialProfile, ParseError> {
    let expr = expr::parse_expr(src, VarSet::RadiusOnly)?;
    let deriv = expr.derivative_r();
    Ok(RadialProfile {
        repr: ProfileRepr::Expression { expr, deriv },
    })
}

/// Sign pattern of a profile over a radial band.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SignReport {
    pub min_abs: f64,
    pub max_abs: f64,
    pub sign_changes: usize,
    pub constant_strict_sign: bool,
}

impl RadialProfile {
    pub fn from_samples(r: Vec<f64>, v: Vec<f64>) -> Result<RadialProfile, InterpError> {
        Ok(RadialProfile {
            repr: ProfileRepr::Sampled {
                v: Arc::new(CubicHermite::pchip(r, v)?),
            },
        })
    }

    pub fn from_samples_with_derivs(
        r: Vec<f64>,
        v: Vec<f64>,
        dv: Vec<f64>,
    ) -> Result<RadialProfile, InterpError> {
        Ok(RadialProfile {
            repr: ProfileRepr::Sampled {
                v: Arc::new(CubicHermite::with_slopes(r, v, dv)?),
            },
        })
    }

    pub fn eval(&self, r: f64) -> Result<f64, FlowError> {
        match &self.repr {
            ProfileRepr::Expression { expr, .. } => Ok(expr.eval(r, 0.0)?),
            ProfileRepr::Sampled { v } => Ok(v.eval(r)?),
        }
    }

    pub fn deriv(&self, r: f64) -> Result<f64, FlowError> {
        match &self.repr {
            ProfileRepr::Expression { deriv, .. } => Ok(deriv.eval(r, 0.0)?),
            ProfileRepr::Sampled { v } => Ok(v.deriv(r)?),
        }
    }

    pub fn has_analytic_derivative(&self) -> bool {
        matches!(self.repr, ProfileRepr::Expression { .. })
    }

    /// Sample the band and report the sign pattern ("constant strict sign"
    /// means `min |V| > 0` with no sign change).
    pub fn sign_report(&self, lo: f64, hi: f64, n: usize) -> Result<SignReport, FlowError> {
        let mut min_abs = f64::INFINITY;
        let mut max_abs: f64 = 0.0;
        let mut sign_changes = 0;
        let mut prev: Option<f64> = None;
        for k in 0..n {
            let r = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let v = self.eval(r)?;
            min_abs = min_abs.min(v.abs());
            max_abs = max_abs.max(v.abs());
            if let Some(p) = prev {
                if p != 0.0 && v != 0.0 && p.signum() != v.signum() {
                    sign_changes += 1;
                }
            }
            prev = Some(v);
        }
        Ok(SignReport {
            min_abs,
            max_abs,
            sign_changes,
            constant_strict_sign: min_abs > 0.0 && sign_changes == 0,
        })
    }
}

/// JSON field definition: either a catalog entry or a pair of polar component
/// expressions (`v_theta`, optional `v_r`) over `r` and `theta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Catalog {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<DomainSpec>,
    },
    Expression {
        v_theta: String,
        #[serde(default)]
        v_r: Option<String>,
        domain: DomainSpec,
    },
}

/// JSON domain description; `b` may be the string `"inf"` or a number.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSpec {
    pub a: f64,
    pub b: serde_json::Value,
    #[serde(default)]
    pub trunc_inner: Option<f64>,
    #[serde(default)]
    pub trunc_outer: Option<f64>,
}

impl DomainSpec {
    pub fn build(&self) -> Result<AnnularDomain, FlowError> {
        let b = match &self.b {
            serde_json::Value::Number(n) => n.as_f64().unwrap_or(f64::NAN),
            serde_json::Value::String(s) if s == "inf" || s == "infinity" => f64::INFINITY,
            _ => f64::NAN,
        };
        let dom = crate::geometry::make_annulus(self.a, b, None)?;
        let ti = self.trunc_inner.unwrap_or(dom.trunc_inner);
        let to = self.trunc_outer.unwrap_or(dom.trunc_outer);
        Ok(dom.with_truncation(ti, to)?)
    }

    pub fn from_domain(d: &AnnularDomain) -> DomainSpec {
        DomainSpec {
            a: d.inner_radius,
            b: if d.is_unbounded() {
                serde_json::Value::String("inf".into())
            } else {
                serde_json::json!(d.outer_radius)
            },
            trunc_inner: Some(d.trunc_inner),
            trunc_outer: Some(d.trunc_outer),
        }
    }
}

impl FieldSpec {
    pub fn build(&self) -> Result<VectorField, FlowError> {
        match self {
            FieldSpec::Catalog {
                name,
                params,
                domain,
            } => {
                let field = catalog::catalog(name, params)?;
                match domain {
                    Some(spec) => {
                        let dom = spec.build()?;
                        Ok(VectorField::new(field.model, dom, field.kind))
                    }
                    None => Ok(field),
                }
            }
            FieldSpec::Expression { v_theta, v_r, domain } => {
                let dom = domain.build()?;
                build_expression_field(v_theta, v_r.as_deref(), dom)
            }
        }
    }
}

/// Field from polar component expressions. Derivatives are symbolic, so the
/// jacobian is analytic.
pub fn build_expression_field(
    v_theta: &str,
    v_r: Option<&str>,
    domain: AnnularDomain,
) -> Result<VectorField, FlowError> {
    let vt = expr::parse_expr(v_theta, VarSet::RadiusAngle)?;
    let vr = match v_r {
        Some(src) => expr::parse_expr(src, VarSet::RadiusAngle)?,
        None => Expr::Num(0.0),
    };
    let model = ExpressionModel {
        name: match v_r {
            Some(vr_src) => format!("expr[v_theta={v_theta}, v_r={vr_src}]"),
            None => format!("expr[v_theta={v_theta}]"),
        },
        dvt_dr: vt.derivative_r(),
        dvt_dth: vt.derivative_theta(),
        dvr_dr: vr.derivative_r(),
        dvr_dth: vr.derivative_theta(),
        v_theta: vt,
        v_r: vr,
    };
    let field = VectorField::new(Arc::new(model), domain, FieldKind::Expression);
    audit_finiteness(&field)?;
    Ok(field)
}

/// Spot-check that the field evaluates finite over the truncated band.
fn audit_finiteness(field: &VectorField) -> Result<(), FlowError> {
    let dom = field.domain();
    for i in 0..8 {
        let r = dom.trunc_inner + (dom.trunc_outer - dom.trunc_inner) * i as f64 / 7.0;
        for j in 0..8 {
            let theta = std::f64::consts::TAU * j as f64 / 8.0;
            field.velocity_checked(Point::from_polar(r, theta))?;
        }
    }
    Ok(())
}

struct ExpressionModel {
    name: String,
    v_theta: Expr,
    v_r: Expr,
    dvt_dr: Expr,
    dvt_dth: Expr,
    dvr_dr: Expr,
    dvr_dth: Expr,
}

impl FlowModel for ExpressionModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn velocity(&self, r: f64, theta: f64) -> PolarVelocity {
        PolarVelocity {
            v_r: self.v_r.eval(r, theta).unwrap_or(f64::NAN),
            v_theta: self.v_theta.eval(r, theta).unwrap_or(f64::NAN),
        }
    }

    fn derivs(&self, r: f64, theta: f64) -> Option<PolarDerivs> {
        Some(PolarDerivs {
            dvr_dr: self.dvr_dr.eval(r, theta).ok()?,
            dvr_dtheta: self.dvr_dth.eval(r, theta).ok()?,
            dvtheta_dr: self.dvt_dr.eval(r, theta).ok()?,
            dvtheta_dtheta: self.dvt_dth.eval(r, theta).ok()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_annulus;

    fn rigid() -> VectorField {
        catalog::catalog("rigid", &BTreeMap::new()).unwrap()
    }

    #[test]
    fn rigid_velocity_and_vorticity() {
        let f = rigid();
        let v = f.velocity(Point::new(1.0, 0.0));
        assert!((v.x - 0.0).abs() < 1e-15 && (v.y - 1.0).abs() < 1e-15);
        let w = vorticity_at(&f, Point::new(1.3, 0.4)).unwrap();
        assert!((w - 2.0).abs() < 1e-12);
        let d = divergence_at(&f, Point::new(1.3, 0.4)).unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn euler_residual_vanishes_for_rigid() {
        let f = rigid();
        for k in 0..20 {
            let r = 1.05 + 0.9 * k as f64 / 19.0;
            let x = Point::from_polar(r, 0.37 * k as f64);
            let res = euler_residual(&f, x).unwrap();
            assert!(res.norm() <= 1e-10, "residual {} at {:?}", res.norm(), x);
        }
    }

    #[test]
    fn wrong_pressure_leaves_centripetal_residual() {
        // rigid flow with pressure forced to zero: residual = centripetal term, norm |x|
        let dom = make_annulus(1.0, 2.0, None).unwrap();
        let model = catalog::CircularModel::from_parts(
            "rigid-wrong-pressure",
            |r| r,
            |_r| 1.0,
            Some(|r: f64| 0.5 * r * r),
            Some(|_r: f64| 0.0),
            Some(|_r: f64| 0.0),
        );
        let f = VectorField::new(Arc::new(model), dom, FieldKind::Expression);
        let x = Point::new(1.5, 0.0);
        let res = euler_residual(&f, x).unwrap();
        assert!((res.norm() - 1.5).abs() < 1e-9);
    }

    #[test]
    fn missing_pressure_directs_to_bernoulli() {
        let dom = make_annulus(1.0, 2.0, None).unwrap();
        let f = build_expression_field("r", None, dom).unwrap();
        match euler_residual(&f, Point::new(1.5, 0.0)) {
            Err(FlowError::MissingPressure { .. }) => {}
            other => panic!("expected MissingPressure, got {other:?}"),
        }
    }

    #[test]
    fn expression_field_divergence() {
        // v = (x1, x2) = r e_r: divergence 2
        let dom = make_annulus(1.0, 2.0, None).unwrap();
        let f = build_expression_field("0", Some("r"), dom).unwrap();
        let d = divergence_at(&f, Point::new(1.5, 0.3)).unwrap();
        assert!((d - 2.0).abs() < 1e-10);
    }

    #[test]
    fn grid_sampled_divergence_is_small() {
        let f = rigid();
        let grid = crate::geometry::polar_grid(f.domain(), 64, 128).unwrap();
        let fg = sample_on_grid(&f, &grid);
        let d = divergence_at(&fg, Point::new(1.5, 0.2)).unwrap();
        assert!(d.abs() < 1e-2, "grid divergence {d}");
    }

    #[test]
    fn out_of_band_reported() {
        let f = rigid();
        assert!(matches!(
            vorticity_at(&f, Point::new(5.0, 0.0)),
            Err(FlowError::OutsideBand { .. })
        ));
    }

    #[test]
    fn profile_parsing_and_derivative() {
        let p = parse_profile("1/r^2").unwrap();
        assert!((p.eval(2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(p.has_analytic_derivative());
        assert!((p.deriv(2.0).unwrap() - (-2.0 / 8.0)).abs() < 1e-12);
        let sign = p.sign_report(1.0, 2.0, 100).unwrap();
        assert!(sign.constant_strict_sign);
    }

    #[test]
    fn profile_syntax_error_position() {
        match parse_profile("r*(") {
            Err(e) => assert_eq!(e.position, 3),
            Ok(_) => panic!("expected error"),
        }
    }
}
