//! Named catalog of explicit flows, registered behind [`FlowModel`].
//!
//! Two model families cover every entry: [`CircularModel`] for flows
//! `v = V(|x|) e_theta` and [`RadialCosineModel`] for stream functions of the
//! form `u = g(r) + h(r) cos(theta)`. Entries are selected by name with a
//! `name -> scalar` parameter map, from code, config files, or the CLI.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{FieldKind, FlowError, FlowModel, PolarDerivs, PolarVelocity, VectorField};
use crate::geometry::{make_annulus, AnnularDomain};
use crate::interp::CubicHermite;
use crate::radial::{eigenpair_mode0, eigenpair_mode1};

type RadialFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Circular flow `v = V(r) e_theta` with optional closed-form stream and
/// pressure. The pressure gradient defaults to the centripetal balance
/// `p'(r) = V(r)^2 / r`.
pub struct CircularModel {
    name: String,
    v: RadialFn,
    dv: RadialFn,
    stream: Option<RadialFn>,
    pressure: Option<RadialFn>,
    dpressure: Option<RadialFn>,
}

impl CircularModel {
    pub fn new(
        name: impl Into<String>,
        v: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> CircularModel {
        CircularModel {
            name: name.into(),
            v: Box::new(v),
            dv: Box::new(dv),
            stream: None,
            pressure: None,
            dpressure: None,
        }
    }

    pub fn with_stream(mut self, u: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.stream = Some(Box::new(u));
        self
    }

    pub fn with_pressure(mut self, p: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.pressure = Some(Box::new(p));
        self
    }

    pub fn with_pressure_gradient(
        mut self,
        dp: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.dpressure = Some(Box::new(dp));
        self
    }

    /// Plain-function constructor, mostly for tests.
    pub fn from_parts(
        name: &str,
        v: fn(f64) -> f64,
        dv: fn(f64) -> f64,
        stream: Option<fn(f64) -> f64>,
        pressure: Option<fn(f64) -> f64>,
        dpressure: Option<fn(f64) -> f64>,
    ) -> CircularModel {
        CircularModel {
            name: name.to_string(),
            v: Box::new(v),
            dv: Box::new(dv),
            stream: stream.map(|f| Box::new(f) as RadialFn),
            pressure: pressure.map(|f| Box::new(f) as RadialFn),
            dpressure: dpressure.map(|f| Box::new(f) as RadialFn),
        }
    }
}

impl FlowModel for CircularModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn velocity(&self, r: f64, _theta: f64) -> PolarVelocity {
        PolarVelocity {
            v_r: 0.0,
            v_theta: (self.v)(r),
        }
    }

    fn derivs(&self, r: f64, _theta: f64) -> Option<PolarDerivs> {
        Some(PolarDerivs {
            dvr_dr: 0.0,
            dvr_dtheta: 0.0,
            dvtheta_dr: (self.dv)(r),
            dvtheta_dtheta: 0.0,
        })
    }

    fn pressure(&self, r: f64, _theta: f64) -> Option<f64> {
        self.pressure.as_ref().map(|p| p(r))
    }

    fn pressure_gradient(&self, r: f64, _theta: f64) -> Option<(f64, f64)> {
        if self.pressure.is_none() && self.dpressure.is_none() {
            return None;
        }
        let dp = match &self.dpressure {
            Some(dp) => dp(r),
            None => {
                let v = (self.v)(r);
                v * v / r
            }
        };
        Some((dp, 0.0))
    }

    fn stream(&self, r: f64, _theta: f64) -> Option<f64> {
        self.stream.as_ref().map(|u| u(r))
    }
}

/// Flow with stream function `u = g(r) + h(r) cos(theta)` and Bernoulli
/// pressure `p = -|v|^2/2 - F(u)`, `F' = f`.
pub struct RadialCosineModel {
    name: String,
    g: [RadialFn; 3],
    h: [RadialFn; 3],
    f_of_u: RadialFn,
    antiderivative: RadialFn,
}

impl RadialCosineModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        g: [RadialFn; 3],
        h: [RadialFn; 3],
        f_of_u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        antiderivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> RadialCosineModel {
        RadialCosineModel {
            name: name.into(),
            g,
            h,
            f_of_u: Box::new(f_of_u),
            antiderivative: Box::new(antiderivative),
        }
    }
}

impl FlowModel for RadialCosineModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn velocity(&self, r: f64, theta: f64) -> PolarVelocity {
        let (s, c) = theta.sin_cos();
        PolarVelocity {
            v_r: (self.h[0])(r) * s / r,
            v_theta: (self.g[1])(r) + (self.h[1])(r) * c,
        }
    }

    fn derivs(&self, r: f64, theta: f64) -> Option<PolarDerivs> {
        let (s, c) = theta.sin_cos();
        let h = (self.h[0])(r);
        let dh = (self.h[1])(r);
        Some(PolarDerivs {
            dvr_dr: (dh / r - h / (r * r)) * s,
            dvr_dtheta: h * c / r,
            dvtheta_dr: (self.g[2])(r) + (self.h[2])(r) * c,
            dvtheta_dtheta: -dh * s,
        })
    }

    fn pressure(&self, r: f64, theta: f64) -> Option<f64> {
        let v = self.velocity(r, theta);
        let u = self.stream(r, theta)?;
        Some(-0.5 * (v.v_r * v.v_r + v.v_theta * v.v_theta) - (self.antiderivative)(u))
    }

    fn pressure_gradient(&self, r: f64, theta: f64) -> Option<(f64, f64)> {
        let v = self.velocity(r, theta);
        let d = self.derivs(r, theta)?;
        let u = self.stream(r, theta)?;
        let f_u = (self.f_of_u)(u);
        // p = -|v|^2/2 - F(u); du/dr = v_theta, du/dtheta = -r v_r
        let dp_dr = -(v.v_r * d.dvr_dr + v.v_theta * d.dvtheta_dr) - f_u * v.v_theta;
        let dp_dth = -(v.v_r * d.dvr_dtheta + v.v_theta * d.dvtheta_dtheta) + f_u * r * v.v_r;
        Some((dp_dr, dp_dth))
    }

    fn stream(&self, r: f64, theta: f64) -> Option<f64> {
        Some((self.g[0])(r) + (self.h[0])(r) * theta.cos())
    }
}

fn radial_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> RadialFn {
    Box::new(f)
}

/// Parameter accepted by a catalog entry.
#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: Option<f64>,
}

/// One registered flow.
pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamSpec],
    builder: fn(&str, &Params) -> Result<VectorField, FlowError>,
}

struct Params<'a> {
    entry: &'static str,
    map: &'a BTreeMap<String, f64>,
    specs: &'static [ParamSpec],
}

impl Params<'_> {
    fn get(&self, name: &'static str) -> Result<f64, FlowError> {
        if let Some(v) = self.map.get(name) {
            return Ok(*v);
        }
        self.specs
            .iter()
            .find(|s| s.name == name)
            .and_then(|s| s.default)
            .ok_or(FlowError::MissingParameter {
                name: self.entry.to_string(),
                param: name,
            })
    }

    fn positive(&self, name: &'static str) -> Result<f64, FlowError> {
        let v = self.get(name)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(FlowError::BadParameter {
                name: self.entry.to_string(),
                param: name,
                value: v,
                reason: "must be positive and finite",
            })
        }
    }
}

const UNIT_ANNULUS: &[ParamSpec] = &[];

static ENTRIES: &[CatalogEntry] = &[
    CatalogEntry {
        name: "rigid",
        summary: "rigid rotation v = |x| e_theta on the annulus 1 < |x| < 2",
        params: UNIT_ANNULUS,
        builder: build_rigid,
    },
    CatalogEntry {
        name: "circular",
        summary: "power-law circular flow v = c |x|^k e_theta on 1 < |x| < 2",
        params: &[
            ParamSpec {
                name: "c",
                default: Some(1.0),
            },
            ParamSpec {
                name: "k",
                default: Some(1.0),
            },
        ],
        builder: build_power_law,
    },
    CatalogEntry {
        name: "log",
        summary: "v = e_theta / |x| with stream ln|x| on the punctured unit disk",
        params: UNIT_ANNULUS,
        builder: build_log,
    },
    CatalogEntry {
        name: "inverse_square",
        summary: "v = e_theta / |x|^2 with stream -1/|x| on the exterior of the unit disk",
        params: UNIT_ANNULUS,
        builder: build_inverse_square,
    },
    CatalogEntry {
        name: "quartic",
        summary: "v = -4|x|^2 x-perp with stream R^4 - |x|^4 on the disk of radius R",
        params: &[ParamSpec {
            name: "R",
            default: Some(1.0),
        }],
        builder: build_quartic,
    },
    CatalogEntry {
        name: "shifted",
        summary: "v = (|x| - a) e_theta, stagnant on the inner circle, on a < |x| < b",
        params: &[
            ParamSpec {
                name: "a",
                default: None,
            },
            ParamSpec {
                name: "b",
                default: None,
            },
        ],
        builder: build_shifted,
    },
    CatalogEntry {
        name: "ext_counterexample",
        summary: "non-circular exterior flow with constant vorticity 8/a^2 and O(1/r) radial flux",
        params: &[ParamSpec {
            name: "a",
            default: None,
        }],
        builder: build_ext_counterexample,
    },
    CatalogEntry {
        name: "punct_counterexample",
        summary: "harmonic non-circular flow in the punctured disk with growing inner flux",
        params: &[ParamSpec {
            name: "b",
            default: None,
        }],
        builder: build_punct_counterexample,
    },
    CatalogEntry {
        name: "eigenflow_m1",
        summary: "stream phi(|x|) cos(theta) from the principal mode-1 radial eigenpair on [a, b]",
        params: &[
            ParamSpec {
                name: "a",
                default: None,
            },
            ParamSpec {
                name: "b",
                default: None,
            },
            ParamSpec {
                name: "n",
                default: Some(600.0),
            },
        ],
        builder: build_eigenflow_m1,
    },
    CatalogEntry {
        name: "eigenflow_m0",
        summary: "circular flow phi'(|x|) e_theta from the principal mode-0 radial eigenpair on [a, b]",
        params: &[
            ParamSpec {
                name: "a",
                default: None,
            },
            ParamSpec {
                name: "b",
                default: None,
            },
            ParamSpec {
                name: "n",
                default: Some(600.0),
            },
        ],
        builder: build_eigenflow_m0,
    },
];

/// All registered catalog entries.
pub fn entries() -> &'static [CatalogEntry] {
    ENTRIES
}

/// Build a catalog flow by name.
pub fn catalog(name: &str, params: &BTreeMap<String, f64>) -> Result<VectorField, FlowError> {
    let entry = ENTRIES
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| FlowError::UnknownCatalog {
            name: name.to_string(),
            available: ENTRIES.iter().map(|e| e.name).collect(),
        })?;
    let p = Params {
        entry: entry.name,
        map: params,
        specs: entry.params,
    };
    (entry.builder)(entry.name, &p)
}

fn wrap(
    model: impl FlowModel + 'static,
    domain: AnnularDomain,
    name: &str,
    params: &Params,
) -> VectorField {
    let mut map = BTreeMap::new();
    for spec in params.specs {
        if let Ok(v) = params.get(spec.name) {
            map.insert(spec.name.to_string(), v);
        }
    }
    VectorField::new(
        Arc::new(model),
        domain,
        FieldKind::Catalog {
            name: name.to_string(),
            params: map,
        },
    )
}

fn build_rigid(name: &str, p: &Params) -> Result<VectorField, FlowError> {
    let dom = make_annulus(1.0, 2.0, None)?;
    let model = CircularModel::new(name, |r| r, |_r| 1.0)
        .with_stream(|r| 0.5 * r * r)
        .with_pressure(|r| 0.5 * r * r);
    Ok(wrap(model, dom, name, p))
}

fn build_power_law(name: &str, p: &Params) -> Result<VectorField, FlowError> {
    let c = p.get("c")?;
    let k = p.get("k")?;
    let dom = make_annulus(1.0, 2.0, None)?;
    let model = CircularModel::new(name, move |r| c * r.powf(k), move |r| c * k * r.powf(k - 1.0))
        .with_stream(move |r| {
            if k == -1.0 {
                c * r.ln()
            } else {
                c * r.powf(k + 1.0) / (k + 1.0)
            }
        })
        .with_pressure(move |r| {
            if k == 0.0 {
                c * c * r.ln()
            } else {
                c * c * r.powf(2.0 * k) / (2.0 * k)
            }
        });
    Ok(wrap(model, dom, name, p))
}

fn build_log(name: &str, p: &Params) -> Result<VectorField, FlowError> {
    let dom = make_annulus(0.0, 1.0, None)?;
    let model = CircularModel::new(name, |r| 1.0 / r, |r| -1.0 / (r * r))
        .with_stream(|r| r.ln())
        .with_pressure(|r| -0.5 / (r * r));
    Ok(wrap(model, dom, name, p))
}

fn build_inverse_square(name: &str, p: &Params) -> Result<VectorField, FlowError> {
    let dom = make_annulus(1.0, f64::INFINITY, None)?;
    // p'(r) = V^2/r = r^-5, so p = -1/(4 r^4)
    let model = CircularModel::new(name, |r| 1.0 / (r * r), |r| -2.0 / (r * r * r))
        .with_stream(|r| -1.0 / r)
        .with_pressure(|r| -0.25 / r.powi(4));
    Ok(wrap(model, dom, name, p))
}

fn build_quartic(name: &str, p: &Params) -> Result<VectorField, FlowError> {
    let big_r = p.positive("R")?;
    let dom = make_annulus(0.0, big_r, None)?;
    let model = CircularModel::new(name, |r| -4.0 * r * r * r, |r| -12.0 * r * r)
        .with_stream(move |r| big_r.powi(4) - r.powi(4))
        .with_pressure(|r| 8.0 / 3.0 * r.powi(6));
    Ok(wrap(model, dom, name, p))
}

fn build_shifted(name: &str, p: &Params) -> Result<VectorField, FlowError> {
    let a = p.positive("a")?;
    let b = match p.get("b") {
        Ok(v) => v,
        Err(FlowError::MissingParameter { .. }) => 2.0 * a,
        Err(e) => return Err(e),
    };
    let dom = make_annulus(a, b, None)?;
    let model = CircularModel::new(name, move |r| r - a, |_r| 1.0)
        .with_stream(move |r| 0.5 * (r - a) * (r - a))
        .with_pressure(move |r| 0.5 * r * r - 2.0 * a * r + a * a * r.ln());
    Ok(wrap(model, dom, name, p))
}

fn build_ext_counterexample(name: &str, p: &Params) -> Result<VectorField, FlowError> {
    let a = p.positive("a")?;
    let dom = make_annulus(a, f64::INFINITY, None)?;
    let a2 = a * a;
    let model = RadialCosineModel::new(
        name,
        [
            radial_fn(move |r| 2.0 * (r * r / a2 - 1.0)),
            radial_fn(move |r| 4.0 * r / a2),
            radial_fn(move |_r| 4.0 / a2),
        ],
        [
            radial_fn(move |r| r / a - a / r),
            radial_fn(move |r| 1.0 / a + a / (r * r)),
            radial_fn(move |r| -2.0 * a / (r * r * r)),
        ],
        move |_u| -8.0 / a2,
        move |u| -8.0 * u / a2,
    );
    Ok(wrap(model, dom, name, p))
}

fn build_punct_counterexample(name: &str, p: &Params) -> Result<VectorField, FlowError> {
    let b = p.positive("b")?;
    let dom = make_annulus(0.0, b, None)?;
    let model = RadialCosineModel::new(
        name,
        [
            radial_fn(|_r| 0.0),
            radial_fn(|_r| 0.0),
            radial_fn(|_r| 0.0),
        ],
        [
            radial_fn(move |r| r / b - b / r),
            radial_fn(move |r| 1.0 / b + b / (r * r)),
            radial_fn(move |r| -2.0 * b / (r * r * r)),
        ],
        |_u| 0.0,
        |_u| 0.0,
    );
    Ok(wrap(model, dom, name, p))
}

fn eigen_count(p: &Params) -> Result<usize, FlowError> {
    let n = p.get("n")?;
    if n >= 64.0 && n.is_finite() {
        Ok(n as usize)
    } else {
        Err(FlowError::BadParameter {
            name: p.entry.to_string(),
            param: "n",
            value: n,
            reason: "need at least 64 sample radii",
        })
    }
}

fn build_eigenflow_m1(name: &str, p: &Params) -> Result<VectorField, FlowError> {
    let a = p.positive("a")?;
    let b = p.positive("b")?;
    let n = eigen_count(p)?;
    let pair = eigenpair_mode1(a, b, n).map_err(|e| FlowError::BuildFailed {
        name: name.to_string(),
        message: e.to_string(),
    })?;
    let lambda = pair.eigenvalue;
    let phi: Arc<CubicHermite> = Arc::new(pair.phi_interpolant());
    let dphi: Arc<CubicHermite> = Arc::new(pair.phi_prime_interpolant());
    let dom = make_annulus(a, b, None)?;
    let (phi1, phi2, phi3) = (Arc::clone(&phi), Arc::clone(&dphi), Arc::clone(&dphi));
    let model = RadialCosineModel::new(
        name,
        [
            radial_fn(|_r| 0.0),
            radial_fn(|_r| 0.0),
            radial_fn(|_r| 0.0),
        ],
        [
            radial_fn(move |r| phi1.eval_clamped(r)),
            radial_fn(move |r| phi2.eval_clamped(r)),
            // phi'' from the mode-1 radial operator
            radial_fn(move |r| {
                let f = phi.eval_clamped(r);
                let df = phi3.eval_clamped(r);
                -df / r + f / (r * r) - lambda * f
            }),
        ],
        move |u| lambda * u,
        move |u| 0.5 * lambda * u * u,
    );
    Ok(wrap(model, dom, name, p))
}

fn build_eigenflow_m0(name: &str, p: &Params) -> Result<VectorField, FlowError> {
    let a = p.positive("a")?;
    let b = p.positive("b")?;
    let n = eigen_count(p)?;
    let pair = eigenpair_mode0(a, b, n).map_err(|e| FlowError::BuildFailed {
        name: name.to_string(),
        message: e.to_string(),
    })?;
    let mu = pair.eigenvalue;
    let phi: Arc<CubicHermite> = Arc::new(pair.phi_interpolant());
    let dphi: Arc<CubicHermite> = Arc::new(pair.phi_prime_interpolant());
    let dom = make_annulus(a, b, None)?;
    let (phi_s, phi_p, dphi_v, dphi_p) = (
        Arc::clone(&phi),
        Arc::clone(&phi),
        Arc::clone(&dphi),
        Arc::clone(&dphi),
    );
    let model = CircularModel::new(
        name,
        move |r| dphi_v.eval_clamped(r),
        // phi'' from the mode-0 radial operator
        move |r| -dphi.eval_clamped(r) / r - mu * phi.eval_clamped(r),
    )
    .with_stream(move |r| phi_s.eval_clamped(r))
    .with_pressure(move |r| {
        let f = phi_p.eval_clamped(r);
        let df = dphi_p.eval_clamped(r);
        -0.5 * df * df - 0.5 * mu * f * f
    });
    Ok(wrap(model, dom, name, p))
}
