//! Orbit tracing: streamlines of `dx/dt = v(x)`, gradient curves of
//! `dx/dt = grad u(x)`, monotone charts along them, vorticity-function
//! extraction, and the semilinear residual of a stream grid against an
//! extracted profile.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flows::{vorticity_at, FlowError, VectorField};
use crate::geometry::Point;
use crate::interp::{CubicHermite, InterpError};
use crate::ode::{dopri5_step, StepControl};
use crate::stream::StreamGrid;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("seed speed {speed:.3e} at ({x:.6}, {y:.6}) is at or below the stagnation tolerance {tol:.3e}")]
    StagnantSeed { x: f64, y: f64, speed: f64, tol: f64 },
    #[error("gradient orbit stagnated prematurely at ({x:.6}, {y:.6}) with |grad u| = {speed:.3e}")]
    PrematureStagnation { x: f64, y: f64, speed: f64 },
    #[error("field evaluation failed along the orbit at ({x:.6}, {y:.6})")]
    FieldEvaluation { x: f64, y: f64 },
    #[error("curve samples are not strictly monotone in u at index {index}")]
    NonMonotone { index: usize },
    #[error("stream values [{grid_lo:.6e}, {grid_hi:.6e}] exceed the profile range [{lo:.6e}, {hi:.6e}] beyond the {margin:.1}% margin")]
    RangeMismatch {
        grid_lo: f64,
        grid_hi: f64,
        lo: f64,
        hi: f64,
        margin: f64,
    },
    #[error("chart query {u:.6e} outside the chart range [{lo:.6e}, {hi:.6e}]")]
    ChartRange { u: f64, lo: f64, hi: f64 },
    #[error("streamline through ({x:.6}, {y:.6}) did not close ({reason})")]
    OpenOrbit {
        x: f64,
        y: f64,
        reason: &'static str,
    },
    #[error(transparent)]
    Flow(#[from] Box<FlowError>),
    #[error(transparent)]
    Interp(#[from] InterpError),
}

/// Integration options shared by both tracers.
#[derive(Debug, Clone, Copy)]
pub struct TracerOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Arc length per step is capped at this fraction of the local radius.
    pub max_step_factor: f64,
    pub max_steps: usize,
    /// Closure tolerance as a fraction of the accumulated orbit length.
    pub closure_tol_factor: f64,
    /// Seed rejection threshold on the speed.
    pub seed_speed_tol: f64,
    /// Gradient orbits stop with an error when `|grad u|` falls below this
    /// fraction of its seed value.
    pub stagnation_tol_rel: f64,
}

impl Default for TracerOptions {
    fn default() -> Self {
        TracerOptions {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step_factor: 0.05,
            max_steps: 400_000,
            closure_tol_factor: 1e-7,
            seed_speed_tol: 1e-10,
            stagnation_tol_rel: 1e-9,
        }
    }
}

/// Residual of the winding count against the nearest integer above which a
/// closure is flagged suspect.
pub const WINDING_RESIDUAL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StreamlineTermination {
    Closed,
    StepLimit,
    LeftBand,
}

/// A traced orbit of the velocity field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Streamline {
    pub seed: Point,
    pub times: Vec<f64>,
    pub polyline: Vec<Point>,
    pub closed: bool,
    pub period: Option<f64>,
    /// Total swept angle about the origin over 2 pi, rounded (0 when open).
    pub winding: i64,
    pub winding_residual: f64,
    pub suspect: bool,
    pub r_min: f64,
    pub r_max: f64,
    /// Max drift of the model's stream value along the orbit, when known.
    pub u_drift: Option<f64>,
    pub length: f64,
    pub termination: StreamlineTermination,
}

fn wrap_angle(d: f64) -> f64 {
    let mut d = d % std::f64::consts::TAU;
    if d > std::f64::consts::PI {
        d -= std::f64::consts::TAU;
    } else if d < -std::f64::consts::PI {
        d += std::f64::consts::TAU;
    }
    d
}

/// Trace the streamline through `x0` with the embedded 5(4) pair, declaring
/// closure when the orbit re-crosses the section through `x0` (normal to the
/// seed velocity) within the closure tolerance.
pub fn trace_streamline(
    field: &VectorField,
    x0: Point,
    opts: &TracerOptions,
) -> Result<Streamline, TraceError> {
    let v0 = field.velocity(x0);
    let speed0 = v0.norm();
    if !speed0.is_finite() {
        return Err(TraceError::FieldEvaluation { x: x0.x, y: x0.y });
    }
    if speed0 <= opts.seed_speed_tol {
        return Err(TraceError::StagnantSeed {
            x: x0.x,
            y: x0.y,
            speed: speed0,
            tol: opts.seed_speed_tol,
        });
    }
    let normal = v0.scale(1.0 / speed0);
    let rhs = |_t: f64, y: &[f64; 2]| {
        let v = field.velocity(Point::new(y[0], y[1]));
        [v.x, v.y]
    };
    let control = StepControl {
        rel_tol: opts.rel_tol,
        abs_tol: opts.abs_tol,
    };
    let dom = field.domain();
    let band_slack = 1e-9;
    let u0 = field.stream_at(x0);

    let mut t = 0.0;
    let mut y = [x0.x, x0.y];
    let mut times = vec![0.0];
    let mut polyline = vec![x0];
    let mut swept = 0.0f64;
    let mut length = 0.0;
    let mut r_min = x0.norm();
    let mut r_max = r_min;
    let mut u_drift: Option<f64> = u0.map(|_| 0.0);
    let mut h = 0.01 * x0.norm() / speed0;
    let mut termination = StreamlineTermination::StepLimit;

    for _ in 0..opts.max_steps {
        // cap the arc length of the step at a fraction of the local radius
        let here = Point::new(y[0], y[1]);
        let speed_here = field.speed(here).max(1e-300);
        let h_max = opts.max_step_factor * here.norm() / speed_here;
        h = h.min(h_max).max(1e-308);
        let (y_new, err) = dopri5_step(&rhs, t, &y, h);
        if !y_new.iter().all(|v| v.is_finite()) {
            return Err(TraceError::FieldEvaluation { x: y[0], y: y[1] });
        }
        let err_norm = control.error_norm(&y, &y_new, &err);
        if err_norm > 1.0 {
            h = control.next_h(h, err_norm);
            continue;
        }
        let x_old = Point::new(y[0], y[1]);
        let x_new = Point::new(y_new[0], y_new[1]);

        // closure: directional crossing of the seed section, refined by
        // bisection on the step fraction. Requiring s_old < 0 both skips the
        // departure (s = 0 there) and filters wrong-direction crossings.
        let s_old = (x_old - x0).dot(normal);
        let s_new = (x_new - x0).dot(normal);
        if s_old < 0.0 && s_new >= 0.0 {
            let mut h_lo = 0.0;
            let mut h_hi = h;
            for _ in 0..60 {
                let h_mid = 0.5 * (h_lo + h_lo + (h_hi - h_lo));
                let (y_mid, _) = dopri5_step(&rhs, t, &y, h_mid);
                let s_mid = (Point::new(y_mid[0], y_mid[1]) - x0).dot(normal);
                if s_mid < 0.0 {
                    h_lo = h_mid;
                } else {
                    h_hi = h_mid;
                }
            }
            let (y_cross, _) = dopri5_step(&rhs, t, &y, h_hi);
            let x_cross = Point::new(y_cross[0], y_cross[1]);
            let running_length = length + x_cross.distance(x_old);
            let closure_tol = opts.closure_tol_factor * running_length;
            if x_cross.distance(x0) <= closure_tol {
                let swept_total = swept + wrap_angle(x_cross.angle() - x_old.angle());
                t += h_hi;
                times.push(t);
                polyline.push(x_cross);
                length = running_length;
                let turns = swept_total / std::f64::consts::TAU;
                let winding = turns.round() as i64;
                let winding_residual = (turns - turns.round()).abs();
                return Ok(Streamline {
                    seed: x0,
                    times,
                    polyline,
                    closed: true,
                    period: Some(t),
                    winding,
                    winding_residual,
                    suspect: winding_residual >= WINDING_RESIDUAL_TOL,
                    r_min,
                    r_max,
                    u_drift,
                    length,
                    termination: StreamlineTermination::Closed,
                });
            }
        }

        t += h;
        y = y_new;
        swept += wrap_angle(x_new.angle() - x_old.angle());
        length += x_new.distance(x_old);
        let r = x_new.norm();
        r_min = r_min.min(r);
        r_max = r_max.max(r);
        if let (Some(u_seed), Some(drift)) = (u0, u_drift.as_mut()) {
            if let Some(u_here) = field.stream_at(x_new) {
                *drift = (*drift).max((u_here - u_seed).abs());
            }
        }
        times.push(t);
        polyline.push(x_new);
        if r < dom.trunc_inner * (1.0 - band_slack) || r > dom.trunc_outer * (1.0 + band_slack) {
            termination = StreamlineTermination::LeftBand;
            break;
        }
        h = control.next_h(h, err_norm);
    }

    let turns = swept / std::f64::consts::TAU;
    Ok(Streamline {
        seed: x0,
        times,
        polyline,
        closed: false,
        period: None,
        winding: 0,
        winding_residual: (turns - turns.round()).abs(),
        suspect: false,
        r_min,
        r_max,
        u_drift,
        length,
        termination,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveTermination {
    HitInner,
    HitOuter,
    HitTruncation,
    StepLimit,
}

/// A traced orbit of the stream-function gradient `grad u = (v2, -v1)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientCurve {
    pub seed: Point,
    pub direction: i8,
    pub times: Vec<f64>,
    pub polyline: Vec<Point>,
    /// Stream values accumulated from `du/dt = +-|grad u|^2`, offset by the
    /// model's stream value at the seed when one is known.
    pub u_values: Vec<f64>,
    pub termination: CurveTermination,
}

/// Trace the gradient orbit `dx/dt = direction * grad u(x)` until it exits
/// the radial band, with `u` integrated along the way.
pub fn trace_gradient_curve(
    field: &VectorField,
    x0: Point,
    direction: i8,
    opts: &TracerOptions,
) -> Result<GradientCurve, TraceError> {
    let g0 = field.stream_gradient(x0);
    let speed0 = g0.norm();
    if !speed0.is_finite() {
        return Err(TraceError::FieldEvaluation { x: x0.x, y: x0.y });
    }
    if speed0 <= opts.seed_speed_tol {
        return Err(TraceError::StagnantSeed {
            x: x0.x,
            y: x0.y,
            speed: speed0,
            tol: opts.seed_speed_tol,
        });
    }
    let dir = direction.signum() as f64;
    let rhs = |_t: f64, y: &[f64; 3]| {
        let g = field.stream_gradient(Point::new(y[0], y[1]));
        [dir * g.x, dir * g.y, dir * g.norm_sq()]
    };
    let control = StepControl {
        rel_tol: opts.rel_tol,
        abs_tol: opts.abs_tol,
    };
    let dom = field.domain();
    let stagnation_tol = opts.stagnation_tol_rel * speed0;
    let u_seed = field.stream_at(x0).unwrap_or(0.0);

    let mut t = 0.0;
    let mut y = [x0.x, x0.y, u_seed];
    let mut times = vec![0.0];
    let mut polyline = vec![x0];
    let mut u_values = vec![u_seed];
    let mut h = 0.01 * x0.norm() / speed0;
    let mut termination = CurveTermination::StepLimit;

    let classify_exit = |r: f64| -> CurveTermination {
        let at_inner = (r - dom.trunc_inner).abs() <= (r - dom.trunc_outer).abs();
        if at_inner {
            if (dom.trunc_inner - dom.inner_radius).abs() <= 1e-12 * dom.trunc_inner.max(1.0) {
                CurveTermination::HitInner
            } else {
                CurveTermination::HitTruncation
            }
        } else if dom.outer_radius.is_finite()
            && (dom.trunc_outer - dom.outer_radius).abs() <= 1e-12 * dom.trunc_outer
        {
            CurveTermination::HitOuter
        } else {
            CurveTermination::HitTruncation
        }
    };

    for _ in 0..opts.max_steps {
        let here = Point::new(y[0], y[1]);
        let g_here = field.stream_gradient(here).norm().max(1e-300);
        let h_max = opts.max_step_factor * here.norm() / g_here;
        h = h.min(h_max).max(1e-308);
        let (y_new, err) = dopri5_step(&rhs, t, &y, h);
        if !y_new.iter().all(|v| v.is_finite()) {
            return Err(TraceError::FieldEvaluation { x: y[0], y: y[1] });
        }
        let err_norm = control.error_norm(&y, &y_new, &err);
        if err_norm > 1.0 {
            h = control.next_h(h, err_norm);
            continue;
        }
        let r_new = Point::new(y_new[0], y_new[1]).norm();
        if r_new < dom.trunc_inner || r_new > dom.trunc_outer {
            // land on the band edge by bisecting the step
            let bound = if r_new < dom.trunc_inner {
                dom.trunc_inner
            } else {
                dom.trunc_outer
            };
            let mut h_lo = 0.0;
            let mut h_hi = h;
            for _ in 0..60 {
                let h_mid = 0.5 * (h_lo + h_hi);
                let (y_mid, _) = dopri5_step(&rhs, t, &y, h_mid);
                let r_mid = Point::new(y_mid[0], y_mid[1]).norm();
                let out = r_mid < dom.trunc_inner || r_mid > dom.trunc_outer;
                if out {
                    h_hi = h_mid;
                } else {
                    h_lo = h_mid;
                }
            }
            let (y_edge, _) = dopri5_step(&rhs, t, &y, h_hi);
            t += h_hi;
            times.push(t);
            polyline.push(Point::new(y_edge[0], y_edge[1]));
            u_values.push(y_edge[2]);
            termination = classify_exit(bound);
            return Ok(GradientCurve {
                seed: x0,
                direction,
                times,
                polyline,
                u_values,
                termination,
            });
        }

        t += h;
        y = y_new;
        times.push(t);
        polyline.push(Point::new(y[0], y[1]));
        u_values.push(y[2]);
        let g_norm = field.stream_gradient(Point::new(y[0], y[1])).norm();
        if g_norm <= stagnation_tol {
            return Err(TraceError::PrematureStagnation {
                x: y[0],
                y: y[1],
                speed: g_norm,
            });
        }
        h = control.next_h(h, err_norm);
    }
    Ok(GradientCurve {
        seed: x0,
        direction,
        times,
        polyline,
        u_values,
        termination,
    })
}

/// Monotone chart `g: t -> u` with inverse `g^-1: u -> t`, both monotone
/// piecewise cubics through the same knots.
#[derive(Debug, Clone)]
pub struct MonotoneChart {
    forward: CubicHermite,
    inverse: CubicHermite,
    increasing: bool,
}

impl MonotoneChart {
    pub fn u_of_t(&self, t: f64) -> Result<f64, TraceError> {
        Ok(self.forward.eval(t)?)
    }

    pub fn t_of_u(&self, u: f64) -> Result<f64, TraceError> {
        let (lo, hi) = self.inverse.range();
        if u < lo || u > hi {
            return Err(TraceError::ChartRange { u, lo, hi });
        }
        let t = self.inverse.eval(u)?;
        Ok(if self.increasing { t } else { -t })
    }

    pub fn u_range(&self) -> (f64, f64) {
        self.inverse.range()
    }
}

/// Build the monotone chart of a gradient curve. The curve's `u` samples must
/// be strictly monotone; the first violation is reported by index.
pub fn build_chart(curve: &GradientCurve) -> Result<MonotoneChart, TraceError> {
    let u = &curve.u_values;
    if u.len() < 2 {
        return Err(TraceError::NonMonotone { index: 0 });
    }
    let increasing = u[1] > u[0];
    for i in 1..u.len() {
        let ok = if increasing {
            u[i] > u[i - 1]
        } else {
            u[i] < u[i - 1]
        };
        if !ok {
            return Err(TraceError::NonMonotone { index: i });
        }
    }
    let forward = CubicHermite::pchip(curve.times.clone(), u.clone())?;
    // invert by swapping axes; decreasing charts flip the sign of t so the
    // inverse knots stay increasing
    let (ux, tx): (Vec<f64>, Vec<f64>) = if increasing {
        (u.clone(), curve.times.clone())
    } else {
        (
            u.iter().rev().copied().collect(),
            curve.times.iter().rev().map(|t| -t).collect(),
        )
    };
    let inverse = CubicHermite::pchip(ux, tx)?;
    Ok(MonotoneChart {
        forward,
        inverse,
        increasing,
    })
}

/// Point on the curve at the given stream level, via the chart and a cubic
/// Hermite interpolation of the polyline (slopes from the field), polished
/// against the model's closed-form stream when available.
pub fn point_at_u(
    field: &VectorField,
    curve: &GradientCurve,
    chart: &MonotoneChart,
    u: f64,
) -> Result<Point, TraceError> {
    let t = chart.t_of_u(u)?;
    let times = &curve.times;
    let k = match times.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
        Ok(k) => k.min(times.len() - 2),
        Err(k) => k.saturating_sub(1).min(times.len() - 2),
    };
    let dir = curve.direction.signum() as f64;
    let slope = |p: Point| field.stream_gradient(p).scale(dir);
    let (p0, p1) = (curve.polyline[k], curve.polyline[k + 1]);
    let (d0, d1) = (slope(p0), slope(p1));
    let mut x = Point::new(
        crate::interp::hermite_segment(times[k], p0.x, d0.x, times[k + 1], p1.x, d1.x, t),
        crate::interp::hermite_segment(times[k], p0.y, d0.y, times[k + 1], p1.y, d1.y, t),
    );
    if field.stream_at(x).is_some() {
        for _ in 0..8 {
            let u_here = field.stream_at(x).unwrap();
            let g = field.stream_gradient(x);
            let g2 = g.norm_sq();
            if g2 == 0.0 {
                break;
            }
            let correction = g.scale((u - u_here) / g2);
            x = x + correction;
            if correction.norm() <= 1e-14 * x.norm().max(1.0) {
                break;
            }
        }
    }
    Ok(x)
}

/// Find a point on the level set `u = level` by walking gradient curves from
/// `seed` (forward, then backward) until one chart brackets the level.
pub fn locate_level(
    field: &VectorField,
    level: f64,
    seed: Point,
    opts: &TracerOptions,
) -> Result<Point, TraceError> {
    let mut last_err = None;
    for direction in [1i8, -1] {
        match trace_gradient_curve(field, seed, direction, opts) {
            Ok(curve) => {
                let chart = build_chart(&curve)?;
                match point_at_u(field, &curve, &chart, level) {
                    Ok(p) => return Ok(p),
                    Err(e @ TraceError::ChartRange { .. }) => last_err = Some(e),
                    Err(e) => return Err(e),
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("both directions attempted"))
}

/// Closed streamline at the level `u = level`, as a Jordan polygon.
pub fn level_polygon(
    field: &VectorField,
    level: f64,
    seed: Point,
    opts: &TracerOptions,
) -> Result<crate::geometry::JordanPolygon, TraceError> {
    let start = locate_level(field, level, seed, opts)?;
    let orbit = trace_streamline(field, start, opts)?;
    if !orbit.closed {
        return Err(TraceError::OpenOrbit {
            x: start.x,
            y: start.y,
            reason: "no closure within the step budget",
        });
    }
    // drop the closing point: the polygon closes implicitly
    let vertices = orbit.polyline[..orbit.polyline.len() - 1].to_vec();
    crate::geometry::JordanPolygon::new(vertices).map_err(|_| TraceError::OpenOrbit {
        x: start.x,
        y: start.y,
        reason: "degenerate polygon from the traced orbit",
    })
}

/// Tabulated vorticity function `f(tau)` over the stream values of a gradient
/// curve, with its running antiderivative and endpoint Lipschitz estimates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VorticityProfile {
    tau: Vec<f64>,
    f: Vec<f64>,
    antiderivative: Vec<f64>,
    /// Max |df/dtau| over the last decile of the range (blow-up detector).
    pub endpoint_lipschitz: f64,
    /// Max |df/dtau| over the middle half of the range.
    pub midrange_lipschitz: f64,
    #[serde(skip)]
    interp: Option<CubicHermite>,
}

impl VorticityProfile {
    pub fn from_samples(tau: Vec<f64>, f: Vec<f64>) -> Result<VorticityProfile, TraceError> {
        for i in 1..tau.len() {
            if tau[i] <= tau[i - 1] {
                return Err(TraceError::NonMonotone { index: i });
            }
        }
        let n = tau.len();
        let mut antiderivative = vec![0.0; n];
        for i in 1..n {
            antiderivative[i] =
                antiderivative[i - 1] + 0.5 * (f[i] + f[i - 1]) * (tau[i] - tau[i - 1]);
        }
        let slopes: Vec<f64> = (1..n)
            .map(|i| ((f[i] - f[i - 1]) / (tau[i] - tau[i - 1])).abs())
            .collect();
        let span = tau[n - 1] - tau[0];
        // a blow-up can sit at either end of the range
        let tail_start = tau[n - 1] - 0.1 * span;
        let head_end = tau[0] + 0.1 * span;
        let endpoint_lipschitz = (1..n)
            .filter(|&i| tau[i] >= tail_start || tau[i - 1] <= head_end)
            .map(|i| slopes[i - 1])
            .fold(0.0, f64::max);
        let (q1, q3) = (tau[0] + 0.25 * span, tau[0] + 0.75 * span);
        let midrange_lipschitz = (1..n)
            .filter(|&i| tau[i] >= q1 && tau[i] <= q3)
            .map(|i| slopes[i - 1])
            .fold(0.0, f64::max);
        let interp = CubicHermite::pchip(tau.clone(), f.clone())?;
        Ok(VorticityProfile {
            tau,
            f,
            antiderivative,
            endpoint_lipschitz,
            midrange_lipschitz,
            interp: Some(interp),
        })
    }

    /// Tabulate a closed-form vorticity function on `[lo, hi]`.
    pub fn from_fn(
        f: impl Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        n: usize,
    ) -> Result<VorticityProfile, TraceError> {
        let tau: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        let fs: Vec<f64> = tau.iter().map(|&t| f(t)).collect();
        VorticityProfile::from_samples(tau, fs)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.tau[0], *self.tau.last().unwrap())
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.tau, &self.f)
    }

    fn interp_ref(&self) -> &CubicHermite {
        self.interp
            .as_ref()
            .expect("profile interpolant present (not deserialized)")
    }

    pub fn eval(&self, tau: f64) -> Result<f64, TraceError> {
        Ok(self.interp_ref().eval(tau)?)
    }

    /// Monotone-cubic value with end clamping.
    pub fn eval_clamped(&self, tau: f64) -> f64 {
        self.interp_ref().eval_clamped(tau)
    }

    /// Antiderivative `F` with `F(range start) = 0`, trapezoid-consistent at
    /// the knots and quadratic (linear `f`) inside each cell. Clamped at the
    /// range ends.
    pub fn antiderivative(&self, tau: f64) -> f64 {
        let (lo, hi) = self.range();
        let tau = tau.clamp(lo, hi);
        let k = match self
            .tau
            .binary_search_by(|v| v.partial_cmp(&tau).unwrap())
        {
            Ok(k) => return self.antiderivative[k],
            Err(k) => k.saturating_sub(1).min(self.tau.len() - 2),
        };
        let dt = tau - self.tau[k];
        let cell = self.tau[k + 1] - self.tau[k];
        let slope = (self.f[k + 1] - self.f[k]) / cell;
        self.antiderivative[k] + self.f[k] * dt + 0.5 * slope * dt * dt
    }
}

/// Sample `f(tau) = -omega` along a gradient curve, indexed by the curve's
/// stream values.
pub fn extract_vorticity_profile(
    field: &VectorField,
    curve: &GradientCurve,
) -> Result<VorticityProfile, TraceError> {
    let n = curve.polyline.len();
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    for (x, &u) in curve.polyline.iter().zip(&curve.u_values) {
        let omega = vorticity_at(field, *x).map_err(Box::new)?;
        pairs.push((u, -omega));
    }
    if curve.direction < 0 {
        pairs.reverse();
    }
    let (tau, f): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    VorticityProfile::from_samples(tau, f)
}

/// Residual summary of a grid against a profile.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max: f64,
    /// 99th percentile over interior nodes.
    pub p99: f64,
    pub clamped_nodes: usize,
    pub interior_nodes: usize,
}

/// Fraction of the profile span by which grid values may poke out of the
/// profile range before `semilinear_residual` refuses.
pub const RANGE_MARGIN: f64 = 0.01;

/// Max and 99th-percentile of `|Delta_h u + f(u)|` over interior grid nodes,
/// with the five-point polar Laplacian.
pub fn semilinear_residual(
    sg: &StreamGrid,
    profile: &VorticityProfile,
) -> Result<ResidualReport, TraceError> {
    let (grid_lo, grid_hi) = sg.value_range();
    let (lo, hi) = profile.range();
    let margin = RANGE_MARGIN * (hi - lo);
    if grid_lo < lo - margin || grid_hi > hi + margin {
        return Err(TraceError::RangeMismatch {
            grid_lo,
            grid_hi,
            lo,
            hi,
            margin: 100.0 * RANGE_MARGIN,
        });
    }
    let mut clamped = 0;
    let report = residual_inner(sg, |_r, u| {
        if u < lo || u > hi {
            clamped += 1;
        }
        profile.eval_clamped(u)
    });
    Ok(ResidualReport {
        clamped_nodes: clamped,
        ..report
    })
}

/// Residual `|Delta_h u + weight(r) f(u)|` over interior nodes: the
/// generalization used by the inversion-transformed equation.
pub fn weighted_semilinear_residual(
    sg: &StreamGrid,
    f: impl Fn(f64) -> f64,
    weight: impl Fn(f64) -> f64,
) -> ResidualReport {
    residual_inner(sg, |r, u| weight(r) * f(u))
}

fn residual_inner(sg: &StreamGrid, mut source: impl FnMut(f64, f64) -> f64) -> ResidualReport {
    let grid = sg.grid();
    let mut residuals = Vec::with_capacity((grid.n_r() - 2) * grid.n_theta());
    for i in 1..grid.n_r() - 1 {
        for j in 0..grid.n_theta() {
            let lap = sg.polar_laplacian(i, j);
            let r = lap + source(grid.radii[i], sg.value(i, j));
            residuals.push(r.abs());
        }
    }
    summarize_residuals(residuals)
}

fn summarize_residuals(mut residuals: Vec<f64>) -> ResidualReport {
    let interior_nodes = residuals.len();
    residuals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let max = residuals.last().copied().unwrap_or(0.0);
    let p99 = if residuals.is_empty() {
        0.0
    } else {
        residuals[((residuals.len() - 1) as f64 * 0.99) as usize]
    };
    ResidualReport {
        max,
        p99,
        clamped_nodes: 0,
        interior_nodes,
    }
}

/// Orbit CSV: `t,x,y,u,omega` per vertex (stream and vorticity when
/// available; `nan` otherwise).
pub fn polyline_csv(field: &VectorField, times: &[f64], polyline: &[Point]) -> String {
    let mut out = String::from("t,x,y,u,omega\n");
    for (t, p) in times.iter().zip(polyline) {
        let u = field.stream_at(*p).unwrap_or(f64::NAN);
        let omega = vorticity_at(field, *p).unwrap_or(f64::NAN);
        out.push_str(&format!("{},{},{},{},{}\n", t, p.x, p.y, u, omega));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::catalog::catalog;
    use std::collections::BTreeMap;

    fn build(name: &str, params: &[(&str, f64)]) -> VectorField {
        let map: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        catalog(name, &map).unwrap()
    }

    #[test]
    fn rigid_orbit_closes_with_period_two_pi() {
        let f = build("rigid", &[]);
        let s = trace_streamline(&f, Point::new(1.5, 0.0), &TracerOptions::default()).unwrap();
        assert!(s.closed);
        assert!((s.period.unwrap() - std::f64::consts::TAU).abs() < 1e-6);
        assert_eq!(s.winding, 1);
        assert!(s.r_max - s.r_min <= 1e-8);
        assert!(!s.suspect);
        assert!(s.u_drift.unwrap() < 1e-8);
    }

    #[test]
    fn inverse_square_period() {
        let f = build("inverse_square", &[]);
        let s = trace_streamline(&f, Point::new(2.0, 0.0), &TracerOptions::default()).unwrap();
        assert!(s.closed);
        // T = 2 pi r / V(r) = 2 pi 2 / (1/4) = 16 pi
        let expect = 16.0 * std::f64::consts::PI;
        assert!(
            (s.period.unwrap() - expect).abs() < 1e-5 * expect,
            "period {} vs {}",
            s.period.unwrap(),
            expect
        );
    }

    #[test]
    fn stagnant_seed_rejected() {
        let f = build("shifted", &[("a", 1.0)]);
        assert!(matches!(
            trace_streamline(&f, Point::new(1.0, 0.0), &TracerOptions::default()),
            Err(TraceError::StagnantSeed { .. })
        ));
    }

    #[test]
    fn gradient_curve_of_rigid_runs_radially() {
        let f = build("rigid", &[]);
        let c = trace_gradient_curve(&f, Point::new(1.5, 0.0), 1, &TracerOptions::default())
            .unwrap();
        assert_eq!(c.termination, CurveTermination::HitOuter);
        let end = *c.polyline.last().unwrap();
        assert!((end.norm() - 2.0).abs() < 1e-9);
        assert!(end.y.abs() < 1e-9, "stays on the ray");
        // u = r^2/2 along the way
        let end_u = *c.u_values.last().unwrap();
        assert!((end_u - 2.0).abs() < 1e-8);
    }

    #[test]
    fn log_flow_backward_hits_truncation() {
        let spec: crate::flows::FieldSpec = serde_json::from_str(
            r#"{"kind":"catalog","name":"log"}"#,
        )
        .unwrap();
        let f = spec.build().unwrap();
        let c = trace_gradient_curve(&f, Point::new(1.0, 0.0), -1, &TracerOptions::default());
        // domain is the punctured unit disk: seed sits on the outer circle,
        // backward orbit falls to the inner truncation
        let c = c.unwrap();
        assert_eq!(c.termination, CurveTermination::HitTruncation);
        let end = c.polyline.last().unwrap();
        assert!((end.norm() - 0.001).abs() < 1e-6);
        let end_u = *c.u_values.last().unwrap();
        assert!((end_u - 0.001f64.ln()).abs() < 1e-5, "u -> ln(trunc_inner), got {end_u}");
    }

    #[test]
    fn eigenflow_gradient_orbit_stalls_at_interior_maximum() {
        // gradient orbits of the mode-1 eigenflow converge to the interior
        // critical point on the symmetry axis instead of crossing the annulus
        let f = build("eigenflow_m1", &[("a", 1.0), ("b", 2.0)]);
        let res = trace_gradient_curve(&f, Point::new(1.0, 0.0), 1, &TracerOptions::default());
        match res {
            Err(TraceError::PrematureStagnation { x, y, .. }) => {
                let pair = crate::radial::eigenpair_mode1(1.0, 2.0, 256).unwrap();
                let r_star = pair.interior_max_radius();
                assert!(y.abs() < 1e-3, "stalls on the axis, y = {y}");
                assert!((x - r_star).abs() < 0.02, "stalls at r* = {r_star}, got {x}");
            }
            other => panic!("expected premature stagnation, got {other:?}"),
        }
    }

    #[test]
    fn chart_roundtrip_and_monotonicity_guard() {
        let f = build("rigid", &[]);
        let c = trace_gradient_curve(&f, Point::new(1.2, 0.5), 1, &TracerOptions::default())
            .unwrap();
        let chart = build_chart(&c).unwrap();
        for (t, u) in c.times.iter().zip(&c.u_values) {
            assert!((chart.u_of_t(*t).unwrap() - u).abs() < 1e-12);
            assert!((chart.t_of_u(*u).unwrap() - t).abs() < 1e-10);
        }
        // g(t) recovers r(t)^2/2
        for (t, p) in c.times.iter().zip(&c.polyline) {
            let r = p.norm();
            assert!((chart.u_of_t(*t).unwrap() - 0.5 * r * r).abs() < 1e-8);
        }

        let mut bad = c.clone();
        bad.u_values[3] = bad.u_values[2]; // break strict monotonicity
        match build_chart(&bad) {
            Err(TraceError::NonMonotone { index }) => assert_eq!(index, 3),
            other => panic!("expected NonMonotone, got {other:?}"),
        }
    }

    #[test]
    fn extracted_profile_of_rigid_is_constant_two() {
        let f = build("rigid", &[]);
        let c = trace_gradient_curve(&f, Point::new(1.05, 0.0), 1, &TracerOptions::default())
            .unwrap();
        let profile = extract_vorticity_profile(&f, &c).unwrap();
        let (lo, hi) = profile.range();
        for k in 0..=20 {
            let tau = lo + (hi - lo) * k as f64 / 20.0;
            assert!((profile.eval(tau).unwrap() + 2.0).abs() < 1e-9);
        }
        // F accumulates -2 (tau - lo)
        assert!((profile.antiderivative(hi) - (-2.0) * (hi - lo)).abs() < 1e-9);
    }

    #[test]
    fn bernoulli_pressure_basics() {
        let zero = VorticityProfile::from_fn(|_| 0.0, -1.0, 1.0, 32).unwrap();
        let p = crate::flows::bernoulli_pressure(0.3, 1.0, &zero).unwrap();
        assert!((p + 0.5).abs() < 1e-14);
        assert!(crate::flows::bernoulli_pressure(2.0, 1.0, &zero).is_err());
    }

    #[test]
    fn bernoulli_pressure_of_rigid_matches_centripetal_gradient() {
        // rigid: omega = 2, so f = -2 and F(u) = -2(u - u_lo); the Bernoulli
        // pressure -|v|^2/2 - F(u) then equals r^2/2 up to a constant
        let prof = VorticityProfile::from_fn(|_| -2.0, 0.0, 3.0, 64).unwrap();
        let p_of_r =
            |r: f64| crate::flows::bernoulli_pressure(0.5 * r * r, r, &prof).unwrap();
        for r in [1.1f64, 1.5, 1.9] {
            let h = 1e-6;
            let grad = (p_of_r(r + h) - p_of_r(r - h)) / (2.0 * h);
            assert!((grad - r).abs() < 1e-5, "grad {grad} vs {r}");
        }
    }

    #[test]
    fn bernoulli_pressure_of_quartic_matches_paper_gradient() {
        // f(s) = 16 sqrt(R^4 - s), R = 1: the Bernoulli pressure gradient
        // matches d/dr[(8/3) r^6] = 16 r^5 up to the anchored constant
        let prof =
            VorticityProfile::from_fn(|s: f64| 16.0 * (1.0 - s).max(0.0).sqrt(), 0.0, 1.0, 4096)
                .unwrap();
        let p_of_r = |r: f64| {
            let u = 1.0 - r.powi(4);
            let speed = 4.0 * r.powi(3);
            crate::flows::bernoulli_pressure(u, speed, &prof).unwrap()
        };
        for r in [0.3f64, 0.5, 0.8] {
            let h = 1e-6;
            let grad = (p_of_r(r + h) - p_of_r(r - h)) / (2.0 * h);
            let expect = 16.0 * r.powi(5);
            assert!(
                (grad - expect).abs() < 1e-3 * expect.max(1.0),
                "grad {grad} vs {expect} at r={r}"
            );
        }
    }

    #[test]
    fn semilinear_residual_log_flow_refines_quadratically() {
        let spec: crate::flows::FieldSpec = serde_json::from_str(
            r#"{"kind":"catalog","name":"log","domain":{"a":0,"b":"inf","trunc_inner":1.0,"trunc_outer":2.5}}"#,
        )
        .unwrap();
        let f = spec.build().unwrap();
        let zero_profile = VorticityProfile::from_fn(|_| 0.0, -2.0, 2.0, 32).unwrap();
        let mut maxes = Vec::new();
        // nested grids: cell count doubles so spacings halve exactly
        for (n_r, n_th) in [(33usize, 64usize), (65, 128)] {
            let grid = crate::geometry::polar_grid(f.domain(), n_r, n_th).unwrap();
            let sg = crate::stream::StreamGrid::from_fn(grid, |x| x.norm().ln());
            let rep = semilinear_residual(&sg, &zero_profile).unwrap();
            maxes.push(rep.max);
        }
        assert!(
            maxes[0] / maxes[1] > 3.5,
            "refinement ratio {} below quadratic trend",
            maxes[0] / maxes[1]
        );
    }

    #[test]
    fn profile_range_mismatch_detected() {
        let f = build("rigid", &[]);
        let grid = crate::geometry::polar_grid(f.domain(), 16, 16).unwrap();
        let sg = crate::stream::StreamGrid::from_fn(grid, |x| 0.5 * x.norm_sq());
        let narrow = VorticityProfile::from_fn(|_| 2.0, 0.5, 0.6, 16).unwrap();
        assert!(matches!(
            semilinear_residual(&sg, &narrow),
            Err(TraceError::RangeMismatch { .. })
        ));
    }
}
