//! Radial ODE machinery: the two principal Dirichlet eigenproblems, radial
//! semilinear profile integration, circular-flow construction, and the
//! inversion transform of stream grids.
//!
//! The dense finite-difference eigenvalue solver ([`fd_principal_eigenvalue`])
//! is the ground truth the shooting solver is cross-checked against: it
//! discretizes the symmetrized operator `-(r phi')'/r + m phi/r^2` on a
//! uniform grid and runs inverse power iteration to a 1e-12 residual.

use thiserror::Error;

use crate::flows::{FlowError, RadialProfile, SignReport, VectorField};
use crate::flows::catalog::CircularModel;
use crate::geometry::{AnnularDomain, GeometryError, PolarGrid};
use crate::interp::{CubicHermite, InterpError};
use crate::ode::{integrate_to, StepControl};
use crate::stream::StreamGrid;
use crate::trace::VorticityProfile;

#[derive(Debug, Error)]
pub enum RadialError {
    #[error("invalid radial interval: need 0 < a < b, got a={a}, b={b}")]
    InvalidInterval { a: f64, b: f64 },
    #[error("need at least 64 sample radii, got {0}")]
    TooFewSamples(usize),
    #[error("no sign change of the shot endpoint value in the scanned window (0, {window:.3e}]")]
    NoBracket { window: f64 },
    #[error("eigen iteration failed to converge ({0})")]
    NoConvergence(&'static str),
    #[error("source function unavailable at radius {radius:.6e} (stream value {u:.6e} left its range)")]
    ProfileExhausted { radius: f64, u: f64 },
    #[error("integrator exceeded its step budget near radius {0:.6e}")]
    StepLimit(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Flow(#[from] Box<FlowError>),
}

/// Which radial operator: `-phi'' - phi'/r + m phi/r^2 = lambda phi` with
/// `m = 1` (mode one) or `m = 0` (mode zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMode {
    ModeZero,
    ModeOne,
}

impl EigenMode {
    fn m(self) -> f64 {
        match self {
            EigenMode::ModeZero => 0.0,
            EigenMode::ModeOne => 1.0,
        }
    }
}

/// Principal Dirichlet eigenpair on `[a, b]`, normalized to `max phi = 1`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub mode: EigenMode,
    /// Shooting eigenvalue (the returned value of record).
    pub eigenvalue: f64,
    /// Dense finite-difference cross-check.
    pub fd_eigenvalue: f64,
    pub radii: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_prime: Vec<f64>,
}

impl EigenPair {
    /// Hermite interpolant of `phi` with exact slopes.
    pub fn phi_interpolant(&self) -> CubicHermite {
        CubicHermite::with_slopes(
            self.radii.clone(),
            self.phi.clone(),
            self.phi_prime.clone(),
        )
        .expect("eigen radii are strictly increasing")
    }

    /// Hermite interpolant of `phi'`, with slopes `phi''` from the operator.
    pub fn phi_prime_interpolant(&self) -> CubicHermite {
        let lambda = self.eigenvalue;
        let m = self.mode.m();
        let ddphi: Vec<f64> = self
            .radii
            .iter()
            .zip(self.phi.iter().zip(&self.phi_prime))
            .map(|(&r, (&f, &df))| -df / r + m * f / (r * r) - lambda * f)
            .collect();
        CubicHermite::with_slopes(self.radii.clone(), self.phi_prime.clone(), ddphi)
            .expect("eigen radii are strictly increasing")
    }

    /// Radius of the (unique) interior maximum of `phi`.
    pub fn interior_max_radius(&self) -> f64 {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &v) in self.phi.iter().enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        // refine by the zero of phi' between the neighbours of the best sample
        let i = best.0.clamp(1, self.radii.len() - 2);
        let interp = self.phi_prime_interpolant();
        let (mut lo, mut hi) = (self.radii[i - 1], self.radii[i + 1]);
        let f_lo = interp.eval_clamped(lo);
        if f_lo < 0.0 {
            return self.radii[best.0];
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if interp.eval_clamped(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// CSV export: `r,phi` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,phi\n");
        for (r, phi) in self.radii.iter().zip(&self.phi) {
            out.push_str(&format!("{r},{phi}\n"));
        }
        out
    }

    /// Number of sign changes of `phi'` over the samples (1 for a principal
    /// eigenfunction: a single interior critical point).
    pub fn critical_point_count(&self) -> usize {
        let mut count = 0;
        let mut prev = self.phi_prime[0];
        for &d in &self.phi_prime[1..] {
            if prev != 0.0 && d != 0.0 && prev.signum() != d.signum() {
                count += 1;
            }
            if d != 0.0 {
                prev = d;
            }
        }
        count
    }
}

/// Grid size of the dense finite-difference oracle.
pub const FD_ORACLE_GRID: usize = 4096;

/// Principal eigenvalue of the symmetrized operator `-(r phi')'/r + m phi/r^2`
/// on a uniform grid with `n_grid` cells, by inverse power iteration with a
/// tridiagonal solve per step, iterated to a 1e-12 relative residual.
pub fn fd_principal_eigenvalue(
    mode: EigenMode,
    a: f64,
    b: f64,
    n_grid: usize,
) -> Result<f64, RadialError> {
    check_interval(a, b)?;
    let n = n_grid;
    let h = (b - a) / n as f64;
    let m = mode.m();
    let dim = n - 1;
    // tridiagonal rows of A phi = lambda phi at interior nodes
    let mut diag = vec![0.0; dim];
    let mut lower = vec![0.0; dim]; // lower[i] multiplies phi_{i-1}
    let mut upper = vec![0.0; dim];
    for i in 0..dim {
        let r = a + (i + 1) as f64 * h;
        let r_plus = r + 0.5 * h;
        let r_minus = r - 0.5 * h;
        diag[i] = (r_plus + r_minus) / (h * h * r) + m / (r * r);
        upper[i] = -r_plus / (h * h * r);
        lower[i] = -r_minus / (h * h * r);
    }
    // initial guess: half sine over the interval
    let mut x: Vec<f64> = (0..dim)
        .map(|i| (std::f64::consts::PI * (i + 1) as f64 / n as f64).sin())
        .collect();
    normalize(&mut x);
    let mul = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for i in 0..dim {
            let mut acc = diag[i] * v[i];
            if i > 0 {
                acc += lower[i] * v[i - 1];
            }
            if i + 1 < dim {
                acc += upper[i] * v[i + 1];
            }
            out[i] = acc;
        }
        out
    };
    let mut lambda;
    for _ in 0..500 {
        let y = thomas_solve(&lower, &diag, &upper, &x);
        x = y;
        normalize(&mut x);
        let ax = mul(&x);
        lambda = dot(&x, &ax);
        let mut residual: f64 = 0.0;
        let mut roundoff_floor: f64 = 0.0;
        for i in 0..dim {
            residual = residual.max((ax[i] - lambda * x[i]).abs());
            // componentwise floor of the matrix-vector product: |A||x| eps
            let mut fl = diag[i].abs() * x[i].abs();
            if i > 0 {
                fl += lower[i].abs() * x[i - 1].abs();
            }
            if i + 1 < dim {
                fl += upper[i].abs() * x[i + 1].abs();
            }
            roundoff_floor = roundoff_floor.max(fl);
        }
        let target = (1e-12 * lambda.abs().max(1.0)).max(8.0 * f64::EPSILON * roundoff_floor);
        if residual <= target {
            return Ok(lambda);
        }
    }
    Err(RadialError::NoConvergence(
        "inverse power iteration residual stalled above its target",
    ))
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn thomas_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn check_interval(a: f64, b: f64) -> Result<(), RadialError> {
    if a > 0.0 && b > a && b.is_finite() {
        Ok(())
    } else {
        Err(RadialError::InvalidInterval { a, b })
    }
}

const SHOOT_CONTROL: StepControl = StepControl {
    rel_tol: 1e-12,
    abs_tol: 1e-15,
};

/// Endpoint value `phi(b)` of the IVP shot with `phi(a) = 0, phi'(a) = 1`,
/// plus the running maximum of `phi` along the way.
fn shoot(mode: EigenMode, a: f64, b: f64, lambda: f64) -> Result<(f64, f64), RadialError> {
    let m = mode.m();
    let rhs = move |r: f64, y: &[f64; 2]| [y[1], -y[1] / r + m * y[0] / (r * r) - lambda * y[0]];
    let mut max_phi: f64 = 0.0;
    let y = integrate_to(&rhs, &SHOOT_CONTROL, a, [0.0, 1.0], b, 1_000_000, |_, y| {
        max_phi = max_phi.max(y[0].abs());
    })
    .ok_or(RadialError::StepLimit(b))?;
    Ok((y[0], max_phi))
}

/// Scan window for the eigenvalue bracket: ten times the Dirichlet band scale.
fn scan_window(a: f64, b: f64) -> f64 {
    let pi = std::f64::consts::PI;
    4.0 * pi * pi / ((b - a) * (b - a)) * 10.0
}

fn principal_eigenpair(
    mode: EigenMode,
    a: f64,
    b: f64,
    n: usize,
) -> Result<EigenPair, RadialError> {
    check_interval(a, b)?;
    if n < 64 {
        return Err(RadialError::TooFewSamples(n));
    }
    let window = scan_window(a, b);
    let scan_points = 256;
    let mut bracket = None;
    let mut prev: Option<(f64, f64)> = None;
    for j in 1..=scan_points {
        let lambda = window * j as f64 / scan_points as f64;
        let (val, _) = shoot(mode, a, b, lambda)?;
        if let Some((l_prev, v_prev)) = prev {
            if v_prev.signum() != val.signum() {
                bracket = Some((l_prev, v_prev, lambda, val));
                break;
            }
        }
        prev = Some((lambda, val));
    }
    let (mut lo, mut f_lo, mut hi, mut f_hi) =
        bracket.ok_or(RadialError::NoBracket { window })?;

    // secant refinement, safeguarded by the bracket
    let mut lambda = 0.5 * (lo + hi);
    let mut phi_scale = 1.0;
    for _ in 0..120 {
        let mut candidate = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        if !(candidate > lo && candidate < hi) || !candidate.is_finite() {
            candidate = 0.5 * (lo + hi);
        }
        let (val, max_phi) = shoot(mode, a, b, candidate)?;
        phi_scale = max_phi.max(f64::MIN_POSITIVE);
        lambda = candidate;
        if val.abs() <= 1e-13 * phi_scale {
            break;
        }
        if val.signum() == f_lo.signum() {
            lo = candidate;
            f_lo = val;
        } else {
            hi = candidate;
            f_hi = val;
        }
        if hi - lo <= f64::EPSILON * lambda.abs() {
            break;
        }
    }
    let (endpoint, _) = shoot(mode, a, b, lambda)?;
    if endpoint.abs() > 1e-11 * phi_scale {
        return Err(RadialError::NoConvergence(
            "secant refinement left a visible endpoint value",
        ));
    }

    // final pass: record phi, phi' on the sample radii
    let m = mode.m();
    let rhs = move |r: f64, y: &[f64; 2]| [y[1], -y[1] / r + m * y[0] / (r * r) - lambda * y[0]];
    let radii: Vec<f64> = (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect();
    let mut phi = vec![0.0; n];
    let mut phi_prime = vec![0.0; n];
    phi_prime[0] = 1.0;
    let mut y = [0.0, 1.0];
    for i in 1..n {
        y = integrate_to(
            &rhs,
            &SHOOT_CONTROL,
            radii[i - 1],
            y,
            radii[i],
            1_000_000,
            |_, _| {},
        )
        .ok_or(RadialError::StepLimit(radii[i]))?;
        phi[i] = y[0];
        phi_prime[i] = y[1];
    }
    // pin the endpoint and normalize to max phi = 1
    phi[n - 1] = 0.0;
    let max_phi = phi.iter().cloned().fold(f64::MIN, f64::max);
    for v in phi.iter_mut().chain(phi_prime.iter_mut()) {
        *v /= max_phi;
    }

    let fd_eigenvalue = fd_principal_eigenvalue(mode, a, b, FD_ORACLE_GRID)?;
    Ok(EigenPair {
        mode,
        eigenvalue: lambda,
        fd_eigenvalue,
        radii,
        phi,
        phi_prime,
    })
}

/// Principal pair of `-phi'' - phi'/r + phi/r^2 = lambda phi`, Dirichlet on `[a, b]`.
pub fn eigenpair_mode1(a: f64, b: f64, n: usize) -> Result<EigenPair, RadialError> {
    principal_eigenpair(EigenMode::ModeOne, a, b, n)
}

/// Principal pair of `-phi'' - phi'/r = mu phi`, Dirichlet on `[a, b]`.
pub fn eigenpair_mode0(a: f64, b: f64, n: usize) -> Result<EigenPair, RadialError> {
    principal_eigenpair(EigenMode::ModeZero, a, b, n)
}

/// Solution of the radial semilinear profile equation `U'' + U'/r + f(U) = 0`.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub radii: Vec<f64>,
    pub u: Vec<f64>,
    pub u_prime: Vec<f64>,
    /// Set when the requested start radius 0 was offset to a regular one.
    pub start_offset: Option<f64>,
}

impl RadialSolution {
    /// The derivative profile `V = U'` as a radial profile (the paired
    /// circular field is `circular_field` of this).
    pub fn derivative_profile(&self) -> Result<RadialProfile, InterpError> {
        RadialProfile::from_samples(self.radii.clone(), self.u_prime.clone())
    }

    /// CSV export: `r,U,Uprime` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,U,Uprime\n");
        for i in 0..self.radii.len() {
            out.push_str(&format!("{},{},{}\n", self.radii[i], self.u[i], self.u_prime[i]));
        }
        out
    }
}

/// Offset applied to a singular start radius `a = 0`.
pub const SINGULAR_START_OFFSET: f64 = 1e-2;

/// Integrate `U'' + U'/r + f(U) = 0` from `a` to `b` with `U(a) = u_a`,
/// `U'(a) = uprime_a`, sampling `n` radii. `f` returns `None` outside its
/// tabulated range, which aborts with the offending radius.
pub fn solve_radial_profile(
    f: impl Fn(f64) -> Option<f64>,
    a: f64,
    u_a: f64,
    uprime_a: f64,
    b: f64,
    n: usize,
) -> Result<RadialSolution, RadialError> {
    let (start, start_offset) = if a <= 0.0 {
        (SINGULAR_START_OFFSET, Some(SINGULAR_START_OFFSET))
    } else {
        (a, None)
    };
    check_interval(start, b)?;
    if n < 2 {
        return Err(RadialError::TooFewSamples(n));
    }
    let exhausted = std::cell::Cell::new(None);
    let rhs = |r: f64, y: &[f64; 2]| match f(y[0]) {
        Some(fu) => [y[1], -y[1] / r - fu],
        None => {
            if exhausted.get().is_none() {
                exhausted.set(Some((r, y[0])));
            }
            [f64::NAN, f64::NAN]
        }
    };
    let control = StepControl {
        rel_tol: 1e-10,
        abs_tol: 1e-13,
    };
    let radii: Vec<f64> = (0..n)
        .map(|i| start + (b - start) * i as f64 / (n - 1) as f64)
        .collect();
    let mut u = vec![0.0; n];
    let mut u_prime = vec![0.0; n];
    u[0] = u_a;
    u_prime[0] = uprime_a;
    let mut y = [u_a, uprime_a];
    for i in 1..n {
        match integrate_to(&rhs, &control, radii[i - 1], y, radii[i], 200_000, |_, _| {}) {
            Some(next) if next.iter().all(|v| v.is_finite()) => y = next,
            _ => {
                return Err(match exhausted.get() {
                    Some((radius, u)) => RadialError::ProfileExhausted { radius, u },
                    None => RadialError::StepLimit(radii[i]),
                })
            }
        }
        u[i] = y[0];
        u_prime[i] = y[1];
    }
    Ok(RadialSolution {
        radii,
        u,
        u_prime,
        start_offset,
    })
}

/// A circular field `v = V(|x|) e_theta` built from a radial profile, with
/// its sign report over the truncated band.
pub struct CircularField {
    pub field: VectorField,
    pub sign: SignReport,
}

/// Build the circular flow of a profile on a domain. The jacobian is analytic
/// through the profile's derivative (symbolic, sampled, or finite-difference).
pub fn circular_field(
    profile: RadialProfile,
    domain: &AnnularDomain,
) -> Result<CircularField, RadialError> {
    let sign = profile
        .sign_report(domain.trunc_inner, domain.trunc_outer, 512)
        .map_err(Box::new)?;
    let p_eval = profile.clone();
    let p_deriv = profile;
    let model = CircularModel::new(
        "circular_field",
        move |r| p_eval.eval(r).unwrap_or(f64::NAN),
        move |r| p_deriv.deriv(r).unwrap_or(f64::NAN),
    );
    let field = VectorField::new(
        std::sync::Arc::new(model),
        *domain,
        crate::flows::FieldKind::Expression,
    );
    Ok(CircularField { field, sign })
}

/// Inversion `w(x) = u(x / |x|^2)` of a stream grid: radii map to their
/// reciprocals (reversed to stay increasing), angular nodes are reused, and
/// values are copied without interpolation.
pub fn kelvin_transform(sg: &StreamGrid) -> Result<StreamGrid, RadialError> {
    let grid = sg.grid();
    let n_r = grid.n_r();
    let radii: Vec<f64> = grid.radii.iter().rev().map(|r| 1.0 / r).collect();
    let dom = grid.domain;
    let new_inner = if dom.is_unbounded() {
        0.0
    } else {
        1.0 / dom.outer_radius
    };
    let new_outer = if dom.is_punctured() {
        f64::INFINITY
    } else {
        1.0 / dom.inner_radius
    };
    let new_domain = crate::geometry::make_annulus(
        new_inner,
        new_outer,
        Some((1.0 / dom.trunc_outer, 1.0 / dom.trunc_inner)),
    )?;
    let new_grid = PolarGrid::from_radii(new_domain, radii, grid.n_theta())?;
    let mut values = vec![0.0; n_r * grid.n_theta()];
    for i in 0..n_r {
        for j in 0..grid.n_theta() {
            values[i * grid.n_theta() + j] = sg.value(n_r - 1 - i, j);
        }
    }
    let base = sg.base_point();
    let base_r2 = base.norm_sq();
    Ok(StreamGrid::from_values(
        new_grid,
        values,
        base.scale(1.0 / base_r2),
        sg.base_value(),
    ))
}

/// Residual of the inverted equation `Delta w + |x|^-4 f(w) = 0` over the
/// interior nodes of a transformed grid.
pub fn kelvin_residual(
    sg: &StreamGrid,
    profile: &VorticityProfile,
) -> crate::trace::ResidualReport {
    crate::trace::weighted_semilinear_residual(sg, |u| profile.eval_clamped(u), |r| r.powi(-4))
}
