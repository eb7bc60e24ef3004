//! Embedded Dormand-Prince 5(4) stepping and adaptive Simpson quadrature.
//!
//! The stepper is deliberately low-level: callers own the integration loop so
//! they can watch for events (orbit closure, band exit, landing on a sample
//! radius) between accepted steps.

/// One Dormand-Prince 5(4) step. Returns the 5th-order solution and the
/// embedded error estimate (difference of the 5th and 4th order results).
pub fn dopri5_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> ([f64; N], [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    #[rustfmt::skip]
    let (a21, a31, a32, a41, a42, a43, a51, a52, a53, a54, a61, a62, a63, a64, a65) = (
        1.0 / 5.0,
        3.0 / 40.0, 9.0 / 40.0,
        44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0,
        19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0,
        9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0,
    );
    let b = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    // b5 - b4: weights of the embedded error estimate
    let e = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];

    let axpy = |y: &[f64; N], coeffs: &[(f64, &[f64; N])]| {
        let mut out = *y;
        for (c, k) in coeffs {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
        out
    };

    let k1 = f(t, y);
    let k2 = f(t + h / 5.0, &axpy(y, &[(a21, &k1)]));
    let k3 = f(t + 3.0 * h / 10.0, &axpy(y, &[(a31, &k1), (a32, &k2)]));
    let k4 = f(
        t + 4.0 * h / 5.0,
        &axpy(y, &[(a41, &k1), (a42, &k2), (a43, &k3)]),
    );
    let k5 = f(
        t + 8.0 * h / 9.0,
        &axpy(y, &[(a51, &k1), (a52, &k2), (a53, &k3), (a54, &k4)]),
    );
    let k6 = f(
        t + h,
        &axpy(
            y,
            &[(a61, &k1), (a62, &k2), (a63, &k3), (a64, &k4), (a65, &k5)],
        ),
    );
    let y5 = axpy(
        y,
        &[(b[0], &k1), (b[2], &k3), (b[3], &k4), (b[4], &k5), (b[5], &k6)],
    );
    let k7 = f(t + h, &y5);

    let ks = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
    let mut err = [0.0; N];
    for (c, k) in e.iter().zip(ks) {
        for i in 0..N {
            err[i] += h * c * k[i];
        }
    }
    (y5, err)
}

/// Step-size controller for the embedded pair.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl StepControl {
    /// Scaled RMS norm of the error estimate; a step is acceptable iff <= 1.
    pub fn error_norm<const N: usize>(&self, y: &[f64; N], y_new: &[f64; N], err: &[f64; N]) -> f64 {
        let mut acc = 0.0;
        for i in 0..N {
            let scale = self.abs_tol + self.rel_tol * y[i].abs().max(y_new[i].abs());
            let r = err[i] / scale;
            acc += r * r;
        }
        (acc / N as f64).sqrt()
    }

    /// Next step size after a step with the given error norm (order-5 rule,
    /// safety factor 0.9, growth clamped to [0.2, 5]).
    pub fn next_h(&self, h: f64, err_norm: f64) -> f64 {
        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h * factor
    }
}

/// Integrate from `t0` to `t1` (either direction), landing exactly on `t1`.
/// `visit` sees every accepted step `(t, y)` including the endpoint.
/// Returns the final state, or `None` when the step count runs out.
pub fn integrate_to<const N: usize, F>(
    f: &F,
    control: &StepControl,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    max_steps: usize,
    mut visit: impl FnMut(f64, &[f64; N]),
) -> Option<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if t0 == t1 {
        return Some(y0);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut t = t0;
    let mut y = y0;
    let mut h = dir * (span / 100.0).min(span);
    for _ in 0..max_steps {
        if (t1 - t) * dir <= 0.0 {
            return Some(y);
        }
        if (h.abs() > (t1 - t).abs()) || ((t + h - t1) * dir > 0.0) {
            h = t1 - t;
        }
        let (y_new, err) = dopri5_step(f, t, &y, h);
        let err_norm = control.error_norm(&y, &y_new, &err);
        if err_norm <= 1.0 {
            t += h;
            y = y_new;
            visit(t, &y);
            if (t1 - t) * dir <= 0.0 {
                return Some(y);
            }
        }
        h = control.next_h(h, err_norm);
    }
    None
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // bail on non-finite values instead of recursing forever
    if depth == 0 || !delta.is_finite() || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}
