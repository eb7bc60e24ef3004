//! Piecewise-cubic interpolation helpers.
//!
//! Two flavours: Fritsch-Carlson monotone cubics (PCHIP) for data that must
//! stay invertible, and plain cubic Hermite for ODE samples where the exact
//! derivative is known at the knots.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum InterpError {
    #[error("need at least 2 knots, got {0}")]
    TooFewKnots(usize),
    #[error("knots not strictly monotone at index {index} (x[{index}]={x:.6e} follows {prev:.6e})")]
    NotMonotone { index: usize, x: f64, prev: f64 },
    #[error("query {x:.6e} outside the tabulated range [{lo:.6e}, {hi:.6e}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
}

/// Fritsch-Carlson slopes for a monotone cubic Hermite interpolant.
/// `x` must be strictly increasing; the returned slopes keep the interpolant
/// monotone wherever the data are.
pub fn pchip_slopes(x: &[f64], y: &[f64]) -> Result<Vec<f64>, InterpError> {
    let n = x.len();
    if n < 2 {
        return Err(InterpError::TooFewKnots(n));
    }
    let mut delta = vec![0.0; n - 1];
    let mut h = vec![0.0; n - 1];
    for i in 0..n - 1 {
        h[i] = x[i + 1] - x[i];
        if h[i] <= 0.0 {
            return Err(InterpError::NotMonotone {
                index: i + 1,
                x: x[i + 1],
                prev: x[i],
            });
        }
        delta[i] = (y[i + 1] - y[i]) / h[i];
    }
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return Ok(d);
    }
    for i in 1..n - 1 {
        let (dp, dn) = (delta[i - 1], delta[i]);
        if dp == 0.0 || dn == 0.0 || dp.signum() != dn.signum() {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / dp + w2 / dn);
        }
    }
    d[0] = endpoint_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = endpoint_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    Ok(d)
}

fn endpoint_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let mut d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        d = 0.0;
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        d = 3.0 * del0;
    }
    d
}

/// Evaluate the cubic Hermite segment `(x0, y0, d0) -> (x1, y1, d1)` at `x`.
pub fn hermite_segment(x0: f64, y0: f64, d0: f64, x1: f64, y1: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Derivative of the cubic Hermite segment at `x`.
pub fn hermite_segment_deriv(x0: f64, y0: f64, d0: f64, x1: f64, y1: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let dh00 = (6.0 * t2 - 6.0 * t) / h;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = (-6.0 * t2 + 6.0 * t) / h;
    let dh11 = 3.0 * t2 - 2.0 * t;
    dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1
}

/// Piecewise cubic Hermite interpolant on strictly increasing knots.
///
/// Construct with exact slopes ([`CubicHermite::with_slopes`]) or with
/// Fritsch-Carlson slopes ([`CubicHermite::pchip`]) when monotonicity of the
/// interpolant matters more than order of accuracy.
#[derive(Debug, Clone)]
pub struct CubicHermite {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl CubicHermite {
    pub fn pchip(x: Vec<f64>, y: Vec<f64>) -> Result<CubicHermite, InterpError> {
        let d = pchip_slopes(&x, &y)?;
        Ok(CubicHermite { x, y, d })
    }

    pub fn with_slopes(x: Vec<f64>, y: Vec<f64>, d: Vec<f64>) -> Result<CubicHermite, InterpError> {
        if x.len() < 2 {
            return Err(InterpError::TooFewKnots(x.len()));
        }
        for i in 1..x.len() {
            if x[i] <= x[i - 1] {
                return Err(InterpError::NotMonotone {
                    index: i,
                    x: x[i],
                    prev: x[i - 1],
                });
            }
        }
        assert_eq!(x.len(), y.len());
        assert_eq!(x.len(), d.len());
        Ok(CubicHermite { x, y, d })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    fn segment(&self, x: f64) -> Result<usize, InterpError> {
        let (lo, hi) = self.range();
        if x < lo || x > hi {
            return Err(InterpError::OutOfRange { x, lo, hi });
        }
        let i = match self
            .x
            .binary_search_by(|v| v.partial_cmp(&x).expect("finite knots"))
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        Ok(i.min(self.x.len() - 2))
    }

    pub fn eval(&self, x: f64) -> Result<f64, InterpError> {
        let i = self.segment(x)?;
        Ok(hermite_segment(
            self.x[i],
            self.y[i],
            self.d[i],
            self.x[i + 1],
            self.y[i + 1],
            self.d[i + 1],
            x,
        ))
    }

    pub fn deriv(&self, x: f64) -> Result<f64, InterpError> {
        let i = self.segment(x)?;
        Ok(hermite_segment_deriv(
            self.x[i],
            self.y[i],
            self.d[i],
            self.x[i + 1],
            self.y[i + 1],
            self.d[i + 1],
            x,
        ))
    }

    /// Clamped evaluation: queries outside the knot range return the endpoint
    /// values instead of erroring.
    pub fn eval_clamped(&self, x: f64) -> f64 {
        let (lo, hi) = self.range();
        match self.eval(x.clamp(lo, hi)) {
            Ok(v) => v,
            Err(_) => unreachable!("clamped query is in range"),
        }
    }
}
