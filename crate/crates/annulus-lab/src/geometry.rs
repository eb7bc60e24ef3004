//! Annular domains, polar grids, circles, and polygonal Jordan curves.
//!
//! Everything else in the crate works on top of these types: domains fix the
//! radial band a field lives on, polar grids carry sampled scalar data, and
//! Jordan polygons stand in for closed streamlines and level sets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Counterclockwise rotation by 90 degrees.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    /// Polar angle in `(-pi, pi]`.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn from_polar(r: f64, theta: f64) -> Point {
        Point::new(r * theta.cos(), r * theta.sin())
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid annulus radii: need 0 <= inner < outer, got inner={inner}, outer={outer}")]
    InvalidRadii { inner: f64, outer: f64 },
    #[error("truncation band [{trunc_inner}, {trunc_outer}] not inside ({inner}, {outer})")]
    InvalidTruncation {
        inner: f64,
        outer: f64,
        trunc_inner: f64,
        trunc_outer: f64,
    },
    #[error("grid needs n_r >= 4 and n_theta >= 8, got n_r={n_r}, n_theta={n_theta}")]
    GridTooCoarse { n_r: usize, n_theta: usize },
    #[error("degenerate radial band: trunc_inner == trunc_outer == {0}")]
    DegenerateBand(f64),
    #[error("circle sampling needs r > 0 and n >= 3, got r={r}, n={n}")]
    BadCircle { r: f64, n: usize },
    #[error("polygon needs at least 3 vertices with nonzero area")]
    DegeneratePolygon,
    #[error("query point lies on the polygon boundary (distance {distance:.3e} to nearest edge)")]
    OnBoundary { distance: f64 },
}

/// Annular domain `{ x : a < |x| < b }` with `0 <= a < b <= inf`.
///
/// Unbounded (`b = inf`) and punctured (`a = 0`) cases carry a truncation
/// band `[trunc_inner, trunc_outer]` on which grids and quadratures act;
/// membership tests always use the true radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnularDomain {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub trunc_inner: f64,
    pub trunc_outer: f64,
}

/// Build an annular domain. `b` may be `f64::INFINITY`; `trunc` overrides the
/// default truncation band and must lie strictly inside `(a, b)`.
///
/// Defaults: `trunc_outer = min(b, 100 * max(a, 1))`, then
/// `trunc_inner = max(a, trunc_outer / 1000)`.
pub fn make_annulus(
    a: f64,
    b: f64,
    trunc: Option<(f64, f64)>,
) -> Result<AnnularDomain, GeometryError> {
    if !(a >= 0.0) || !(b > a) || a.is_infinite() {
        return Err(GeometryError::InvalidRadii { inner: a, outer: b });
    }
    let (trunc_inner, trunc_outer) = match trunc {
        Some((ti, to)) => (ti, to),
        None => {
            let to = b.min(100.0 * a.max(1.0));
            let ti = a.max(to / 1000.0);
            (ti, to)
        }
    };
    let ok = trunc_inner > 0.0
        && trunc_inner >= a
        && trunc_inner < trunc_outer
        && trunc_outer <= b
        && trunc_outer.is_finite();
    if !ok {
        return Err(GeometryError::InvalidTruncation {
            inner: a,
            outer: b,
            trunc_inner,
            trunc_outer,
        });
    }
    Ok(AnnularDomain {
        inner_radius: a,
        outer_radius: b,
        trunc_inner,
        trunc_outer,
    })
}

impl AnnularDomain {
    /// Strict membership `a < |x| < b` (true radii, not the truncation band).
    pub fn contains(&self, x: Point) -> bool {
        let r = x.norm();
        self.inner_radius < r && r < self.outer_radius
    }

    /// Whether a radius lies in the truncated working band (inclusive).
    pub fn in_band(&self, r: f64) -> bool {
        self.trunc_inner <= r && r <= self.trunc_outer
    }

    pub fn is_punctured(&self) -> bool {
        self.inner_radius == 0.0
    }

    pub fn is_unbounded(&self) -> bool {
        self.outer_radius.is_infinite()
    }

    /// Replace the truncation band, keeping the true radii.
    pub fn with_truncation(&self, ti: f64, to: f64) -> Result<AnnularDomain, GeometryError> {
        make_annulus(self.inner_radius, self.outer_radius, Some((ti, to)))
    }
}

/// Ratio of outer to inner truncation radius above which grids switch from
/// uniform to geometric radial spacing.
pub const GEOMETRIC_SPACING_RATIO: f64 = 10.0;

/// Polar tensor grid over the truncated band of an annular domain.
///
/// Radii are strictly increasing (uniform, or geometric when the band spans
/// more than a factor [`GEOMETRIC_SPACING_RATIO`]); angles are uniform on
/// `[0, 2*pi)`. Node `(i, j)` sits at `(radii[i] cos(angles[j]), radii[i] sin(angles[j]))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub domain: AnnularDomain,
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
}

/// Build a polar grid with `n_r` radii and `n_theta` angles over the domain's
/// truncation band.
pub fn polar_grid(
    domain: &AnnularDomain,
    n_r: usize,
    n_theta: usize,
) -> Result<PolarGrid, GeometryError> {
    if n_r < 4 || n_theta < 8 {
        return Err(GeometryError::GridTooCoarse { n_r, n_theta });
    }
    let (ti, to) = (domain.trunc_inner, domain.trunc_outer);
    if ti == to {
        return Err(GeometryError::DegenerateBand(ti));
    }
    let radii: Vec<f64> = if to / ti > GEOMETRIC_SPACING_RATIO {
        let ratio = (to / ti).powf(1.0 / (n_r - 1) as f64);
        (0..n_r).map(|i| ti * ratio.powi(i as i32)).collect()
    } else {
        let h = (to - ti) / (n_r - 1) as f64;
        (0..n_r).map(|i| ti + h * i as f64).collect()
    };
    let dtheta = std::f64::consts::TAU / n_theta as f64;
    let angles = (0..n_theta).map(|j| dtheta * j as f64).collect();
    Ok(PolarGrid {
        domain: *domain,
        radii,
        angles,
    })
}

impl PolarGrid {
    /// Grid with explicit radii (used by the Kelvin transform, which re-indexes
    /// rather than resamples). Radii must be strictly increasing and in-band.
    pub fn from_radii(
        domain: AnnularDomain,
        radii: Vec<f64>,
        n_theta: usize,
    ) -> Result<PolarGrid, GeometryError> {
        if radii.len() < 4 || n_theta < 8 {
            return Err(GeometryError::GridTooCoarse {
                n_r: radii.len(),
                n_theta,
            });
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GeometryError::DegenerateBand(radii[0]));
        }
        let dtheta = std::f64::consts::TAU / n_theta as f64;
        let angles = (0..n_theta).map(|j| dtheta * j as f64).collect();
        Ok(PolarGrid {
            domain,
            radii,
            angles,
        })
    }

    pub fn n_r(&self) -> usize {
        self.radii.len()
    }

    pub fn n_theta(&self) -> usize {
        self.angles.len()
    }

    pub fn node(&self, i: usize, j: usize) -> Point {
        Point::from_polar(self.radii[i], self.angles[j])
    }

    /// Local radial spacing around radius index `i`.
    pub fn radial_step(&self, i: usize) -> f64 {
        let n = self.radii.len();
        if i == 0 {
            self.radii[1] - self.radii[0]
        } else if i == n - 1 {
            self.radii[n - 1] - self.radii[n - 2]
        } else {
            0.5 * (self.radii[i + 1] - self.radii[i - 1])
        }
    }

    pub fn angular_step(&self) -> f64 {
        std::f64::consts::TAU / self.n_theta() as f64
    }

    /// Index of the largest radius <= r, clamped to `[0, n_r - 2]`.
    pub fn radial_cell(&self, r: f64) -> usize {
        match self
            .radii
            .binary_search_by(|v| v.partial_cmp(&r).expect("grid radii are finite"))
        {
            Ok(i) => i.min(self.n_r() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.n_r() - 2),
        }
    }
}

/// Sample `n` equally spaced points on the circle of radius `r`.
pub fn circle_samples(r: f64, n: usize) -> Result<Vec<Point>, GeometryError> {
    if !(r > 0.0) || n < 3 {
        return Err(GeometryError::BadCircle { r, n });
    }
    Ok((0..n)
        .map(|k| Point::from_polar(r, std::f64::consts::TAU * k as f64 / n as f64))
        .collect())
}

/// Closed simple polygon with a stored orientation (+1 counterclockwise,
/// -1 clockwise, from the signed area). The vertex list is not repeated:
/// the closing edge `last -> first` is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanPolygon {
    vertices: Vec<Point>,
    orientation: i32,
}

impl JordanPolygon {
    pub fn new(vertices: Vec<Point>) -> Result<JordanPolygon, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::DegeneratePolygon);
        }
        let area2 = signed_area_2(&vertices);
        if area2 == 0.0 || !area2.is_finite() {
            return Err(GeometryError::DegeneratePolygon);
        }
        Ok(JordanPolygon {
            vertices,
            orientation: if area2 > 0.0 { 1 } else { -1 },
        })
    }

    /// Regular `n`-gon inscribed in the circle of radius `r` (counterclockwise).
    pub fn circle(r: f64, n: usize) -> Result<JordanPolygon, GeometryError> {
        JordanPolygon::new(circle_samples(r, n)?)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn orientation(&self) -> i32 {
        self.orientation
    }

    pub fn reversed(&self) -> JordanPolygon {
        let mut v = self.vertices.clone();
        v.reverse();
        JordanPolygon {
            vertices: v,
            orientation: -self.orientation,
        }
    }

    /// Edges as vertex pairs, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Midpoints of all edges.
    pub fn edge_midpoints(&self) -> Vec<Point> {
        self.edges()
            .map(|(a, b)| Point::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y)))
            .collect()
    }

    pub fn max_radius(&self) -> f64 {
        self.vertices.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    pub fn min_radius(&self) -> f64 {
        self.vertices
            .iter()
            .map(|p| p.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest value of `x . e` over the vertices (the sweep limit for
    /// reflections along direction `e`).
    pub fn support(&self, e: Point) -> f64 {
        self.vertices
            .iter()
            .map(|p| p.dot(e))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Distance from `x` to the nearest polygon edge.
    pub fn distance_to_boundary(&self, x: Point) -> f64 {
        self.edges()
            .map(|(a, b)| segment_distance(x, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Strict interior test by nonzero winding (boundary-proximate points
    /// count as outside; use [`winding_number`] for the checked variant).
    pub fn contains(&self, x: Point) -> bool {
        raw_winding(&self.vertices, x) != 0
    }
}

fn signed_area_2(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    acc
}

fn segment_distance(x: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return x.distance(a);
    }
    let t = ((x - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    x.distance(a + ab.scale(t))
}

/// Winding number by signed horizontal-ray crossings. No boundary check.
fn raw_winding(vertices: &[Point], x: Point) -> i32 {
    let n = vertices.len();
    let mut winding = 0i32;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if a.y <= x.y {
            if b.y > x.y {
                // upward crossing
                if cross(b - a, x - a) > 0.0 {
                    winding += 1;
                }
            }
        } else if b.y <= x.y {
            // downward crossing
            if cross(b - a, x - a) < 0.0 {
                winding -= 1;
            }
        }
    }
    winding
}

fn cross(u: Point, v: Point) -> f64 {
    u.x * v.y - u.y * v.x
}

/// Signed winding number of the polygon about `x`: `orientation` for points
/// inside a simple curve, 0 outside.
///
/// Errors with the nearest-edge distance if `x` sits on the boundary within
/// `tol` (relative to the polygon scale).
pub fn winding_number(poly: &JordanPolygon, x: Point) -> Result<i32, GeometryError> {
    let scale = poly.max_radius().max(x.norm()).max(1e-300);
    winding_number_with_tol(poly, x, 1e-12 * scale)
}

/// As [`winding_number`] with an explicit boundary-ambiguity tolerance.
pub fn winding_number_with_tol(
    poly: &JordanPolygon,
    x: Point,
    tol: f64,
) -> Result<i32, GeometryError> {
    let distance = poly.distance_to_boundary(x);
    if distance <= tol {
        return Err(GeometryError::OnBoundary { distance });
    }
    Ok(raw_winding(&poly.vertices, x))
}
