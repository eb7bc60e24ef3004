//! Stream-function reconstruction and the hypothesis diagnostics: circle
//! fluxes, oscillations, stagnation classification, and radial decay trends.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flows::{FlowError, VectorField};
use crate::geometry::{AnnularDomain, GeometryError, Point, PolarGrid};
use crate::ode::adaptive_simpson;

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("circle of radius {r:.6e} outside the truncated band [{lo:.6e}, {hi:.6e}]")]
    CircleOutsideBand { r: f64, lo: f64, hi: f64 },
    #[error("stream function is multivalued: net radial flux {flux:.6e} through the base circle exceeds the tolerance {tol:.3e}")]
    Multivalued { flux: f64, tol: f64 },
    #[error("interpolation radius {radius:.6e} outside the grid band [{lo:.6e}, {hi:.6e}]")]
    OutOfBand { radius: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Flow(#[from] Box<FlowError>),
}

/// Per-leg quadrature tolerance for the stream reconstruction.
pub const LEG_TOLERANCE: f64 = 1e-10;

fn check_circle(field: &VectorField, r: f64) -> Result<(), StreamError> {
    let dom = field.domain();
    let slack = 1e-12 * dom.trunc_outer;
    if r < dom.trunc_inner - slack || r > dom.trunc_outer + slack {
        return Err(StreamError::CircleOutsideBand {
            r,
            lo: dom.trunc_inner,
            hi: dom.trunc_outer,
        });
    }
    Ok(())
}

/// Trapezoid value of the absolute radial flux through the circle of radius
/// `r`: the integral of `|v . e_r|` over the circle, `n >= 64` samples.
pub fn flux_abs_on_circle(field: &VectorField, r: f64, n: usize) -> Result<f64, StreamError> {
    check_circle(field, r)?;
    let n = n.max(64);
    let mut acc = 0.0;
    for k in 0..n {
        let theta = std::f64::consts::TAU * k as f64 / n as f64;
        acc += field.radial_component(Point::from_polar(r, theta)).abs();
    }
    Ok(acc * r * std::f64::consts::TAU / n as f64)
}

/// Signed radial flux through the circle of radius `r`; vanishes for
/// divergence-free fields tangential on the inner boundary.
pub fn signed_flux_on_circle(field: &VectorField, r: f64, n: usize) -> Result<f64, StreamError> {
    check_circle(field, r)?;
    let n = n.max(64);
    let mut acc = 0.0;
    for k in 0..n {
        let theta = std::f64::consts::TAU * k as f64 / n as f64;
        acc += field.radial_component(Point::from_polar(r, theta));
    }
    Ok(acc * r * std::f64::consts::TAU / n as f64)
}

/// Maximum of `|v . e_r|` on the circle of radius `r` (tangency audit).
pub fn tangency_max(field: &VectorField, r: f64, n: usize) -> f64 {
    (0..n)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / n as f64;
            field.radial_component(Point::from_polar(r, theta)).abs()
        })
        .fold(0.0, f64::max)
}

/// Default single-valuedness tolerance: `1e-8 (1 + circumference integral of |v|)`.
pub fn default_flux_tolerance(field: &VectorField, r: f64) -> f64 {
    let n = 512;
    let mut speed_integral = 0.0;
    for k in 0..n {
        let theta = std::f64::consts::TAU * k as f64 / n as f64;
        speed_integral += field.speed(Point::from_polar(r, theta));
    }
    speed_integral *= r * std::f64::consts::TAU / n as f64;
    1e-8 * (1.0 + speed_integral)
}

/// Stream-function samples on a polar grid.
///
/// Values are single-valued (enforced at construction by the flux
/// precondition) and interpolate bilinearly in `(r, theta)` with periodic
/// wrap in `theta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreamGrid {
    grid: PolarGrid,
    values: Vec<f64>,
    base_point: Point,
    base_value: f64,
    /// Largest difference between the two integration leg orders.
    pub path_discrepancy: f64,
}

impl StreamGrid {
    pub fn from_values(
        grid: PolarGrid,
        values: Vec<f64>,
        base_point: Point,
        base_value: f64,
    ) -> StreamGrid {
        assert_eq!(values.len(), grid.n_r() * grid.n_theta());
        StreamGrid {
            grid,
            values,
            base_point,
            base_value,
            path_discrepancy: 0.0,
        }
    }

    /// Sample a closed-form scalar onto the grid.
    pub fn from_fn(grid: PolarGrid, f: impl Fn(Point) -> f64) -> StreamGrid {
        let mut values = vec![0.0; grid.n_r() * grid.n_theta()];
        for i in 0..grid.n_r() {
            for j in 0..grid.n_theta() {
                values[i * grid.n_theta() + j] = f(grid.node(i, j));
            }
        }
        let base_point = grid.node(0, 0);
        let base_value = values[0];
        StreamGrid {
            grid,
            values,
            base_point,
            base_value,
            path_discrepancy: 0.0,
        }
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_theta() + j]
    }

    pub fn base_point(&self) -> Point {
        self.base_point
    }

    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    pub fn value_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Sign-flipped copy (used when a comparator wants `-u`).
    pub fn negated(&self) -> StreamGrid {
        StreamGrid {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| -v).collect(),
            base_point: self.base_point,
            base_value: -self.base_value,
            path_discrepancy: self.path_discrepancy,
        }
    }

    /// Bilinear interpolation at polar coordinates.
    pub fn interp_polar(&self, r: f64, theta: f64) -> Result<f64, StreamError> {
        let g = &self.grid;
        let (lo, hi) = (g.radii[0], *g.radii.last().unwrap());
        let slack = 1e-12 * hi;
        if r < lo - slack || r > hi + slack {
            return Err(StreamError::OutOfBand { radius: r, lo, hi });
        }
        let r = r.clamp(lo, hi);
        let i = g.radial_cell(r);
        let tr = ((r - g.radii[i]) / (g.radii[i + 1] - g.radii[i])).clamp(0.0, 1.0);
        let n_th = g.n_theta();
        let t = theta.rem_euclid(std::f64::consts::TAU) / g.angular_step();
        let j = (t.floor() as usize).min(n_th - 1);
        let tt = t - j as f64;
        let j1 = (j + 1) % n_th;
        let v = |ii: usize, jj: usize| self.value(ii, jj);
        let low = v(i, j) * (1.0 - tt) + v(i, j1) * tt;
        let high = v(i + 1, j) * (1.0 - tt) + v(i + 1, j1) * tt;
        Ok(low * (1.0 - tr) + high * tr)
    }

    pub fn interp(&self, x: Point) -> Result<f64, StreamError> {
        self.interp_polar(x.norm(), x.angle())
    }

    /// Finite-difference Cartesian gradient at a node (central stencils, with
    /// one-sided radial stencils on the boundary rows).
    pub fn node_gradient(&self, i: usize, j: usize) -> Point {
        let g = &self.grid;
        let n_r = g.n_r();
        let n_th = g.n_theta();
        let r = g.radii[i];
        let theta = g.angles[j];
        let jm = (j + n_th - 1) % n_th;
        let jp = (j + 1) % n_th;
        let du_dth = (self.value(i, jp) - self.value(i, jm)) / (2.0 * g.angular_step());
        let du_dr = if i == 0 {
            one_sided_deriv(
                g.radii[0],
                g.radii[1],
                g.radii[2],
                self.value(0, j),
                self.value(1, j),
                self.value(2, j),
            )
        } else if i == n_r - 1 {
            -one_sided_deriv(
                g.radii[n_r - 1],
                g.radii[n_r - 2],
                g.radii[n_r - 3],
                self.value(n_r - 1, j),
                self.value(n_r - 2, j),
                self.value(n_r - 3, j),
            )
        } else {
            let hm = r - g.radii[i - 1];
            let hp = g.radii[i + 1] - r;
            (hm * hm * self.value(i + 1, j) + (hp * hp - hm * hm) * self.value(i, j)
                - hp * hp * self.value(i - 1, j))
                / (hm * hp * (hm + hp))
        };
        let (s, c) = theta.sin_cos();
        // grad u = u_r e_r + (u_theta / r) e_theta
        Point::new(
            du_dr * c - du_dth * s / r,
            du_dr * s + du_dth * c / r,
        )
    }

    /// Five-point polar Laplacian at an interior node.
    pub fn polar_laplacian(&self, i: usize, j: usize) -> f64 {
        let g = &self.grid;
        let n_th = g.n_theta();
        let r = g.radii[i];
        let hm = r - g.radii[i - 1];
        let hp = g.radii[i + 1] - r;
        let u = self.value(i, j);
        let u_m = self.value(i - 1, j);
        let u_p = self.value(i + 1, j);
        let u_rr = 2.0 * ((u_p - u) / hp - (u - u_m) / hm) / (hm + hp);
        let u_r = (hm * hm * u_p + (hp * hp - hm * hm) * u - hp * hp * u_m) / (hm * hp * (hm + hp));
        let jm = (j + n_th - 1) % n_th;
        let jp = (j + 1) % n_th;
        let dth = g.angular_step();
        let u_tt = (self.value(i, jp) - 2.0 * u + self.value(i, jm)) / (dth * dth);
        u_rr + u_r / r + u_tt / (r * r)
    }
}

// second-order one-sided derivative at r0 from samples at r0 < r1 < r2
// (or r0 > r1 > r2 with the caller flipping the sign)
fn one_sided_deriv(r0: f64, r1: f64, r2: f64, u0: f64, u1: f64, u2: f64) -> f64 {
    let h1 = (r1 - r0).abs();
    let h2 = (r2 - r1).abs();
    -u0 * (2.0 * h1 + h2) / (h1 * (h1 + h2)) + u1 * (h1 + h2) / (h1 * h2)
        - u2 * h1 / (h2 * (h1 + h2))
}

/// Reconstruct the stream function on a grid by path integration from
/// `base`, where the stream value is `base_value`.
///
/// The stored value at each node integrates the radial leg at the base angle
/// and then the angular leg along the node's circle; the reversed leg order
/// is integrated too and the largest disagreement recorded as
/// `path_discrepancy`.
pub fn stream_on_grid(
    field: &VectorField,
    grid: &PolarGrid,
    base: Point,
    base_value: f64,
) -> Result<StreamGrid, StreamError> {
    let r0 = base.norm();
    let theta0 = base.angle().rem_euclid(std::f64::consts::TAU);
    check_circle(field, r0)?;
    let flux = signed_flux_on_circle(field, r0, 4 * grid.n_theta())?;
    let tol = default_flux_tolerance(field, r0);
    if flux.abs() > tol {
        return Err(StreamError::Multivalued { flux, tol });
    }

    let n_r = grid.n_r();
    let n_th = grid.n_theta();
    let seg_tol_r = (LEG_TOLERANCE / n_r as f64).min(1e-12);
    let seg_tol_a = (LEG_TOLERANCE / n_th as f64).min(1e-12);

    // du/dr = v . e_theta along a fixed angle
    let radial_integrand = |theta: f64| {
        move |r: f64| field.angular_component(Point::from_polar(r, theta))
    };
    // du/dtheta = -r (v . e_r) along a fixed circle
    let angular_integrand = |r: f64| {
        move |theta: f64| -r * field.radial_component(Point::from_polar(r, theta))
    };

    // cumulative radial integrals from radii[0] at every grid angle and at theta0
    let mut cum_radial = vec![vec![0.0; n_r]; n_th];
    for (j, col) in cum_radial.iter_mut().enumerate() {
        let f = radial_integrand(grid.angles[j]);
        for i in 1..n_r {
            col[i] = col[i - 1] + adaptive_simpson(&f, grid.radii[i - 1], grid.radii[i], seg_tol_r);
        }
    }
    let f0 = radial_integrand(theta0);
    let mut cum_radial_base = vec![0.0; n_r];
    for i in 1..n_r {
        cum_radial_base[i] =
            cum_radial_base[i - 1] + adaptive_simpson(&f0, grid.radii[i - 1], grid.radii[i], seg_tol_r);
    }
    // stub from radii[0] to the base radius, per angle
    let stub_base_theta0 = adaptive_simpson(&f0, grid.radii[0], r0, seg_tol_r);
    let stubs: Vec<f64> = (0..n_th)
        .map(|j| adaptive_simpson(&radial_integrand(grid.angles[j]), grid.radii[0], r0, seg_tol_r))
        .collect();

    // angular cumulative from angles[0] on every circle, plus the circle of the base point
    let angular_cumulative = |r: f64| -> (Vec<f64>, f64) {
        let f = angular_integrand(r);
        let mut cum = vec![0.0; n_th];
        for j in 1..n_th {
            cum[j] = cum[j - 1] + adaptive_simpson(&f, grid.angles[j - 1], grid.angles[j], seg_tol_a);
        }
        let at_theta0 = adaptive_simpson(&f, 0.0, theta0, seg_tol_a);
        (cum, at_theta0)
    };
    let (cum_base_circle, base_circle_at_theta0) = angular_cumulative(r0);

    let mut values = vec![0.0; n_r * n_th];
    let mut discrepancy: f64 = 0.0;
    for i in 0..n_r {
        let (cum_i, cum_i_at_theta0) = angular_cumulative(grid.radii[i]);
        for j in 0..n_th {
            // radial first (at theta0), then angular along the node's circle
            let radial_first = (cum_radial_base[i] - stub_base_theta0)
                + (cum_i[j] - cum_i_at_theta0);
            // angular first (along the base circle), then radial at angles[j]
            let angular_first = (cum_base_circle[j] - base_circle_at_theta0)
                + (cum_radial[j][i] - stubs[j]);
            values[i * n_th + j] = base_value + radial_first;
            discrepancy = discrepancy.max((radial_first - angular_first).abs());
        }
    }
    Ok(StreamGrid {
        grid: grid.clone(),
        values,
        base_point: base,
        base_value,
        path_discrepancy: discrepancy,
    })
}

/// Oscillation `max - min` of the interpolated stream values over the circle
/// of radius `r`, sampled at four times the angular resolution.
pub fn circle_oscillation(sg: &StreamGrid, r: f64) -> Result<f64, StreamError> {
    let n = 4 * sg.grid().n_theta();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..n {
        let theta = std::f64::consts::TAU * k as f64 / n as f64;
        let v = sg.interp_polar(r, theta)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(hi - lo)
}

/// Where the speed of a flow (nearly) vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StagnationClass {
    Empty,
    ProperSubsetInner,
    ProperSubsetOuter,
    FullCircle,
    InteriorPresent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterSite {
    Interior,
    InnerBoundary,
    OuterBoundary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StagnationCluster {
    pub representative: Point,
    pub mean_radius: f64,
    /// Fraction of the sampled arc the cluster covers on its circle.
    pub angular_coverage: f64,
    pub site: ClusterSite,
    pub min_speed: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StagnationReport {
    pub interior_points: Vec<Point>,
    pub boundary_inner_fraction: f64,
    pub boundary_outer_fraction: f64,
    pub classification: StagnationClass,
    pub clusters: Vec<StagnationCluster>,
    pub tol_speed: f64,
}

/// Default speed tolerance: `1e-6` times the median speed on the audit grid.
pub fn default_tol_speed(field: &VectorField, domain: &AnnularDomain) -> f64 {
    let grid = audit_grid(domain);
    let mut speeds: Vec<f64> = Vec::with_capacity(grid.n_r() * grid.n_theta());
    for i in 0..grid.n_r() {
        for j in 0..grid.n_theta() {
            speeds.push(field.speed(grid.node(i, j)));
        }
    }
    speeds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    1e-6 * speeds[speeds.len() / 2]
}

const AUDIT_N_R: usize = 96;
const AUDIT_N_THETA: usize = 384;
/// Index distance (in audit-grid steps) within which near-zeros merge into
/// one cluster.
const CLUSTER_STEPS: f64 = 3.0;

fn audit_grid(domain: &AnnularDomain) -> PolarGrid {
    crate::geometry::polar_grid(domain, AUDIT_N_R, AUDIT_N_THETA)
        .expect("audit grid dimensions are valid")
}

/// Locate and classify the stagnation set of a field: near-zero speeds on a
/// dense audit grid are polished by damped Gauss-Newton, accepted when the
/// refined speed is at most `tol_speed`, and clustered within three grid
/// steps.
pub fn classify_stagnation(
    field: &VectorField,
    domain: &AnnularDomain,
    tol_speed: f64,
) -> StagnationReport {
    let grid = audit_grid(domain);
    let n_r = grid.n_r();
    let n_th = grid.n_theta();
    let mut speed = vec![0.0; n_r * n_th];
    for i in 0..n_r {
        for j in 0..n_th {
            speed[i * n_th + j] = field.speed(grid.node(i, j));
        }
    }
    let at = |i: usize, j: usize| speed[i * n_th + (j % n_th)];

    // radial clamp for the polish steps: stay in the true domain, never past
    // the outer truncation
    let lo_r = if domain.is_punctured() {
        1e-12
    } else {
        domain.trunc_inner
    };
    let hi_r = domain.trunc_outer;

    let mut accepted: Vec<(Point, f64)> = Vec::new();
    for i in 0..n_r {
        for j in 0..n_th {
            let s = at(i, j);
            let mut is_min = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ii = i as i64 + di;
                    if ii < 0 || ii >= n_r as i64 {
                        continue;
                    }
                    let jj = (j as i64 + dj).rem_euclid(n_th as i64) as usize;
                    // ties within rounding still count as minima, so flat
                    // rings keep a candidate in every column
                    if at(ii as usize, jj) < s * (1.0 - 1e-12) {
                        is_min = false;
                    }
                }
            }
            if !is_min {
                continue;
            }
            if let Some((x, v)) = polish_zero(field, grid.node(i, j), lo_r, hi_r) {
                if v <= tol_speed {
                    accepted.push((x, v));
                }
            }
        }
    }

    // cluster accepted points within CLUSTER_STEPS of the local grid spacing,
    // pairing only through nearby index buckets
    let n = accepted.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let local_step = |x: Point| -> f64 {
        let r = x.norm().clamp(grid.radii[0], *grid.radii.last().unwrap());
        let i = grid.radial_cell(r);
        grid.radial_step(i).max(r * grid.angular_step())
    };
    let bucket_of = |x: Point| -> (usize, usize) {
        let r = x.norm().clamp(grid.radii[0], *grid.radii.last().unwrap());
        let j = (x.angle().rem_euclid(std::f64::consts::TAU) / grid.angular_step()) as usize;
        (grid.radial_cell(r), j.min(n_th - 1))
    };
    let mut buckets: std::collections::HashMap<(usize, usize), Vec<usize>> = Default::default();
    for (k, (x, _)) in accepted.iter().enumerate() {
        buckets.entry(bucket_of(*x)).or_default().push(k);
    }
    let span = CLUSTER_STEPS as i64 + 1;
    for i in 0..n {
        let (bi, bj) = bucket_of(accepted[i].0);
        for di in -span..=span {
            let ii = bi as i64 + di;
            if ii < 0 || ii >= n_r as i64 {
                continue;
            }
            for dj in -span..=span {
                let jj = (bj as i64 + dj).rem_euclid(n_th as i64) as usize;
                let Some(cands) = buckets.get(&(ii as usize, jj)) else {
                    continue;
                };
                for &j in cands {
                    if j <= i {
                        continue;
                    }
                    let reach =
                        CLUSTER_STEPS * local_step(accepted[i].0).max(local_step(accepted[j].0));
                    if accepted[i].0.distance(accepted[j].0) <= reach {
                        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                        if ri != rj {
                            parent[ri] = rj;
                        }
                    }
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }

    let mut clusters = Vec::new();
    for members in groups.values() {
        let best = members
            .iter()
            .copied()
            .min_by(|&a, &b| accepted[a].1.partial_cmp(&accepted[b].1).unwrap())
            .unwrap();
        let mean_radius =
            members.iter().map(|&k| accepted[k].0.norm()).sum::<f64>() / members.len() as f64;
        // angular coverage: fraction of audit columns within one angular step
        let dth = grid.angular_step();
        let mut covered = vec![false; n_th];
        for &k in members {
            let t = accepted[k].0.angle().rem_euclid(std::f64::consts::TAU) / dth;
            let j = t.round() as i64;
            for dj in -1..=1 {
                covered[(j + dj).rem_euclid(n_th as i64) as usize] = true;
            }
        }
        let coverage = covered.iter().filter(|&&c| c).count() as f64 / n_th as f64;
        let prox = 2.0 * local_step(accepted[best].0);
        let site = if domain.inner_radius > 0.0 && (mean_radius - domain.inner_radius).abs() <= prox
        {
            ClusterSite::InnerBoundary
        } else if domain.outer_radius.is_finite()
            && (mean_radius - domain.outer_radius).abs() <= prox
        {
            ClusterSite::OuterBoundary
        } else {
            ClusterSite::Interior
        };
        clusters.push(StagnationCluster {
            representative: accepted[best].0,
            mean_radius,
            angular_coverage: coverage,
            site,
            min_speed: accepted[best].1,
        });
    }

    let coverage_of = |site: ClusterSite| -> f64 {
        clusters
            .iter()
            .filter(|c| c.site == site)
            .map(|c| c.angular_coverage)
            .sum::<f64>()
            .min(1.0)
    };
    let inner_fraction = coverage_of(ClusterSite::InnerBoundary);
    let outer_fraction = coverage_of(ClusterSite::OuterBoundary);
    let interior_points: Vec<Point> = clusters
        .iter()
        .filter(|c| c.site == ClusterSite::Interior)
        .map(|c| c.representative)
        .collect();

    // full circle beats interior: a stagnation ring reports as a circle.
    // A cluster only counts as a ring if its radius is large against the
    // grid step (a point cluster near the origin covers every angle).
    // Partial stagnation on both boundary circles has no class of its own;
    // hypothesis checks must read the two fractions.
    const FULL_CIRCLE: f64 = 0.99;
    let is_ring = |c: &StagnationCluster| {
        c.angular_coverage > FULL_CIRCLE
            && c.mean_radius > CLUSTER_STEPS * local_step(c.representative)
    };
    let classification = if clusters.iter().any(is_ring) {
        StagnationClass::FullCircle
    } else if !interior_points.is_empty() {
        StagnationClass::InteriorPresent
    } else if inner_fraction > 0.0 && outer_fraction <= inner_fraction {
        StagnationClass::ProperSubsetInner
    } else if outer_fraction > 0.0 {
        StagnationClass::ProperSubsetOuter
    } else {
        StagnationClass::Empty
    };

    StagnationReport {
        interior_points,
        boundary_inner_fraction: inner_fraction,
        boundary_outer_fraction: outer_fraction,
        classification,
        clusters,
        tol_speed,
    }
}

/// Damped Gauss-Newton polish of a candidate zero of the velocity.
fn polish_zero(field: &VectorField, start: Point, lo_r: f64, hi_r: f64) -> Option<(Point, f64)> {
    let clamp = |x: Point| -> Point {
        let r = x.norm();
        if r < lo_r {
            x.scale(lo_r / r.max(1e-300))
        } else if r > hi_r {
            x.scale(hi_r / r)
        } else {
            x
        }
    };
    let mut x = clamp(start);
    let mut v = field.velocity(x);
    if !v.x.is_finite() || !v.y.is_finite() {
        return None;
    }
    for _ in 0..40 {
        if v.norm() == 0.0 {
            return Some((x, 0.0));
        }
        let j = field.jacobian(x).ok()?;
        // Levenberg step on |v|^2/2: (J^T J + mu I) s = -J^T v
        let jtj = [
            [
                j[0][0] * j[0][0] + j[1][0] * j[1][0],
                j[0][0] * j[0][1] + j[1][0] * j[1][1],
            ],
            [
                j[0][0] * j[0][1] + j[1][0] * j[1][1],
                j[0][1] * j[0][1] + j[1][1] * j[1][1],
            ],
        ];
        let jtv = [
            j[0][0] * v.x + j[1][0] * v.y,
            j[0][1] * v.x + j[1][1] * v.y,
        ];
        let mu = 1e-10 * (jtj[0][0] + jtj[1][1]).max(1e-300);
        let a = [[jtj[0][0] + mu, jtj[0][1]], [jtj[1][0], jtj[1][1] + mu]];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let mut step = Point::new(
            (-jtv[0] * a[1][1] + jtv[1] * a[0][1]) / det,
            (jtv[0] * a[1][0] - jtv[1] * a[0][0]) / det,
        );
        let mut improved = false;
        for _ in 0..25 {
            let candidate = clamp(x + step);
            let vc = field.velocity(candidate);
            if vc.x.is_finite() && vc.y.is_finite() && vc.norm() < v.norm() {
                x = candidate;
                v = vc;
                improved = true;
                break;
            }
            step = step.scale(0.5);
        }
        if !improved {
            break;
        }
    }
    Some((x, v.norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One radius of the decay table.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayRow {
    pub radius: f64,
    /// `sup over the circle of |x| |v . e_r|` (the pointwise decay quantity).
    pub sup_r_vr: f64,
    /// Integral of `|v . e_r|` over the circle (the flux decay quantity).
    pub flux_abs: f64,
}

/// Radial decay trends of the radial velocity component. Slopes are
/// least-squares fits in log-log; verdicts are finite-radius trend calls,
/// not limits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    pub sup_slope: Option<f64>,
    pub flux_slope: Option<f64>,
    /// Does `sup |x||v . e_r|` trend to zero as the radius grows?
    pub outer_decay: Verdict,
    /// Does the absolute flux trend to zero as the radius shrinks?
    pub inner_flux_decay: Verdict,
}

const SLOPE_MARGIN: f64 = 0.1;

impl DecayReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("radius,sup_r_vr,flux_abs,outer_decay,inner_flux_decay\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:?},{:?}\n",
                row.radius, row.sup_r_vr, row.flux_abs, self.outer_decay, self.inner_flux_decay
            ));
        }
        out
    }
}

/// Evaluate the two radial-decay quantities at the given radii and fit their
/// log-log trends.
pub fn radial_decay_report(
    field: &VectorField,
    radii: &[f64],
) -> Result<DecayReport, StreamError> {
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n_samples = 720;
    let mut rows = Vec::with_capacity(radii.len());
    for &r in &radii {
        check_circle(field, r)?;
        let sup = tangency_max(field, r, n_samples) * r;
        let flux = flux_abs_on_circle(field, r, n_samples)?;
        rows.push(DecayRow {
            radius: r,
            sup_r_vr: sup,
            flux_abs: flux,
        });
    }
    let sup_slope = loglog_slope(rows.iter().map(|r| (r.radius, r.sup_r_vr)));
    let flux_slope = loglog_slope(rows.iter().map(|r| (r.radius, r.flux_abs)));
    let outer_decay = match sup_slope {
        None => Verdict::Pass, // identically (near) zero
        Some(s) if s < -SLOPE_MARGIN => Verdict::Pass,
        Some(_) => Verdict::Fail,
    };
    let inner_flux_decay = match flux_slope {
        None => Verdict::Pass,
        Some(s) if s > SLOPE_MARGIN => Verdict::Pass,
        Some(_) => Verdict::Fail,
    };
    Ok(DecayReport {
        rows,
        sup_slope,
        flux_slope,
        outer_decay,
        inner_flux_decay,
    })
}

/// Least-squares slope of `ln(value)` against `ln(radius)`; `None` when the
/// values are all (numerically) zero.
fn loglog_slope(pairs: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = pairs.collect();
    let scale = pts.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    if scale <= 1e-10 {
        return None;
    }
    let filtered: Vec<(f64, f64)> = pts
        .iter()
        .filter(|p| p.1 > 1e-14 * scale)
        .map(|p| (p.0.ln(), p.1.ln()))
        .collect();
    if filtered.len() < 2 {
        return None;
    }
    let n = filtered.len() as f64;
    let sx: f64 = filtered.iter().map(|p| p.0).sum();
    let sy: f64 = filtered.iter().map(|p| p.1).sum();
    let sxx: f64 = filtered.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = filtered.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}
