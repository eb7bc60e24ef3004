//! Discrete moving-planes apparatus: reflections across lines, admissible
//! cap regions between two Jordan curves, the reflection-comparison deficit,
//! and the boundary audits (radial deviation, critical-point census,
//! overdetermined boundary conditions).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, JordanPolygon, Point};
use crate::stream::{circle_oscillation, ClusterSite, StreamError, StreamGrid};

#[derive(Debug, Error)]
pub enum SymmetryError {
    #[error("direction vector has norm {norm} (must be a unit vector to 1e-14)")]
    NotUnit { norm: f64 },
    #[error("inner curve is not strictly inside the outer curve")]
    InnerNotInside,
    #[error("reflection hypothesis `{which}` fails for lambda={lambda} (margin {margin:.3e})")]
    HypothesisViolated {
        which: &'static str,
        lambda: f64,
        margin: f64,
    },
    #[error("cap region is empty: lambda={lambda} is at or past the support {lambda_max}")]
    EmptyCap { lambda: f64, lambda_max: f64 },
    #[error("audit stencil leaves the grid band at ({x:.6}, {y:.6})")]
    StencilOutOfBand { x: f64, y: f64 },
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A reflection line `x . e = lambda` with unit normal `e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionSpec {
    pub e: Point,
    pub lambda: f64,
}

impl ReflectionSpec {
    pub fn new(e: Point, lambda: f64) -> Result<ReflectionSpec, SymmetryError> {
        let norm = e.norm();
        if (norm - 1.0).abs() > 1e-14 {
            return Err(SymmetryError::NotUnit { norm });
        }
        Ok(ReflectionSpec { e, lambda })
    }

    pub fn from_angle(angle: f64, lambda: f64) -> ReflectionSpec {
        ReflectionSpec {
            e: Point::new(angle.cos(), angle.sin()),
            lambda,
        }
    }
}

/// Orthogonal reflection across the line `x . e = lambda`.
pub fn reflect_point(spec: &ReflectionSpec, x: Point) -> Point {
    let d = x.dot(spec.e) - spec.lambda;
    x - spec.e.scale(2.0 * d)
}

/// Outcome of the reflected-inclusion test.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InclusionReport {
    pub holds: bool,
    /// Smallest signed clearance of the reflected cap samples: distance to
    /// the boundary, negative for samples that land outside.
    pub margin: f64,
}

fn max_edge_length(poly: &JordanPolygon) -> f64 {
    poly.edges()
        .map(|(a, b)| a.distance(b))
        .fold(0.0, f64::max)
}

/// Test whether reflecting the part of the closed region beyond the line
/// stays strictly inside it, by reflecting every boundary vertex and edge
/// midpoint in the half-plane and winding-testing the images.
///
/// Samples within one edge length of the line are skipped: their reflections
/// land within the polygon's own discretization error of the boundary (the
/// continuum margin vanishes on the line itself), so they carry no signal at
/// polygon resolution.
pub fn reflection_inclusion(outer: &JordanPolygon, spec: &ReflectionSpec) -> InclusionReport {
    inclusion_with_collar(outer, outer, spec)
}

fn inclusion_with_collar(
    sampled: &JordanPolygon,
    target: &JordanPolygon,
    spec: &ReflectionSpec,
) -> InclusionReport {
    let collar = max_edge_length(sampled);
    let mut margin = f64::INFINITY;
    let mut holds = true;
    let samples = sampled
        .vertices()
        .iter()
        .copied()
        .chain(sampled.edge_midpoints());
    for p in samples {
        if p.dot(spec.e) <= spec.lambda + collar {
            continue;
        }
        let image = reflect_point(spec, p);
        let inside = target.contains(image);
        let distance = target.distance_to_boundary(image);
        let signed = if inside { distance } else { -distance };
        margin = margin.min(signed);
        if !inside {
            holds = false;
        }
    }
    if margin == f64::INFINITY {
        // the half-plane (past the collar) misses the polygon entirely
        margin = 0.0;
    }
    InclusionReport { holds, margin }
}

/// The admissible comparison region for one line: the part of the annular
/// region between the two curves beyond the line, with the reflected inner
/// hole carved out.
#[derive(Debug, Clone)]
pub struct CapRegion {
    pub spec: ReflectionSpec,
    pub outer: JordanPolygon,
    pub inner: JordanPolygon,
    pub reflected_inner: JordanPolygon,
    /// Support `max x . e` of the outer curve; the cap is empty past it.
    pub lambda_max: f64,
}

impl CapRegion {
    /// Membership: beyond the line, inside the outer curve, outside the inner
    /// curve and outside its reflection.
    pub fn contains(&self, x: Point) -> bool {
        x.dot(self.spec.e) > self.spec.lambda
            && self.outer.contains(x)
            && !self.inner.contains(x)
            && !self.reflected_inner.contains(x)
    }
}

/// Validate the two reflection hypotheses and assemble the cap region.
pub fn build_cap(
    outer: &JordanPolygon,
    inner: &JordanPolygon,
    spec: &ReflectionSpec,
) -> Result<CapRegion, SymmetryError> {
    for v in inner.vertices() {
        if !outer.contains(*v) {
            return Err(SymmetryError::InnerNotInside);
        }
    }
    let lambda_max = outer.support(spec.e);
    if spec.lambda >= lambda_max {
        return Err(SymmetryError::EmptyCap {
            lambda: spec.lambda,
            lambda_max,
        });
    }
    let outer_report = reflection_inclusion(outer, spec);
    if !outer_report.holds {
        return Err(SymmetryError::HypothesisViolated {
            which: "reflected outer cap stays inside the outer region",
            lambda: spec.lambda,
            margin: outer_report.margin,
        });
    }
    // reflected inner-cap samples must fall back inside the inner region
    let inner_report = inclusion_with_collar(inner, inner, spec);
    if !inner_report.holds {
        return Err(SymmetryError::HypothesisViolated {
            which: "reflected inner cap stays inside the inner region",
            lambda: spec.lambda,
            margin: inner_report.margin,
        });
    }
    let reflected_vertices: Vec<Point> = inner
        .vertices()
        .iter()
        .map(|&v| reflect_point(spec, v))
        .collect();
    let reflected_inner = JordanPolygon::new(reflected_vertices)?;
    Ok(CapRegion {
        spec: *spec,
        outer: outer.clone(),
        inner: inner.clone(),
        reflected_inner,
        lambda_max,
    })
}

/// Result of the discrete reflection comparison over a cap region.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DeficitReport {
    /// Max over audit points of `(phi(x) - phi(x_reflected))_+`; zero (up to
    /// grid tolerance) certifies the discrete comparison inequality.
    pub max_deficit: f64,
    pub points_used: usize,
    pub worst_point: Point,
}

fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Audit `phi(x) <= phi(x_reflected)` over quasi-random points of the cap.
/// `sg` holds phi (callers orient it so the outer curve carries the smaller
/// constant); both the point and its reflection are interpolated, so the grid
/// band must cover the region between the curves.
pub fn moving_plane_deficit(
    sg: &StreamGrid,
    cap: &CapRegion,
    n_audit: usize,
) -> Result<DeficitReport, SymmetryError> {
    let r_max = cap.outer.max_radius();
    let mut used = 0;
    let mut max_deficit = 0.0f64;
    let mut worst = Point::new(f64::NAN, f64::NAN);
    let mut index = 20; // skip the lattice-like head of the sequence
    let budget = 400 * n_audit;
    for _ in 0..budget {
        if used >= n_audit {
            break;
        }
        index += 1;
        let x = Point::new(
            r_max * (2.0 * halton(index, 2) - 1.0),
            r_max * (2.0 * halton(index, 3) - 1.0),
        );
        if !cap.contains(x) {
            continue;
        }
        let image = reflect_point(&cap.spec, x);
        let phi_x = sg.interp(x)?;
        let phi_image = sg.interp(image)?;
        used += 1;
        let deficit = phi_x - phi_image;
        if deficit > max_deficit {
            max_deficit = deficit;
            worst = x;
        }
    }
    Ok(DeficitReport {
        max_deficit,
        points_used: used,
        worst_point: worst,
    })
}

/// One cell of a deficit sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepRow {
    pub e_angle: f64,
    pub lambda: f64,
    pub deficit: f64,
    pub points_used: usize,
}

/// Deficit sweep over a direction/offset matrix, parallel across the pairs.
pub fn deficit_sweep(
    sg: &StreamGrid,
    outer: &JordanPolygon,
    inner: &JordanPolygon,
    n_directions: usize,
    lambdas: &[f64],
    n_audit: usize,
) -> Result<Vec<SweepRow>, SymmetryError> {
    let pairs: Vec<(f64, f64)> = (0..n_directions)
        .flat_map(|k| {
            let angle = std::f64::consts::TAU * k as f64 / n_directions as f64;
            lambdas.iter().map(move |&l| (angle, l))
        })
        .collect();
    let rows: Result<Vec<SweepRow>, SymmetryError> = pairs
        .par_iter()
        .map(|&(angle, lambda)| {
            let spec = ReflectionSpec::from_angle(angle, lambda);
            let cap = build_cap(outer, inner, &spec)?;
            let report = moving_plane_deficit(sg, &cap, n_audit)?;
            Ok(SweepRow {
                e_angle: angle,
                lambda,
                deficit: report.max_deficit,
                points_used: report.points_used,
            })
        })
        .collect();
    rows
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("e_angle,lambda,deficit\n");
    for row in rows {
        out.push_str(&format!("{},{},{}\n", row.e_angle, row.lambda, row.deficit));
    }
    out
}

/// Dimensionless circularity score: the largest circle oscillation of the
/// grid values over the value range. Zero means radially symmetric to grid
/// tolerance; a constant grid scores zero by convention.
pub fn radial_deviation(sg: &StreamGrid) -> f64 {
    let (lo, hi) = sg.value_range();
    let range = hi - lo;
    if range == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for &r in &sg.grid().radii {
        let osc = circle_oscillation(sg, r).expect("grid radii are in band");
        worst = worst.max(osc);
    }
    (worst / range).min(1.0)
}

/// A near-critical cluster of the stream function.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: Point,
    pub site: ClusterSite,
    pub gradient_norm: f64,
}

/// Grid nodes where the finite-difference `|grad u|` is at most `tol`,
/// clustered within three node steps and classified by radius proximity to
/// the domain boundaries.
pub fn critical_points(sg: &StreamGrid, tol: f64) -> Vec<CriticalPoint> {
    let grid = sg.grid();
    let n_r = grid.n_r();
    let n_th = grid.n_theta();
    let mut flagged: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n_r {
        for j in 0..n_th {
            let g = sg.node_gradient(i, j).norm();
            if g <= tol {
                flagged.push((i, j, g));
            }
        }
    }
    // union by index adjacency within 3 steps (theta wraps)
    let n = flagged.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for a in 0..n {
        for b in a + 1..n {
            let (ia, ja, _) = flagged[a];
            let (ib, jb, _) = flagged[b];
            let di = ia.abs_diff(ib);
            let dj_raw = ja.abs_diff(jb);
            let dj = dj_raw.min(n_th - dj_raw);
            if di <= 3 && dj <= 3 {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for k in 0..n {
        let root = find(&mut parent, k);
        groups.entry(root).or_default().push(k);
    }
    let dom = &grid.domain;
    groups
        .values()
        .map(|members| {
            let &(i, j, g) = members
                .iter()
                .map(|&k| &flagged[k])
                .min_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
                .unwrap();
            let location = grid.node(i, j);
            let r = location.norm();
            let prox = 2.0 * grid.radial_step(i);
            let site = if dom.inner_radius > 0.0 && (r - dom.inner_radius).abs() <= prox {
                ClusterSite::InnerBoundary
            } else if dom.outer_radius.is_finite() && (r - dom.outer_radius).abs() <= prox {
                ClusterSite::OuterBoundary
            } else {
                ClusterSite::Interior
            };
            CriticalPoint {
                location,
                site,
                gradient_norm: g,
            }
        })
        .collect()
}

/// Oscillations of the interpolated stream values and of the one-sided
/// normal derivative along a polygonal boundary.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OverdeterminedReport {
    pub osc_u: f64,
    pub osc_normal_derivative: f64,
    pub samples: usize,
}

/// Audit the overdetermined boundary conditions on a polygon: sample the
/// stream values and the one-sided normal derivative at every vertex and
/// report both oscillations. The probe side (into the band) is chosen once
/// from the first vertex.
pub fn overdetermined_audit(
    sg: &StreamGrid,
    boundary: &JordanPolygon,
) -> Result<OverdeterminedReport, SymmetryError> {
    let grid = sg.grid();
    let (band_lo, band_hi) = (grid.radii[0], *grid.radii.last().unwrap());
    let verts = boundary.vertices();
    let n = verts.len();
    let orientation = boundary.orientation() as f64;

    // outward vertex normal from the adjacent edges
    let normal_at = |k: usize| -> Point {
        let prev = verts[(k + n - 1) % n];
        let next = verts[(k + 1) % n];
        let tangent = next - prev;
        let len = tangent.norm().max(1e-300);
        // CCW polygons have outward normal = tangent rotated clockwise
        Point::new(tangent.y / len, -tangent.x / len).scale(orientation)
    };

    let r0 = verts[0].norm();
    let delta = 1.5 * grid.radial_step(grid.radial_cell(r0.clamp(band_lo, band_hi)));
    let slack = 1e-9 * band_hi;
    let in_band = |p: Point| {
        let r = p.norm();
        r >= band_lo - slack && r <= band_hi + slack
    };
    // probe into the band: prefer stepping against the outward normal
    let n0 = normal_at(0);
    let side = if in_band(verts[0] - n0.scale(delta)) && in_band(verts[0] - n0.scale(2.0 * delta)) {
        -1.0
    } else {
        1.0
    };

    let mut u_lo = f64::INFINITY;
    let mut u_hi = f64::NEG_INFINITY;
    let mut d_lo = f64::INFINITY;
    let mut d_hi = f64::NEG_INFINITY;
    for k in 0..n {
        let p = verts[k];
        let nv = normal_at(k);
        let p1 = p + nv.scale(side * delta);
        let p2 = p + nv.scale(side * 2.0 * delta);
        if !in_band(p) || !in_band(p1) || !in_band(p2) {
            return Err(SymmetryError::StencilOutOfBand { x: p.x, y: p.y });
        }
        let u0 = sg.interp(p)?;
        let u1 = sg.interp(p1)?;
        let u2 = sg.interp(p2)?;
        // one-sided second-order derivative along the outward normal:
        // samples sit at 0, h, 2h with signed step h = side * delta
        let dn = (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * side * delta);
        u_lo = u_lo.min(u0);
        u_hi = u_hi.max(u0);
        d_lo = d_lo.min(dn);
        d_hi = d_hi.max(dn);
    }
    Ok(OverdeterminedReport {
        osc_u: u_hi - u_lo,
        osc_normal_derivative: d_hi - d_lo,
        samples: n,
    })
}
