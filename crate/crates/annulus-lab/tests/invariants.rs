//! Cross-module property suites: conservation identities, reconstruction
//! consistency, discretization rates, and stability under refinement.

use std::collections::BTreeMap;

use annulus_lab::flows::{
    catalog::catalog, divergence_at, sample_on_grid, vorticity_transport_at, FieldSpec,
    VectorField,
};
use annulus_lab::geometry::{polar_grid, Point};
use annulus_lab::stream::{stream_on_grid, StreamGrid};
use annulus_lab::symmetry::{critical_points, radial_deviation};
use annulus_lab::trace::{
    extract_vorticity_profile, semilinear_residual, trace_gradient_curve, trace_streamline,
    TracerOptions, VorticityProfile,
};

fn build(name: &str, params: &[(&str, f64)]) -> VectorField {
    let map: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    catalog(name, &map).unwrap()
}

fn build_banded(name: &str, params: &[(&str, f64)], a: f64, b: f64, trunc: (f64, f64)) -> VectorField {
    let spec = FieldSpec::Catalog {
        name: name.to_string(),
        params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        domain: Some(annulus_lab::flows::DomainSpec {
            a,
            b: if b.is_finite() {
                serde_json::json!(b)
            } else {
                serde_json::json!("inf")
            },
            trunc_inner: Some(trunc.0),
            trunc_outer: Some(trunc.1),
        }),
    };
    spec.build().unwrap()
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

fn band_points(field: &VectorField, n: usize) -> Vec<Point> {
    let dom = field.domain();
    let lo = dom.trunc_inner * 1.003 + 3e-4;
    let hi = dom.trunc_outer * 0.997;
    (0..n)
        .map(|k| {
            Point::from_polar(
                lo + (hi - lo) * halton(k + 20, 2),
                std::f64::consts::TAU * halton(k + 20, 3),
            )
        })
        .collect()
}

fn all_catalog_flows() -> Vec<VectorField> {
    vec![
        build("rigid", &[]),
        build("circular", &[("c", 1.5), ("k", 2.0)]),
        build_banded("log", &[], 0.0, 1.0, (0.01, 1.0)),
        build("inverse_square", &[]),
        build("quartic", &[("R", 1.0)]),
        build("shifted", &[("a", 1.0)]),
        build("ext_counterexample", &[("a", 1.0)]),
        build_banded("punct_counterexample", &[("b", 1.0)], 0.0, 1.0, (0.05, 1.0)),
        build("eigenflow_m1", &[("a", 1.0), ("b", 2.0)]),
        build("eigenflow_m0", &[("a", 1.0), ("b", 2.0)]),
    ]
}

#[test]
fn catalog_divergence_vanishes_analytically() {
    for field in &all_catalog_flows() {
        let mut worst: f64 = 0.0;
        for x in band_points(field, 1000) {
            worst = worst.max(divergence_at(field, x).unwrap().abs());
        }
        assert!(worst <= 1e-8, "{}: divergence {worst:.3e}", field.name());
    }
}

#[test]
fn grid_sampled_divergence_refines_quadratically() {
    // a flow with radial curvature: bilinear sampling of the rigid flow is
    // exact, so it would only measure rounding noise
    let ext = build_banded("ext_counterexample", &[("a", 1.0)], 1.0, f64::INFINITY, (1.0, 3.0));
    let mut worsts = Vec::new();
    for n in [48usize, 96] {
        let grid = polar_grid(ext.domain(), n + 1, 2 * n).unwrap();
        let sampled = sample_on_grid(&ext, &grid);
        // probe at cell centers so the finite-difference stencil stays away
        // from the interpolation kinks
        let mut worst: f64 = 0.0;
        for i in (2..n - 2).step_by(3) {
            for j in (0..2 * n).step_by(7) {
                let r = 0.5 * (grid.radii[i] + grid.radii[i + 1]);
                let th = grid.angles[j] + 0.5 * grid.angular_step();
                let d = divergence_at(&sampled, Point::from_polar(r, th)).unwrap();
                worst = worst.max(d.abs());
            }
        }
        worsts.push(worst);
    }
    let ratio = worsts[0] / worsts[1];
    assert!(
        ratio >= 2.5,
        "grid divergence did not refine: {worsts:?} (ratio {ratio:.2})"
    );
}

#[test]
fn vorticity_transport_vanishes_along_catalog_flows() {
    // bands start at 0.05-0.1 for the punctured flows: differencing the
    // exactly cancelling vorticity terms (~1/r^2 each) against a 1e-5 step
    // amplifies rounding past 1e-6 closer to the puncture
    let mut flows = all_catalog_flows();
    flows[2] = build_banded("log", &[], 0.0, 1.0, (0.05, 1.0));
    flows[7] = build_banded("punct_counterexample", &[("b", 1.0)], 0.0, 1.0, (0.1, 1.0));
    for field in &flows {
        let mut worst: f64 = 0.0;
        for x in band_points(field, 1000) {
            worst = worst.max(vorticity_transport_at(field, x).unwrap().abs());
        }
        assert!(worst <= 1e-6, "{}: transport {worst:.3e}", field.name());
    }
}

#[test]
fn parse_print_roundtrip_at_100_radii() {
    use annulus_lab::flows::parse_profile;
    let sources = [
        "r",
        "1/r^2",
        "r^2*sin(r)-3/(r+1)",
        "exp(-r^2)*cos(2*r)+sqrt(r)",
        "-(r-1)^3/2+ln(r)",
        "abs(r-2)+e^2*pi",
    ];
    for src in sources {
        let p1 = parse_profile(src).unwrap();
        // print through the expression parser and re-parse
        let expr = annulus_lab::flows::expr::parse_expr(
            src,
            annulus_lab::flows::expr::VarSet::RadiusOnly,
        )
        .unwrap();
        let printed = expr.to_string();
        let p2 = parse_profile(&printed).unwrap();
        for k in 0..100 {
            let r = 0.1 + 3.0 * k as f64 / 99.0;
            let (a, b) = (p1.eval(r).unwrap(), p2.eval(r).unwrap());
            let scale = a.abs().max(1.0);
            assert!(
                (a - b).abs() <= 1e-14 * scale,
                "`{src}` -> `{printed}`: {a} vs {b} at r={r}"
            );
        }
    }
}

#[test]
fn stream_reconstruction_matches_closed_forms() {
    // counterexample flows have closed-form streams; reconstruction from the
    // velocity field alone must match at every node after base matching
    let cases: Vec<(VectorField, Box<dyn Fn(Point) -> f64>)> = vec![
        (
            build_banded("ext_counterexample", &[("a", 1.0)], 1.0, f64::INFINITY, (1.0, 20.0)),
            Box::new(|x: Point| {
                let r = x.norm();
                2.0 * (r * r - 1.0) + (r - 1.0 / r) * x.x / r
            }),
        ),
        (
            build_banded("punct_counterexample", &[("b", 1.0)], 0.0, 1.0, (0.05, 1.0)),
            Box::new(|x: Point| {
                let r = x.norm();
                (r - 1.0 / r) * x.x / r
            }),
        ),
    ];
    for (field, closed_form) in &cases {
        let grid = polar_grid(field.domain(), 64, 128).unwrap();
        let base = Point::new(field.domain().trunc_inner, 0.0);
        let sg = stream_on_grid(field, &grid, base, closed_form(base)).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..grid.n_r() {
            for j in 0..grid.n_theta() {
                let node = grid.node(i, j);
                worst = worst.max((sg.value(i, j) - closed_form(node)).abs());
            }
        }
        assert!(worst <= 1e-6, "{}: node error {worst:.3e}", field.name());
        assert!(
            sg.path_discrepancy <= 1e-9,
            "{}: leg-order discrepancy {:.3e}",
            field.name(),
            sg.path_discrepancy
        );
    }
}

#[test]
fn stream_gradient_reproduces_velocity_at_interior_nodes() {
    // grad-perp of the reconstructed stream matches the field within C h^2
    let field = build("ext_counterexample", &[("a", 1.0)]);
    let field = field.with_truncation(1.0, 5.0).unwrap();
    let grid = polar_grid(field.domain(), 64, 128).unwrap();
    let sg = stream_on_grid(&field, &grid, Point::new(1.0, 0.0), 0.0).unwrap();
    let h = grid.radial_step(32).max(grid.angular_step() * 3.0);
    let mut worst: f64 = 0.0;
    for i in 2..grid.n_r() - 2 {
        for j in 0..grid.n_theta() {
            let node = grid.node(i, j);
            let g = sg.node_gradient(i, j);
            let v = field.velocity(node);
            // grad u = (v2, -v1)
            worst = worst.max((g.x - v.y).hypot(g.y + v.x));
        }
    }
    assert!(worst <= 20.0 * h * h, "gradient mismatch {worst:.3e} vs h^2 {:.1e}", h * h);
}

#[test]
fn gradient_curves_cross_streamlines_orthogonally() {
    // both traced polylines must stay orthogonal to the other family's
    // direction field: central secants (second-order tangents) against the
    // analytic frame at shared vertices
    let field = build("ext_counterexample", &[("a", 1.0)]);
    let opts = TracerOptions {
        max_step_factor: 0.01,
        ..TracerOptions::default()
    };
    let curve = trace_gradient_curve(&field, Point::new(1.5, 0.3), 1, &opts).unwrap();
    let n = curve.polyline.len();
    for frac in [0.25, 0.5, 0.75] {
        let k = ((n as f64 * frac) as usize).clamp(1, n - 2);
        let x = curve.polyline[k];
        let d = curve.polyline[k + 1] - curve.polyline[k - 1];
        let g_secant = d.scale(1.0 / d.norm());
        let v = field.velocity(x);
        let dot = g_secant.dot(v.scale(1.0 / v.norm())).abs();
        assert!(dot <= 1e-3, "gradient curve not orthogonal to v at {x:?}: {dot:.3e}");
    }
    let orbit = trace_streamline(&field, Point::new(4.0, 0.75), &opts).unwrap();
    let m = orbit.polyline.len();
    for frac in [0.25, 0.5, 0.75] {
        let k = ((m as f64 * frac) as usize).clamp(1, m - 2);
        let x = orbit.polyline[k];
        let d = orbit.polyline[k + 1] - orbit.polyline[k - 1];
        let t_secant = d.scale(1.0 / d.norm());
        let g = field.stream_gradient(x);
        let dot = t_secant.dot(g.scale(1.0 / g.norm())).abs();
        assert!(dot <= 1e-3, "streamline not orthogonal to grad u at {x:?}: {dot:.3e}");
    }
}

#[test]
fn circular_flow_extraction_satisfies_radial_identity() {
    // f(U(r)) = -(V'(r) + V(r)/r) at every chart knot
    let opts = TracerOptions::default();

    // power law: V = c r^k
    let (c, k) = (1.5, 2.0);
    let field = build("circular", &[("c", c), ("k", k)]);
    let curve = trace_gradient_curve(&field, Point::new(1.05, 0.0), 1, &opts).unwrap();
    let profile = extract_vorticity_profile(&field, &curve).unwrap();
    let u_of_r = |r: f64| c * r.powf(k + 1.0) / (k + 1.0);
    let expect = |r: f64| -(c * k * r.powf(k - 1.0) + c * r.powf(k - 1.0));
    for p in curve.polyline.iter().step_by(5) {
        let r = p.norm();
        let f_val = profile.eval_clamped(u_of_r(r));
        assert!(
            (f_val - expect(r)).abs() <= 1e-6,
            "power law: f(U({r})) = {f_val} vs {}",
            expect(r)
        );
    }

    // shifted rotation: V = r - 1
    let field = build("shifted", &[("a", 1.0)]);
    let curve = trace_gradient_curve(&field, Point::new(1.2, 0.0), 1, &opts).unwrap();
    let profile = extract_vorticity_profile(&field, &curve).unwrap();
    for p in curve.polyline.iter().step_by(5) {
        let r = p.norm();
        let u = 0.5 * (r - 1.0) * (r - 1.0);
        let f_val = profile.eval_clamped(u);
        let expect = -(1.0 + (r - 1.0) / r);
        assert!(
            (f_val - expect).abs() <= 1e-6,
            "shifted: f(U({r})) = {f_val} vs {expect}"
        );
    }
}

#[test]
fn shooting_matches_oracle_on_scattered_intervals() {
    // five deterministic quasi-random (a, b) pairs in [0.5, 8]
    let pairs: Vec<(f64, f64)> = (0..5)
        .map(|k| {
            let a = 0.5 + 5.0 * halton(k + 3, 2);
            let b = a + 0.5 + (7.5 - a) * halton(k + 3, 3);
            (a, b.min(8.0))
        })
        .collect();
    for (a, b) in pairs {
        let pair = annulus_lab::radial::eigenpair_mode1(a, b, 96).unwrap();
        let rel = (pair.eigenvalue - pair.fd_eigenvalue).abs() / pair.fd_eigenvalue;
        assert!(rel <= 1e-6, "({a:.3}, {b:.3}): relative gap {rel:.3e}");
        let pair0 = annulus_lab::radial::eigenpair_mode0(a, b, 96).unwrap();
        let rel0 = (pair0.eigenvalue - pair0.fd_eigenvalue).abs() / pair0.fd_eigenvalue;
        assert!(rel0 <= 1e-6, "mode 0 ({a:.3}, {b:.3}): relative gap {rel0:.3e}");
        assert!(pair0.eigenvalue < pair.eigenvalue);
    }
}

#[test]
fn eigenflow_satisfies_linear_semilinear_equation() {
    // Delta u + lambda u = 0 for the mode-1 eigenflow stream, at C h^2
    let pair = annulus_lab::radial::eigenpair_mode1(1.0, 2.0, 512).unwrap();
    let lambda = pair.eigenvalue;
    let field = build("eigenflow_m1", &[("a", 1.0), ("b", 2.0)]);
    let linear = VorticityProfile::from_fn(|s| lambda * s, -1.5, 1.5, 64).unwrap();
    let mut maxes = Vec::new();
    for (n_r, n_th) in [(33usize, 64usize), (65, 128)] {
        let grid = polar_grid(field.domain(), n_r, n_th).unwrap();
        let sg = StreamGrid::from_fn(grid, |x| field.stream_at(x).unwrap());
        maxes.push(semilinear_residual(&sg, &linear).unwrap().max);
    }
    let ratio = maxes[0] / maxes[1];
    assert!(
        ratio >= 3.0 && maxes[1] < 1e-2,
        "eigenflow residuals {maxes:?} (ratio {ratio:.2})"
    );
}

#[test]
fn radial_deviation_invariant_under_shift_and_rotation() {
    let field = build("eigenflow_m1", &[("a", 1.0), ("b", 2.0)]);
    let grid = polar_grid(field.domain(), 64, 192).unwrap();
    let sg = StreamGrid::from_fn(grid.clone(), |x| field.stream_at(x).unwrap());
    let base_score = radial_deviation(&sg);
    assert!(base_score >= 0.3, "eigenflow circularity score {base_score}");

    let shifted = StreamGrid::from_fn(grid.clone(), |x| field.stream_at(x).unwrap() + 5.0);
    assert!((radial_deviation(&shifted) - base_score).abs() <= 1e-12);

    let angle = 0.7f64;
    let rotated = StreamGrid::from_fn(grid, |x| {
        let (s, c) = angle.sin_cos();
        field
            .stream_at(Point::new(c * x.x - s * x.y, s * x.x + c * x.y))
            .unwrap()
    });
    let rotated_score = radial_deviation(&rotated);
    assert!(
        (rotated_score - base_score).abs() <= 1e-3,
        "rotation changed the score: {base_score} vs {rotated_score}"
    );
}

#[test]
fn critical_point_census_stable_under_refinement() {
    let field = build("eigenflow_m1", &[("a", 1.0), ("b", 2.0)]);
    let mut counts = Vec::new();
    // both grids are past the resolution where all six clusters separate
    for (n_r, n_th) in [(128usize, 512usize), (256, 1024)] {
        let grid = polar_grid(field.domain(), n_r, n_th).unwrap();
        let sg = StreamGrid::from_fn(grid, |x| field.stream_at(x).unwrap());
        let scale = {
            let g = sg.grid();
            let mut worst: f64 = 0.0;
            for i in 0..g.n_r() {
                for j in 0..g.n_theta() {
                    worst = worst.max(sg.node_gradient(i, j).norm());
                }
            }
            worst
        };
        counts.push(critical_points(&sg, 0.01 * scale).len());
    }
    assert_eq!(counts[0], 6);
    assert_eq!(counts[1], 6);
}

#[test]
fn rigid_streamline_winds_origin_once() {
    // closed orbit of the rigid flow through (1.5, 0), winding about 0
    let field = build("rigid", &[]);
    let orbit = trace_streamline(&field, Point::new(1.5, 0.0), &TracerOptions::default()).unwrap();
    assert!(orbit.closed);
    let vertices = orbit.polyline[..orbit.polyline.len() - 1].to_vec();
    let poly = annulus_lab::geometry::JordanPolygon::new(vertices).unwrap();
    let w = annulus_lab::geometry::winding_number(&poly, Point::new(0.0, 0.0)).unwrap();
    assert_eq!(w, 1);
    assert_eq!(w as i64, orbit.winding);
}
