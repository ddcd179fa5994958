use std::f64::consts::PI;

use crane_erg::config::Config;
use crane_erg::constraints::{
    attach_certificates, boom_payload_position, build_obstacle, convex_hull,
    joint_limit_constraints, obstacle_to_joint_space, tangent_embedding, JointBounds, JointGrid,
    ObstacleBox,
};
use crane_erg::linearize::{linearize, DEFAULT_STEP};
use crane_erg::model::CraneParams;
use crane_erg::{reference_gain, StateMatrix, StateVector};
use nalgebra::Vector2;

fn acl() -> StateMatrix {
    linearize(&Vector2::new(PI / 3.0, 0.0), &CraneParams::default(), DEFAULT_STEP)
        .unwrap()
        .closed_loop(&reference_gain())
}

fn inside_convex(poly: &[Vector2<f64>], p: &Vector2<f64>) -> bool {
    let n = poly.len();
    (0..n).all(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        (b - a).perp(&(p - a)) >= 0.0
    })
}

fn distance_to_segment(p: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn distance_to_polygon(poly: &[Vector2<f64>], p: &Vector2<f64>) -> f64 {
    if inside_convex(poly, p) {
        return 0.0;
    }
    (0..poly.len())
        .map(|i| distance_to_segment(p, &poly[i], &poly[(i + 1) % poly.len()]))
        .fold(f64::INFINITY, f64::min)
}

fn diameter(poly: &[Vector2<f64>]) -> f64 {
    poly.iter()
        .flat_map(|a| poly.iter().map(move |b| (a - b).norm()))
        .fold(0.0, f64::max)
}

#[test]
fn joint_limits() {
    let cs = joint_limit_constraints(&JointBounds::default());
    assert_eq!(cs.len(), 6);
    for c in &cs {
        assert_eq!(c.beta.iter().filter(|b| **b != 0.0).count(), 1);
    }
    let mut x = StateVector::zeros();
    x[2] = PI / 3.0;
    assert!(cs.iter().all(|c| c.margin(&x) > 0.0));
    x[0] = PI / 36.0;
    let swing_pos = cs.iter().find(|c| c.label == "radial_swing_pos").unwrap();
    assert_eq!(swing_pos.margin(&x), 0.0);
}

#[test]
fn hand_inversion_box() {
    let p = CraneParams::default();
    let target = Vector2::new(PI / 2.0, PI / 4.0);
    let c = boom_payload_position(&target, &p);
    assert!((c[0] - 2f64.sqrt()).abs() < 1e-12 && (c[2] + 1.0).abs() < 1e-12);
    let b = ObstacleBox {
        label: "probe".into(),
        center: [c[0], c[1], c[2]],
        half_extents: [0.02, 0.02, 0.02],
        safety_margin: 0.0,
    };
    let pts = obstacle_to_joint_space(&b, &p, &JointBounds::default(), 401).unwrap();
    assert!(!pts.is_empty());
    assert!(pts.iter().any(|t| (t - target).norm() < 0.03));
}

#[test]
fn unreachable_box_is_empty() {
    let p = CraneParams::default();
    let b = ObstacleBox {
        label: "sky".into(),
        center: [0.0, 0.0, 5.0],
        half_extents: [1.0, 1.0, 0.5],
        safety_margin: 0.2,
    };
    let bounds = JointBounds::default();
    assert!(obstacle_to_joint_space(&b, &p, &bounds, 100).unwrap().is_empty());
    assert!(build_obstacle(&b, &p, &bounds, 100, 8).unwrap().is_none());
}

#[test]
fn larger_margin_never_shrinks_image() {
    let config = Config::bundled();
    let bounds = config.constraints.bounds();
    for b in &config.obstacles {
        let small = obstacle_to_joint_space(b, &config.crane, &bounds, 120).unwrap();
        let mut grown = b.clone();
        grown.safety_margin += 0.1;
        let large = obstacle_to_joint_space(&grown, &config.crane, &bounds, 120).unwrap();
        assert!(large.len() >= small.len());
        assert!(small.iter().all(|p| large.contains(p)));
    }
}

#[test]
fn grid_refinement_keeps_hull_vertices() {
    let config = Config::bundled();
    let bounds = config.constraints.bounds();
    for b in &config.obstacles {
        let n = 60;
        let coarse = convex_hull(&obstacle_to_joint_space(b, &config.crane, &bounds, n).unwrap());
        let fine = convex_hull(&obstacle_to_joint_space(b, &config.crane, &bounds, 2 * n).unwrap());
        let cell = JointGrid::new(&bounds, n).cell().norm();
        for v in &coarse {
            let d = distance_to_polygon(&fine, v);
            assert!(d <= cell, "{}: vertex {v:?} is {d} from the refined hull (cell {cell})", b.label);
        }
    }
}

/// Points farther than `diam · tan(π/n_t)` from the hull satisfy at least one
/// supporting half-plane; points of the sampled image satisfy none.
fn check_coverage(points: &[Vector2<f64>], n_t: usize, probe: impl Iterator<Item = Vector2<f64>>) {
    let oc = tangent_embedding(points, n_t, "poly").unwrap();
    let gap = diameter(&oc.hull) * (PI / n_t as f64).tan();
    for p in points {
        assert!(oc.steady_margin(p) <= 0.0);
    }
    let mut checked = 0;
    for p in probe {
        let d = distance_to_polygon(&oc.hull, &p);
        if d == 0.0 {
            assert!(oc.steady_margin(&p) <= 0.0);
        } else if d > gap {
            assert!(oc.is_safe(&p), "{p:?} at distance {d} > {gap} is uncovered");
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn random_polygon_coverage() {
    // deterministic pseudo-random point cloud
    let mut s: u64 = 0x9e3779b97f4a7c15;
    let mut rnd = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    let pts: Vec<Vector2<f64>> = (0..40)
        .map(|_| {
            let (r, a) = (0.3 + 0.7 * rnd(), 2.0 * PI * rnd());
            Vector2::new(2.0 * r * a.cos(), r * a.sin())
        })
        .collect();
    let n = 200;
    let probe = (0..n * n).map(|k| {
        let (i, j) = (k / n, k % n);
        Vector2::new(-6.0 + 12.0 * i as f64 / (n - 1) as f64, -6.0 + 12.0 * j as f64 / (n - 1) as f64)
    });
    check_coverage(&pts, 12, probe);
}

#[test]
fn bundled_obstacle_coverage() {
    let config = Config::bundled();
    let bounds = config.constraints.bounds();
    let n_t = config.constraints.n_tangents;
    let grid = JointGrid::new(&bounds, 150);
    for b in &config.obstacles {
        let oc = build_obstacle(b, &config.crane, &bounds, config.constraints.grid_n, n_t)
            .unwrap()
            .unwrap();
        let gap = diameter(&oc.hull) * (PI / n_t as f64).tan();
        for theta in grid.points() {
            let inside = b.contains_inflated(&boom_payload_position(&theta, &config.crane));
            if inside {
                let d = distance_to_polygon(&oc.hull, &theta);
                assert_eq!(oc.satisfied_count(&theta), 0, "{} at {theta:?}, {d} from hull, margin {}", b.label, oc.steady_margin(&theta));
            } else if distance_to_polygon(&oc.hull, &theta) > gap {
                assert!(oc.is_safe(&theta), "{} at {theta:?}", b.label);
            }
        }
    }
}

#[test]
fn obstacle_certificates() {
    let square = vec![
        Vector2::new(1.0, 1.0),
        Vector2::new(1.2, 1.0),
        Vector2::new(1.2, 1.2),
        Vector2::new(1.0, 1.2),
    ];
    let a = acl();
    let oc = attach_certificates(tangent_embedding(&square, 4, "a").unwrap(), &a).unwrap();
    assert_eq!(oc.certificates.len(), 4);
    assert!(oc.is_certified());
    assert!(oc.certificates.iter().all(|c| c.lyap_residual_max_eig < -1e-10 && c.floor_margin_min_eig > 1e-10));

    let relabeled = attach_certificates(tangent_embedding(&square, 4, "b").unwrap(), &a).unwrap();
    assert_eq!(relabeled.certificates, oc.certificates);

    let again = attach_certificates(oc.clone(), &a).unwrap();
    assert!(again.is_certified());
    assert_eq!(again.certificates, oc.certificates);
}
