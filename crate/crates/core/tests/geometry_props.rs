#[path = "support/oracle.rs"]
mod oracle;

use graspbench::angle::{angle_to_class, class_to_angle, BIN_WIDTH};
use graspbench::eval::{is_correct, MetricConfig};
use graspbench::geometry::{
    angle_difference, angled_to_pose, jaccard, normalize_angle, pose_to_angled, pose_to_quad,
    quad_to_pose, GraspPose, RigidTransform, RECTANGLE_TOLERANCE,
};
use graspbench::Point;
use proptest::prelude::*;

fn pose() -> impl Strategy<Value = GraspPose> {
    (-200.0..200.0f64, -200.0..200.0f64, -90.0..90.0f64, 1.0..80.0f64, 1.0..80.0f64)
        .prop_map(|(x, y, t, h, w)| GraspPose::new(x, y, t, h, w).unwrap())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn same_pose(a: &GraspPose, b: &GraspPose, tol: f64) -> bool {
    close(a.x, b.x, tol)
        && close(a.y, b.y, tol)
        && angle_difference(a.theta, b.theta) <= tol
        && close(a.h, b.h, tol)
        && close(a.w, b.w, tol)
}

proptest! {
    #[test]
    fn normalized_angles_are_half_open(a in -1e4..1e4f64) {
        let n = normalize_angle(a);
        prop_assert!((-90.0..90.0).contains(&n));
        prop_assert!(angle_difference(a, n) < 1e-9);
    }

    #[test]
    fn angle_difference_ignores_half_turns(a in -90.0..90.0f64, b in -90.0..90.0f64, k in -5i32..5) {
        let d = angle_difference(a, b);
        prop_assert!((0.0..=90.0).contains(&d));
        prop_assert!(close(angle_difference(a + 180.0 * k as f64, b), d, 1e-9));
        prop_assert!(angle_difference(a, a + 180.0 * k as f64) < 1e-9);
    }

    #[test]
    fn quad_round_trip(p in pose()) {
        let q = pose_to_quad(&p);
        prop_assert!(q.validate(RECTANGLE_TOLERANCE).is_ok());
        let back = quad_to_pose(&q).unwrap();
        prop_assert!(same_pose(&p, &back, 1e-9), "{p:?} -> {back:?}");
        for (a, b) in q.vertices.iter().zip(oracle::rect_corners(p.to_array())) {
            prop_assert!(close(a.x, b.0, 1e-9) && close(a.y, b.1, 1e-9));
        }
    }

    #[test]
    fn angled_round_trip(p in pose()) {
        let back = angled_to_pose(&pose_to_angled(&p)).unwrap();
        prop_assert!(same_pose(&p, &back, 1e-9));
    }

    #[test]
    fn jaccard_is_bounded_and_symmetric(a in pose(), b in pose()) {
        let j = jaccard(&a, &b);
        prop_assert!((0.0..=1.0).contains(&j));
        prop_assert!(close(j, jaccard(&b, &a), 1e-9));
        prop_assert!(close(jaccard(&a, &a), 1.0, 1e-9));
    }

    #[test]
    fn rigid_transform_commutes_with_quad(p in pose(), r in -180.0..180.0f64, dx in -50.0..50.0f64, dy in -50.0..50.0f64) {
        let t = RigidTransform { rotation_deg: r, center: Point::new(12.5, -3.0), translation: Point::new(dx, dy) };
        let via_vertices = quad_to_pose(&t.apply_quad(&pose_to_quad(&p))).unwrap();
        prop_assert!(same_pose(&t.apply_pose(&p), &via_vertices, 1e-6));
    }

    #[test]
    fn class_centers_are_within_half_a_bin(theta in -90.0..90.0f64) {
        let c = angle_to_class(theta).unwrap();
        prop_assert!((1..=19).contains(&c.index()));
        let center = class_to_angle(c).unwrap();
        prop_assert!((theta - center).abs() <= BIN_WIDTH / 2.0 + 1e-9);
    }

    #[test]
    fn metric_ignores_half_turn_of_prediction(p in pose(), g in pose()) {
        let cfg = MetricConfig::default();
        let flipped = GraspPose::new(p.x, p.y, p.theta + 180.0, p.h, p.w).unwrap();
        let a = is_correct(&p, &[g], &cfg).unwrap();
        let b = is_correct(&flipped, &[g], &cfg).unwrap();
        prop_assert_eq!(a.correct, b.correct);
        prop_assert!(close(a.jaccard, b.jaccard, 1e-9));
    }
}

#[test]
fn jaccard_agrees_with_rasterization() {
    let mut rng = graspbench::SplitMix64::new(11);
    for _ in 0..40 {
        let mut g = || {
            [
                rng.uniform(40.0, 60.0),
                rng.uniform(40.0, 60.0),
                rng.uniform(-90.0, 90.0),
                rng.uniform(5.0, 30.0),
                rng.uniform(5.0, 30.0),
            ]
        };
        let (a, b) = (g(), g());
        let expected = oracle::raster_jaccard(a, b, 0.02);
        let got = jaccard(&GraspPose::from_array(a).unwrap(), &GraspPose::from_array(b).unwrap());
        assert!((got - expected).abs() < 2e-3, "{a:?} {b:?}: {got} vs {expected}");
    }
}
