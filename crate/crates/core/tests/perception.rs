use fmbench_core::perception::{back_project, parse_detections, CameraModel, DetectionRecord};
use fmbench_core::Point3;
use proptest::prelude::*;

fn camera() -> impl Strategy<Value = CameraModel> {
    (
        100.0..2000.0f64,
        100.0..2000.0f64,
        0.0..1280.0f64,
        0.0..720.0f64,
        (-5.0..5.0f64, -5.0..5.0f64, 0.0..3.0f64),
        -3.2..3.2f64,
    )
        .prop_map(|(fx, fy, cx, cy, (x, y, z), yaw)| {
            CameraModel::new(fx, fy, cx, cy).unwrap().with_pose(Point3::new(x, y, z), yaw)
        })
}

fn record(u: f64, v: f64, depth: f64) -> DetectionRecord {
    DetectionRecord {
        class_label: "box".into(),
        bbox: [u - 10.0, v - 10.0, u + 10.0, v + 10.0],
        depth,
        confidence: 0.9,
    }
}

proptest! {
    // Scaling depth scales the camera-frame offset linearly.
    #[test]
    fn back_projection_is_homogeneous_in_depth(
        cam in camera(), u in 0.0..1280.0f64, v in 0.0..720.0f64, d in 0.1..20.0f64, k in 0.1..10.0f64,
    ) {
        let at = |depth: f64| back_project(&record(u, v, depth), &cam, None).unwrap().position - cam.pos;
        let (a, b) = (at(d), at(k * d));
        prop_assert!((b - a * k).norm() < 1e-6 * (1.0 + b.norm()));
    }

    #[test]
    fn project_then_back_project_round_trips(cam in camera(), offset in (-4.0..4.0f64, -4.0..4.0f64, 0.2..15.0f64)) {
        let world = cam.camera_to_world(Point3::new(offset.0, offset.1, offset.2));
        let (u, v, depth) = cam.project(world).unwrap();
        let back = back_project(&record(u, v, depth), &cam, None).unwrap();
        prop_assert!(back.position.distance(&world) < 1e-6);
    }

    #[test]
    fn fixed_altitude_only_touches_z(cam in camera(), u in 0.0..1280.0f64, v in 0.0..720.0f64, d in 0.1..20.0f64, z in 0.0..3.0f64) {
        let free = back_project(&record(u, v, d), &cam, None).unwrap().position;
        let flat = back_project(&record(u, v, d), &cam, Some(z)).unwrap().position;
        prop_assert_eq!((flat.x, flat.y, flat.z), (free.x, free.y, z));
    }
}

#[test]
fn hand_computed_example() {
    let cam = CameraModel::new(600.0, 600.0, 320.0, 240.0).unwrap();
    let d = DetectionRecord {
        class_label: "box".into(),
        bbox: [900.0, 300.0, 940.0, 340.0],
        depth: 3.0,
        confidence: 0.8,
    };
    let p = back_project(&d, &cam, None).unwrap().position;
    assert!(p.distance(&Point3::new(3.0, 0.4, 3.0)) < 1e-12, "{p}");
}

#[test]
fn malformed_line_reports_its_number() {
    let text = concat!(
        "{\"class\":\"box\",\"bbox\":[0,0,10,10],\"depth_m\":2.0,\"conf\":0.9}\n",
        "\n",
        "{\"class\":\"box\",\"bbox\":[0,0,10],\"depth_m\":2.0,\"conf\":0.9}\n",
    );
    let (line, _) = parse_detections(text, 0.5).unwrap_err();
    assert_eq!(line, 3);
}

#[test]
fn low_confidence_records_are_skipped() {
    let text = concat!(
        "{\"class\":\"box\",\"bbox\":[0,0,10,10],\"depth_m\":2.0,\"conf\":0.9}\n",
        "{\"class\":\"box\",\"bbox\":[0,0,10,10],\"depth_m\":2.0,\"conf\":0.2}\n",
    );
    let loaded = parse_detections(text, 0.5).unwrap();
    assert_eq!(loaded.records.len(), 1);
    assert_eq!(loaded.skipped, 1);
}
