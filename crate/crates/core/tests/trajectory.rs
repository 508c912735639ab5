mod common;

use guidetrack::trajectory::{
    generate_bezier, load_trajectory, path_stats, random_bezier_curve, read_trajectory,
    save_trajectory, write_trajectory, BezierParams, MAX_STEP_POSITION, MAX_STEP_ROTATION,
};
use nalgebra::{UnitQuaternion, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bernstein(p: &[Vector3<f64>; 4], u: f64) -> Vector3<f64> {
    let v = 1.0 - u;
    p[0] * (v * v * v) + p[1] * (3.0 * u * v * v) + p[2] * (3.0 * u * u * v) + p[3] * (u * u * u)
}

/// Cumulative quaternion curve built from nalgebra's own log/exp.
fn cumulative(q: &[UnitQuaternion<f64>; 4], u: f64) -> UnitQuaternion<f64> {
    let v = 1.0 - u;
    let basis = [1.0 - v * v * v, 3.0 * u * u - 2.0 * u * u * u, u * u * u];
    let mut acc = q[0];
    for i in 1..4 {
        let w = (q[i - 1].inverse() * q[i]).scaled_axis();
        acc *= UnitQuaternion::from_scaled_axis(w * basis[i - 1]);
    }
    acc
}

#[test]
fn generated_curve_matches_polynomial_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let params = BezierParams {
        segments: 3,
        max_rotation: 1.5,
        ..Default::default()
    };
    let curve = random_bezier_curve(&mut rng, &params).unwrap();
    for seg in 0..3 {
        for k in 0..=20 {
            let u = k as f64 / 20.0;
            let pose = curve.eval(seg as f64 + u);
            // the last parameter of a segment is the next segment's start
            let (s, u) = if k == 20 && seg < 2 {
                (seg + 1, 0.0)
            } else {
                (seg, u)
            };
            let p = bernstein(&curve.positions[s], u);
            assert!((pose.position - p).norm() < 1e-12, "segment {seg} u {u}");
            let q = cumulative(&curve.orientations[s], u);
            assert!(pose.orientation.angle_to(&q) < 1e-9, "segment {seg} u {u}");
        }
    }
}

#[test]
fn chained_segments_join_with_matching_velocity() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let params = BezierParams {
        segments: 4,
        max_rotation: 2.0,
        ..Default::default()
    };
    let curve = random_bezier_curve(&mut rng, &params).unwrap();
    let h = 1e-6;
    for joint in 1..4 {
        let t = joint as f64;
        let (before, at, after) = (curve.eval(t - h), curve.eval(t), curve.eval(t + h));
        let v_in = (at.position - before.position) / h;
        let v_out = (after.position - at.position) / h;
        assert!(
            (v_in - v_out).norm() < 1e-4 * v_in.norm().max(1.0),
            "position at {joint}"
        );
        let w_in = (before.orientation.inverse() * at.orientation).scaled_axis() / h;
        let w_out = (at.orientation.inverse() * after.orientation).scaled_axis() / h;
        assert!(
            (w_in - w_out).norm() < 1e-4 * w_in.norm().max(1.0),
            "rotation at {joint}"
        );
    }
}

#[test]
fn generation_respects_density_and_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let traj = generate_bezier(&mut rng, &BezierParams::default()).unwrap();
    assert!(traj.len() >= 200);
    assert!((traj.duration() - 20.0).abs() < 1e-12);
    for i in 1..traj.len() {
        let (a, b) = (traj.pose(i - 1), traj.pose(i));
        assert!((b.position - a.position).norm() <= MAX_STEP_POSITION + 1e-12);
        assert!(a.orientation.angle_to(&b.orientation) <= MAX_STEP_ROTATION + 1e-12);
        assert!(traj.time(i) > traj.time(i - 1));
    }
    let (length, rotation) = path_stats(&traj);
    assert!(length > 0.0 && rotation >= 0.0);
}

#[test]
fn same_seed_gives_same_trajectory() {
    let params = BezierParams {
        segments: 2,
        ..Default::default()
    };
    let a = generate_bezier(&mut ChaCha8Rng::seed_from_u64(7), &params).unwrap();
    let b = generate_bezier(&mut ChaCha8Rng::seed_from_u64(7), &params).unwrap();
    let c = generate_bezier(&mut ChaCha8Rng::seed_from_u64(8), &params).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn csv_round_trip_preserves_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let traj =
        generate_bezier(&mut ChaCha8Rng::seed_from_u64(34), &BezierParams::default()).unwrap();
    save_trajectory(&traj, &path).unwrap();
    let back = load_trajectory(&path).unwrap();
    assert_eq!(traj.len(), back.len());
    for i in 0..traj.len() {
        assert_eq!(traj.time(i), back.time(i));
        assert_eq!(traj.pose(i).position, back.pose(i).position);
        // loading renormalizes quaternions, which may move the last bit
        let (a, b) = (traj.pose(i).wxyz(), back.pose(i).wxyz());
        assert!(
            a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-15),
            "{a:?} vs {b:?}"
        );
    }
    // after one load the file is a fixed point of save/load
    let mut first = Vec::new();
    let mut second = Vec::new();
    write_trajectory(&back, &mut first).unwrap();
    let again = read_trajectory(first.as_slice()).unwrap();
    write_trajectory(&again, &mut second).unwrap();
    assert_eq!(first, second);
}

#[test]
fn malformed_files_are_rejected() {
    let header = "t,x,y,z,qw,qx,qy,qz\n";
    let cases = [
        // quaternion norm 0.9
        format!("{header}0,0,0,0,0.9,0,0,0\n0.1,0,0,0,1,0,0,0\n"),
        // non-increasing time
        format!("{header}0,0,0,0,1,0,0,0\n0,0,0,0,1,0,0,0\n"),
        // wrong header
        "t,x,y,z\n0,0,0,0\n".to_string(),
        // too few waypoints
        format!("{header}0,0,0,0,1,0,0,0\n"),
        // waypoints too far apart
        format!("{header}0,0,0,0,1,0,0,0\n0.1,1,0,0,1,0,0,0\n"),
        // not a number
        format!("{header}0,0,0,zero,1,0,0,0\n0.1,0,0,0,1,0,0,0\n"),
    ];
    for text in &cases {
        assert!(read_trajectory(text.as_bytes()).is_err(), "{text}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generated_waypoints_are_dense_and_inside_the_hull(seed in any::<u64>(), segments in 1usize..4) {
        let params = BezierParams { segments, ..Default::default() };
        let traj = generate_bezier(&mut ChaCha8Rng::seed_from_u64(seed), &params).unwrap();
        prop_assert!(traj.check_density().is_ok());
        // Bezier curves stay in the convex hull of their controls, which
        // lie in the ball or are mirrored from it (at most 3 radii away)
        for w in traj.waypoints() {
            let r = (w.pose.position - params.workspace_center).norm();
            prop_assert!(r <= 3.0 * params.workspace_radius + 1e-9);
        }
    }
}
