use nalgebra::Vector3;
use proptest::prelude::*;
use rebo_core::fixtures::default_rig;
use rebo_core::kinematics::{
    cartesian_to_lengths, cartesian_to_motor, circle_path, ideal_tracking, jacobian, jacobian_determinant,
    lengths_to_cartesian, motor_to_cartesian, tracking_error, CirclePlane, KinematicsError,
};

fn lengths() -> impl Strategy<Value = [f64; 3]> {
    [66.0f64..88.0, 66.0f64..88.0, 66.0f64..88.0]
}

proptest! {
    #[test]
    fn jacobian_matches_finite_differences(q in lengths()) {
        let rig = default_rig();
        let j = jacobian(q, rig.d_mm).unwrap();
        let step = 1e-5;
        for col in 0..3 {
            let mut hi = q;
            let mut lo = q;
            hi[col] += step;
            lo[col] -= step;
            let fd = (lengths_to_cartesian(hi, &rig).unwrap() - lengths_to_cartesian(lo, &rig).unwrap()) / (2.0 * step);
            for row in 0..3 {
                prop_assert!((fd[row] - j[(row, col)]).abs() < 1e-6, "J[{row},{col}] fd {} analytic {}", fd[row], j[(row, col)]);
            }
        }
    }

    #[test]
    fn determinant_formula_matches_matrix(q in lengths()) {
        let rig = default_rig();
        let det = jacobian(q, rig.d_mm).unwrap().determinant().abs();
        let closed = jacobian_determinant(q, rig.d_mm).unwrap();
        prop_assert!((det - closed).abs() <= 1e-10 * closed);
    }

    #[test]
    fn cartesian_round_trip(q in lengths()) {
        let rig = default_rig();
        let p = lengths_to_cartesian(q, &rig).unwrap();
        let back = lengths_to_cartesian(cartesian_to_lengths(&p, &rig).unwrap(), &rig).unwrap();
        prop_assert!((back - p).norm() < 1e-9);
    }

    #[test]
    fn motor_round_trip(q in lengths()) {
        let rig = default_rig();
        let p = lengths_to_cartesian(q, &rig).unwrap();
        let m = cartesian_to_motor(&p, &rig).unwrap();
        prop_assert!((motor_to_cartesian(m, &rig).unwrap() - p).norm() < 1e-9);
    }
}

#[test]
fn unreachable_pose_names_the_actuator() {
    let rig = default_rig();
    let err = cartesian_to_lengths(&Vector3::new(0.0, 0.0, 120.0), &rig).unwrap_err();
    assert!(matches!(err, KinematicsError::LengthOutOfRange { bound: "l_max", .. }));
}

#[test]
fn ideal_tracking_is_exact_inside_workspace() {
    let rig = default_rig();
    for plane in [CirclePlane::Horizontal, CirclePlane::Vertical] {
        let path = circle_path(Vector3::new(0.0, 0.0, 77.0), 3.0, plane, 64);
        let tracked = ideal_tracking(&path, &rig).unwrap();
        assert!(tracking_error(&tracked, &path).unwrap() < 1e-9);
    }
}
