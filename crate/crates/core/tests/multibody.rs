mod common;

use nalgebra::{DVector, Vector3};
use proptest::prelude::*;
use ramp_core::model::{BaseMode, TaskKind};
use ramp_core::multibody::{
    forward_kinematics, inertia_matrices, inverse_kinematics, jacobians, system_momentum, IkTarget, Kinematics,
};
use ramp_core::presets::{dual_arm, quadruped};
use ramp_core::state::SystemState;
use ramp_core::ModelError;

#[test]
fn zero_configuration_tips_sum_frame_offsets() {
    let model = quadruped();
    let state = SystemState::rest(&model);
    let fk = forward_kinematics(&model, &state).unwrap();
    for (l, limb) in model.limbs.iter().enumerate() {
        let mut expected = Vector3::zeros();
        let mut rot = nalgebra::Matrix3::identity();
        for &j in &limb.joints {
            expected += rot * model.links[j].offset;
            rot *= model.links[j].mount.to_rotation_matrix().matrix();
        }
        expected += rot * limb.tip;
        assert!((fk.end_effectors[l].position - expected).norm() < 1e-15);
    }
}

#[test]
fn planar_arm_stretched_length_is_sum_of_links() {
    let model = dual_arm();
    let state = SystemState::rest(&model);
    let kin = Kinematics::compute(&model, &state).unwrap();
    for l in 0..2 {
        let shoulder = kin.links[model.limbs[l].joints[0]].origin;
        let tip = kin.end_effector(&model, l).position;
        assert!(((tip - shoulder).norm() - (0.025 + 0.0175 + 0.08725)).abs() < 1e-12);
    }
}

#[test]
fn forward_kinematics_matches_transform_chain() {
    let mut rng = common::rng(11);
    for model in common::models() {
        for _ in 0..100 {
            let state = common::random_state(&model, &mut rng);
            let fk = forward_kinematics(&model, &state).unwrap();
            let oracle = common::transform_chain(&model, &state);
            for (ee, tip) in fk.end_effectors.iter().zip(&oracle.tips) {
                assert!((ee.position - tip).norm() < 1e-12);
            }
            for ((com, _), expected) in fk.link_coms.iter().zip(&oracle.coms) {
                assert!((com - expected).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn dimension_mismatch_is_reported() {
    let model = quadruped();
    let mut state = SystemState::rest(&model);
    state.joint_angles = DVector::zeros(3);
    assert!(matches!(forward_kinematics(&model, &state), Err(ModelError::Incompatible(_))));
}

#[test]
fn rigid_translation_moves_tip_with_base() {
    let model = quadruped();
    let mut state = SystemState::rest(&model);
    state.joint_angles[1] = -0.4;
    state.joint_angles[2] = 1.6;
    let set = jacobians(&model, &state, 0, TaskKind::Position).unwrap();
    let twist = DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let v = &set.j_b * twist;
    assert!((v - DVector::from_column_slice(&[1.0, 0.0, 0.0])).amax() < 1e-15);
}

fn fd_check(model: &ramp_core::RobotModel, state: &SystemState, limb: usize, kind: TaskKind) {
    let err = common::jacobian_fd_error(model, state, limb, kind);
    assert!(err < 1e-5, "limb {limb}: {err:e}");
}

#[test]
fn jacobians_match_finite_differences() {
    let mut rng = common::rng(5);
    for model in common::models() {
        for _ in 0..25 {
            let state = common::random_state(&model, &mut rng);
            for limb in 0..model.limbs.len() {
                fd_check(&model, &state, limb, TaskKind::Position);
                if model.mode == BaseMode::Planar {
                    fd_check(&model, &state, limb, TaskKind::Pose);
                }
            }
        }
    }
}

#[test]
fn fully_extended_planar_limb_is_singular() {
    let model = dual_arm();
    let state = SystemState::rest(&model);
    for kind in [TaskKind::Position, TaskKind::Pose] {
        let set = jacobians(&model, &state, 1, kind).unwrap();
        let sv = set.j_m.clone().singular_values();
        assert!(sv.min() < 1e-6, "{kind:?}: {}", sv.min());
    }
}

#[test]
fn lone_body_inertia_is_its_spatial_inertia() {
    let model = quadruped();
    let lone = ramp_core::RobotModel::new("lone", BaseMode::Spatial, model.base.clone(), vec![], vec![]).unwrap();
    let state = SystemState::rest(&lone);
    let set = inertia_matrices(&lone, &state).unwrap();
    let m = model.base.mass;
    let mut expected = nalgebra::DMatrix::zeros(6, 6);
    for i in 0..3 {
        expected[(i, i)] = m;
    }
    expected.view_mut((3, 3), (3, 3)).copy_from(&model.base.inertia);
    assert!((set.h_b - expected).amax() < 1e-15);
    assert!(set.h_bm.is_empty());
}

#[test]
fn massless_limbs_have_no_coupling() {
    let mut model = quadruped();
    for l in &mut model.links {
        l.body.mass = 1e-300;
        l.body.inertia = nalgebra::Matrix3::identity() * 1e-300;
    }
    let mut rng = common::rng(3);
    let state = common::random_state(&model, &mut rng);
    let set = inertia_matrices(&model, &state).unwrap();
    for h in &set.h_bm {
        assert!(h.amax() < 1e-290);
    }
}

#[test]
fn momentum_matches_per_link_oracle() {
    let mut rng = common::rng(21);
    for model in common::models() {
        for _ in 0..100 {
            let state = common::random_state(&model, &mut rng);
            let m = system_momentum(&model, &state, &[0]).unwrap();
            let oracle = common::oracle_base_momentum(&model, &state);
            assert!((&m.total - &oracle).amax() < 1e-9, "{}", (&m.total - &oracle).amax());
            let parts = &m.base_part + &m.support_part + &m.swing_part;
            assert!((parts - &m.total).amax() <= 1e-12);
        }
    }
}

#[test]
fn static_robot_has_zero_momentum() {
    let model = quadruped();
    let mut state = SystemState::rest(&model);
    state.joint_angles[4] = 0.3;
    let m = system_momentum(&model, &state, &[1]).unwrap();
    assert_eq!(m.total.amax(), 0.0);
}

#[test]
fn base_only_motion_reduces_to_base_inertia() {
    let mut rng = common::rng(8);
    for model in common::models() {
        let mut state = common::random_state(&model, &mut rng);
        state.joint_rates.fill(0.0);
        let set = inertia_matrices(&model, &state).unwrap();
        let m = system_momentum(&model, &state, &[0]).unwrap();
        assert_eq!(m.total, &set.h_b * state.base_twist(model.mode));
        assert_eq!(m.swing_part.amax(), 0.0);
        assert_eq!(m.support_part.amax(), 0.0);
        // H_b is symmetric positive definite
        assert!((&set.h_b - set.h_b.transpose()).amax() < 1e-12);
        assert!(set.h_b.clone().cholesky().is_some());
    }
}

#[test]
fn planar_model_embeds_in_spatial_mode() {
    let planar = dual_arm();
    let spatial = ramp_core::RobotModel::new(
        "embedded",
        BaseMode::Spatial,
        planar.base.clone(),
        planar.links.clone(),
        planar.limbs.clone(),
    )
    .unwrap();
    let mut rng = common::rng(99);
    for _ in 0..50 {
        let state = common::random_state(&planar, &mut rng);
        let a = system_momentum(&planar, &state, &[1]).unwrap().total;
        let b = system_momentum(&spatial, &state, &[1]).unwrap().total;
        assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9 && (a[2] - b[5]).abs() < 1e-9);
    }
}

#[test]
fn ik_round_trips_random_reachable_targets() {
    let model = quadruped();
    let mut rng = common::rng(17);
    let mut solved = 0;
    for _ in 0..200 {
        let state = common::random_state(&model, &mut rng);
        let limb = 2;
        let joints = &model.limbs[limb].joints;
        let target = Kinematics::compute(&model, &state).unwrap().end_effector(&model, limb).position;
        // seed nearby so the solver stays on the same branch
        let seed = DVector::from_iterator(3, joints.iter().map(|&j| state.joint_angles[j] + 0.1));
        if let Ok(sol) = inverse_kinematics(&model, limb, &IkTarget::position(target), &state.base_pose(), &seed) {
            let mut s = state.clone();
            for (k, &j) in joints.iter().enumerate() {
                s.joint_angles[j] = sol[k];
            }
            let got = Kinematics::compute(&model, &s).unwrap().end_effector(&model, limb).position;
            assert!((got - target).norm() < 1e-6);
            solved += 1;
        }
    }
    assert!(solved > 150, "only {solved} solved");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobian_predicts_first_order_motion(seed in 0u64..10_000, scale in 1e-5f64..1e-3) {
        let model = quadruped();
        let mut rng = common::rng(seed);
        let state = common::random_state(&model, &mut rng);
        let dir = common::random_state(&model, &mut rng).joint_rates;
        let set = jacobians(&model, &state, 1, TaskKind::Position).unwrap();
        let joints = &model.limbs[1].joints;
        let mut moved = state.clone();
        let mut delta = DVector::zeros(joints.len());
        for (k, &j) in joints.iter().enumerate() {
            delta[k] = dir[j] * scale;
            moved.joint_angles[j] += delta[k];
        }
        let x0 = Kinematics::compute(&model, &state).unwrap().end_effector(&model, 1).position;
        let x1 = Kinematics::compute(&model, &moved).unwrap().end_effector(&model, 1).position;
        let predicted = &set.j_m * &delta;
        let err = (x1 - x0 - Vector3::new(predicted[0], predicted[1], predicted[2])).norm();
        prop_assert!(err <= 1.0 * delta.norm_squared() + 1e-15);
    }

    #[test]
    fn pinv_is_generalized_inverse_when_well_conditioned(seed in 0u64..10_000) {
        let model = dual_arm();
        let mut rng = common::rng(seed);
        let state = common::random_state(&model, &mut rng);
        let set = jacobians(&model, &state, 0, TaskKind::Pose).unwrap();
        prop_assume!(set.j_m_pinv.sigma_min > 1e-2);
        let back = &set.j_m * &set.j_m_pinv.matrix * &set.j_m;
        prop_assert!((back - &set.j_m).amax() < 1e-8);
    }
}
