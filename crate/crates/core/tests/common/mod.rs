//! Independent reference evaluators used to check the library.
//!
//! Nothing here calls into `ramp_core::multibody`; link placement comes from
//! homogeneous transforms and velocities from a recursive outward sweep.
#![allow(dead_code)]

use nalgebra::{DVector, Matrix3, Matrix4, Rotation3, UnitQuaternion, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ramp_core::model::{BaseMode, RobotModel, TaskKind};
use ramp_core::state::SystemState;

pub struct OracleFrames {
    pub transforms: Vec<Matrix4<f64>>,
    pub coms: Vec<Vector3<f64>>,
    pub tips: Vec<Vector3<f64>>,
    pub base: Matrix4<f64>,
}

fn homogeneous(rot: &Matrix3<f64>, p: &Vector3<f64>) -> Matrix4<f64> {
    let mut t = Matrix4::identity();
    t.fixed_view_mut::<3, 3>(0, 0).copy_from(rot);
    t.fixed_view_mut::<3, 1>(0, 3).copy_from(p);
    t
}

fn apply(t: &Matrix4<f64>, p: &Vector3<f64>) -> Vector3<f64> {
    let h = t * Vector4::new(p.x, p.y, p.z, 1.0);
    Vector3::new(h.x, h.y, h.z)
}

fn rot_of(t: &Matrix4<f64>) -> Matrix3<f64> {
    t.fixed_view::<3, 3>(0, 0).into_owned()
}

pub fn transform_chain(model: &RobotModel, state: &SystemState) -> OracleFrames {
    let base = homogeneous(
        state.base_orientation.to_rotation_matrix().matrix(),
        &state.base_position,
    );
    let mut transforms: Vec<Matrix4<f64>> = Vec::new();
    for (i, link) in model.links.iter().enumerate() {
        let parent = link.parent.map(|p| transforms[p]).unwrap_or(base);
        let t = parent
            * homogeneous(&Matrix3::identity(), &link.offset)
            * homogeneous(link.mount.to_rotation_matrix().matrix(), &Vector3::zeros())
            * homogeneous(
                Rotation3::from_axis_angle(&link.axis, state.joint_angles[i]).matrix(),
                &Vector3::zeros(),
            );
        transforms.push(t);
    }
    let coms = model
        .links
        .iter()
        .zip(&transforms)
        .map(|(l, t)| apply(t, &l.body.com))
        .collect();
    let tips = model
        .limbs
        .iter()
        .map(|limb| apply(&transforms[*limb.joints.last().unwrap()], &limb.tip))
        .collect();
    OracleFrames {
        transforms,
        coms,
        tips,
        base,
    }
}

/// Spatial momentum `[P; L]` about `about`, summed link by link from
/// velocities propagated outward from the base.
pub fn per_link_momentum(model: &RobotModel, state: &SystemState, about: &Vector3<f64>) -> [f64; 6] {
    let f = transform_chain(model, state);
    let rb = state.base_position;
    let wb = state.base_angular_velocity;
    let vb = state.base_linear_velocity;
    // (angular velocity, frame origin, origin velocity)
    let mut bodies: Vec<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> = Vec::new();
    let mut p = Vector3::zeros();
    let mut l = Vector3::zeros();
    let mut add = |m: f64, inertia: &Matrix3<f64>, rot: &Matrix3<f64>, com: &Vector3<f64>, w: &Vector3<f64>, vc: &Vector3<f64>| {
        p += vc * m;
        l += rot * inertia * rot.transpose() * w + (com - about).cross(&(vc * m));
    };
    let base_rot = rot_of(&f.base);
    let base_com = apply(&f.base, &model.base.com);
    add(model.base.mass, &model.base.inertia, &base_rot, &base_com, &wb, &(vb + wb.cross(&(base_com - rb))));
    for (i, link) in model.links.iter().enumerate() {
        let t = &f.transforms[i];
        let origin = apply(t, &Vector3::zeros());
        let (w_par, o_par, v_par) = match link.parent {
            None => (wb, rb, vb),
            Some(pi) => bodies[pi],
        };
        let parent_rot = match link.parent {
            None => base_rot,
            Some(pi) => rot_of(&f.transforms[pi]),
        };
        let axis = parent_rot * (link.mount * link.axis.into_inner());
        let w = w_par + axis * state.joint_rates[i];
        let v_origin = v_par + w_par.cross(&(origin - o_par));
        let com = f.coms[i];
        let vc = v_origin + w.cross(&(com - origin));
        add(link.body.mass, &link.body.inertia, &rot_of(t), &com, &w, &vc);
        bodies.push((w, origin, v_origin));
    }
    [p.x, p.y, p.z, l.x, l.y, l.z]
}

/// Kinetic energy summed link by link with the same outward sweep.
pub fn kinetic_energy(model: &RobotModel, state: &SystemState) -> f64 {
    let f = transform_chain(model, state);
    let rb = state.base_position;
    let wb = state.base_angular_velocity;
    let vb = state.base_linear_velocity;
    let body = |m: f64, inertia: &Matrix3<f64>, rot: &Matrix3<f64>, w: &Vector3<f64>, vc: &Vector3<f64>| {
        0.5 * m * vc.norm_squared() + 0.5 * w.dot(&(rot * inertia * rot.transpose() * w))
    };
    let base_rot = rot_of(&f.base);
    let base_com = apply(&f.base, &model.base.com);
    let mut e = body(model.base.mass, &model.base.inertia, &base_rot, &wb, &(vb + wb.cross(&(base_com - rb))));
    let mut frames: Vec<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> = Vec::new();
    for (i, link) in model.links.iter().enumerate() {
        let t = &f.transforms[i];
        let origin = apply(t, &Vector3::zeros());
        let (w_par, o_par, v_par, parent_rot) = match link.parent {
            None => (wb, rb, vb, base_rot),
            Some(pi) => (frames[pi].0, frames[pi].1, frames[pi].2, rot_of(&f.transforms[pi])),
        };
        let axis = parent_rot * (link.mount * link.axis.into_inner());
        let w = w_par + axis * state.joint_rates[i];
        let v_origin = v_par + w_par.cross(&(origin - o_par));
        let vc = v_origin + w.cross(&(f.coms[i] - origin));
        e += body(link.body.mass, &link.body.inertia, &rot_of(t), &w, &vc);
        frames.push((w, origin, v_origin));
    }
    e
}

/// Oracle momentum reduced to the model's motion space, about the base origin.
pub fn oracle_base_momentum(model: &RobotModel, state: &SystemState) -> DVector<f64> {
    let m = per_link_momentum(model, state, &state.base_position);
    match model.mode {
        BaseMode::Spatial => DVector::from_column_slice(&m),
        BaseMode::Planar => DVector::from_column_slice(&[m[0], m[1], m[5]]),
    }
}

/// Random state with joint angles inside the limits.
pub fn random_state(model: &RobotModel, rng: &mut ChaCha8Rng) -> SystemState {
    let mut s = SystemState::rest(model);
    for (i, l) in model.links.iter().enumerate() {
        let (lo, hi) = l.limits;
        s.joint_angles[i] = rng.random_range(lo..hi);
        s.joint_rates[i] = rng.random_range(-2.0..2.0);
    }
    match model.mode {
        BaseMode::Spatial => {
            s.base_position = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            s.base_orientation = UnitQuaternion::from_euler_angles(
                rng.random_range(-3.0..3.0),
                rng.random_range(-1.5..1.5),
                rng.random_range(-3.0..3.0),
            );
            s.base_linear_velocity = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            s.base_angular_velocity = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        BaseMode::Planar => {
            s.base_position = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0);
            s.base_orientation = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), rng.random_range(-3.0..3.0));
            s.base_linear_velocity = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0);
            s.base_angular_velocity = Vector3::new(0.0, 0.0, rng.random_range(-1.0..1.0));
        }
    }
    s
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn models() -> Vec<RobotModel> {
    vec![ramp_core::presets::quadruped(), ramp_core::presets::dual_arm()]
}

/// Dual-arm model with the right arm resting on the first grasp point of a
/// 15 cm stride that runs 5 cm outside its shoulder, bulging away from the body.
pub struct PlanarStep {
    pub model: RobotModel,
    pub state: SystemState,
    pub limb: usize,
    pub start: Vector3<f64>,
    pub target: Vector3<f64>,
    pub up: nalgebra::Unit<Vector3<f64>>,
}

pub fn planar_step() -> PlanarStep {
    use ramp_core::multibody::{inverse_kinematics, IkTarget};
    let model = ramp_core::presets::dual_arm();
    let mut state = SystemState::rest(&model);
    let left = DVector::from_column_slice(&[-0.7, 1.93, -1.23]);
    state.joint_angles.rows_mut(0, 3).copy_from(&left);
    let start = Vector3::new(0.025, -0.13, 0.0);
    let seed = DVector::from_column_slice(&[-0.3, -0.8, -0.8]);
    let sol = inverse_kinematics(&model, 1, &IkTarget::position(start), &state.base_pose(), &seed).unwrap();
    state.joint_angles.rows_mut(3, 3).copy_from(&sol);
    PlanarStep {
        model,
        state,
        limb: 1,
        start,
        target: Vector3::new(0.175, -0.13, 0.0),
        up: nalgebra::Unit::new_normalize(Vector3::new(0.0, -1.0, 0.0)),
    }
}

/// Largest gap between the analytic task Jacobians and central differences.
pub fn jacobian_fd_error(model: &RobotModel, state: &SystemState, limb: usize, kind: TaskKind) -> f64 {
    use ramp_core::multibody::{jacobians, Kinematics};
    let set = jacobians(model, state, limb, kind).unwrap();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let d = model.base_dof();
    let task = |s: &SystemState| Kinematics::compute(model, s).unwrap().task_vector(model, limb, kind);
    for (k, &j) in model.limbs[limb].joints.iter().enumerate() {
        let mut plus = state.clone();
        plus.joint_angles[j] += h;
        let mut minus = state.clone();
        minus.joint_angles[j] -= h;
        let fd = (task(&plus) - task(&minus)) / (2.0 * h);
        worst = worst.max((fd - set.j_m.column(k)).amax());
    }
    // base columns: translate and rotate about world axes
    for c in 0..d {
        let mut tw = DVector::zeros(d);
        tw[c] = 1.0;
        let shift = |sign: f64| {
            let mut s = state.clone();
            let mut t = tw.clone() * (sign * h);
            if model.mode == BaseMode::Planar {
                t = DVector::from_column_slice(&[t[0], t[1], 0.0, 0.0, 0.0, t[2]]);
            }
            s.base_position += Vector3::new(t[0], t[1], t[2]);
            s.base_orientation = nalgebra::UnitQuaternion::from_scaled_axis(Vector3::new(t[3], t[4], t[5])) * s.base_orientation;
            s
        };
        let fd = (task(&shift(1.0)) - task(&shift(-1.0))) / (2.0 * h);
        worst = worst.max((fd - set.j_b.column(c)).amax());
    }
    worst
}

pub const TWO_LINK: &str = r#"
name = "two_link"
planar = true

[base]
size_mm = [100.0, 100.0]
mass_g = 1.0e12
inertia = [1.0e9]

[[segment]]
name = "upper"
size_mm = [300.0]
mass_g = 1000.0
inertia = [0.01]
axis = [0.0, 0.0, 1.0]
limit_deg = [-180.0, 180.0]

[[segment]]
name = "lower"
size_mm = [200.0]
mass_g = 500.0
inertia = [0.004]
axis = [0.0, 0.0, 1.0]
limit_deg = [-180.0, 180.0]

[[limb]]
name = "arm"
mount_mm = [0.0, 0.0, 0.0]
"#;

// Textbook two-link arm on a fixed base, written out by hand.
pub struct TwoLinkLagrangian {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub c1: f64,
    pub c2: f64,
    pub i1: f64,
    pub i2: f64,
}

impl TwoLinkLagrangian {
    pub fn accel(&self, q: [f64; 2], qd: [f64; 2], tau: [f64; 2]) -> [f64; 2] {
        let (s2, c2) = q[1].sin_cos();
        let m11 = self.i1 + self.i2 + self.m1 * self.c1.powi(2)
            + self.m2 * (self.l1.powi(2) + self.c2.powi(2) + 2.0 * self.l1 * self.c2 * c2);
        let m12 = self.i2 + self.m2 * (self.c2.powi(2) + self.l1 * self.c2 * c2);
        let m22 = self.i2 + self.m2 * self.c2.powi(2);
        let h = self.m2 * self.l1 * self.c2 * s2;
        let r1 = tau[0] + h * (2.0 * qd[0] * qd[1] + qd[1] * qd[1]);
        let r2 = tau[1] - h * qd[0] * qd[0];
        let det = m11 * m22 - m12 * m12;
        [(m22 * r1 - m12 * r2) / det, (m11 * r2 - m12 * r1) / det]
    }

    pub fn rk4(&self, q: [f64; 2], qd: [f64; 2], tau: [f64; 2], h: f64) -> ([f64; 2], [f64; 2]) {
        let f = |q: [f64; 2], qd: [f64; 2]| (qd, self.accel(q, qd, tau));
        let add = |a: [f64; 2], b: [f64; 2], s: f64| [a[0] + b[0] * s, a[1] + b[1] * s];
        let (k1q, k1v) = f(q, qd);
        let (k2q, k2v) = f(add(q, k1q, h / 2.0), add(qd, k1v, h / 2.0));
        let (k3q, k3v) = f(add(q, k2q, h / 2.0), add(qd, k2v, h / 2.0));
        let (k4q, k4v) = f(add(q, k3q, h), add(qd, k3v, h));
        let comb = |a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]| {
            [(a[0] + 2.0 * b[0] + 2.0 * c[0] + d[0]) / 6.0, (a[1] + 2.0 * b[1] + 2.0 * c[1] + d[1]) / 6.0]
        };
        (add(q, comb(k1q, k2q, k3q, k4q), h), add(qd, comb(k1v, k2v, k3v, k4v), h))
    }
}

/// Largest angle or rate gap between the simulator and a hand-written
/// Lagrangian two-link arm over one second of torque-driven motion.
pub fn two_link_lagrangian_error() -> f64 {
    let model = ramp_core::model::ModelFile::parse(TWO_LINK).unwrap().build().unwrap();
    let oracle = TwoLinkLagrangian {
        m1: 1.0,
        m2: 0.5,
        l1: 0.3,
        c1: 0.15,
        c2: 0.1,
        i1: 0.01,
        i2: 0.004,
    };
    let mut state = SystemState::rest(&model);
    state.joint_angles = DVector::from_column_slice(&[0.3, 0.8]);
    state.joint_rates = DVector::from_column_slice(&[0.5, -0.4]);
    let (mut q, mut qd) = ([0.3, 0.8], [0.5, -0.4]);
    let dt = 1e-3;
    let zero = Vector3::zeros();
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let t = k as f64 * dt;
        let tau = [0.5 * (3.0 * t).sin() + 0.2, -0.3 * (2.0 * t).cos()];
        state = ramp_core::simdyn::step(&model, &state, &DVector::from_column_slice(&tau), &[], &zero, dt).unwrap();
        for _ in 0..10 {
            (q, qd) = oracle.rk4(q, qd, tau, dt / 10.0);
        }
        for j in 0..2 {
            worst = worst.max((state.joint_angles[j] - q[j]).abs()).max((state.joint_rates[j] - qd[j]).abs());
        }
    }
    assert!((state.time - 1.0).abs() < 1e-12);
    worst
}
