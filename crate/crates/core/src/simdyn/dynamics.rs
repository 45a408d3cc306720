use nalgebra::{DMatrix, DVector, Quaternion, UnitQuaternion, Vector3};

use crate::error::SimError;
use crate::model::{BaseMode, RobotModel};
use crate::multibody::{body_jacobians, mass_matrix, Kinematics};
use crate::state::SystemState;

use super::contact::{contact_force, contact_moment, ContactPoint};

/// Contact wrench on one tip, in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ContactWrench {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
}

/// Tip position, rotation and velocities of a limb.
pub(crate) struct TipMotion {
    pub position: Vector3<f64>,
    pub rotation: nalgebra::Matrix3<f64>,
    pub velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
    pub jt: DMatrix<f64>,
    pub jr: DMatrix<f64>,
}

pub(crate) fn tip_motion(model: &RobotModel, kin: &Kinematics, nu: &DVector<f64>, limb: usize) -> TipMotion {
    let last = *model.limbs[limb].joints.last().expect("limbs are non-empty");
    let ee = kin.end_effector(model, limb);
    let (jt, jr) = kin.point_jacobian(model, Some(last), &ee.position);
    TipMotion {
        position: ee.position,
        rotation: ee.rotation,
        velocity: Vector3::from_iterator((&jt * nu).iter().copied()),
        angular_velocity: Vector3::from_iterator((&jr * nu).iter().copied()),
        jt,
        jr,
    }
}

/// Wrench of every attached contact at `state` (zero for detached ones).
pub fn contact_wrenches(model: &RobotModel, state: &SystemState, contacts: &[ContactPoint]) -> Vec<ContactWrench> {
    let kin = Kinematics::from_parts(model, &state.base_pose(), &state.joint_angles);
    let nu = state.velocity(model.mode);
    contacts
        .iter()
        .map(|c| {
            if !c.attached {
                return ContactWrench::default();
            }
            let tip = tip_motion(model, &kin, &nu, c.limb);
            ContactWrench {
                force: contact_force(c, &tip.position, &tip.velocity),
                moment: contact_moment(c, &tip.rotation, &tip.angular_velocity),
            }
        })
        .collect()
}

/// Velocity-product and gravity terms of the equations of motion,
/// `M ν̇ + bias = Q`.
pub fn bias_forces(model: &RobotModel, kin: &Kinematics, state: &SystemState, gravity: &Vector3<f64>) -> DVector<f64> {
    let bodies = body_jacobians(model, kin);
    let wb = state.base_angular_velocity;
    let n = model.dof();
    let mut w = vec![Vector3::zeros(); n];
    let mut alpha = vec![Vector3::zeros(); n];
    let mut acc = vec![Vector3::zeros(); n];
    // accelerations with zero ν̇: base origin and base angular acceleration vanish
    for (i, link) in model.links.iter().enumerate() {
        let (wp, ap, accp, op) = match link.parent {
            None => (wb, Vector3::zeros(), Vector3::zeros(), kin.base_position),
            Some(p) => (w[p], alpha[p], acc[p], kin.links[p].origin),
        };
        let f = &kin.links[i];
        let r = f.origin - op;
        let spin = f.axis * state.joint_rates[i];
        acc[i] = accp + ap.cross(&r) + wp.cross(&wp.cross(&r));
        w[i] = wp + spin;
        alpha[i] = ap + wp.cross(&spin);
    }
    let mut q = DVector::zeros(model.nv());
    for b in &bodies {
        let (wi, ai, a_origin, origin) = match b.link {
            None => (wb, Vector3::zeros(), Vector3::zeros(), kin.base_position),
            Some(i) => (w[i], alpha[i], acc[i], kin.links[i].origin),
        };
        let rc = b.com - origin;
        let a_com = a_origin + ai.cross(&rc) + wi.cross(&wi.cross(&rc));
        let force = (a_com - gravity) * b.mass;
        let moment = b.inertia * ai + wi.cross(&(b.inertia * wi));
        q += b.jt.transpose() * force + b.jr.transpose() * moment;
    }
    q
}

/// Generalized acceleration under joint torques `tau` and contact wrenches.
pub fn forward_dynamics(
    model: &RobotModel,
    state: &SystemState,
    tau: &DVector<f64>,
    contacts: &[ContactPoint],
    gravity: &Vector3<f64>,
) -> Result<DVector<f64>, SimError> {
    let kin = Kinematics::from_parts(model, &state.base_pose(), &state.joint_angles);
    let nu = state.velocity(model.mode);
    let d = model.base_dof();
    let bodies = body_jacobians(model, &kin);
    let m = mass_matrix(&bodies);
    let mut q = -bias_forces(model, &kin, state, gravity);
    for (k, t) in tau.iter().enumerate() {
        q[d + k] += t;
    }
    for c in contacts.iter().filter(|c| c.attached) {
        let tip = tip_motion(model, &kin, &nu, c.limb);
        let f = contact_force(c, &tip.position, &tip.velocity);
        let mo = contact_moment(c, &tip.rotation, &tip.angular_velocity);
        q += tip.jt.transpose() * f + tip.jr.transpose() * mo;
    }
    m.cholesky()
        .map(|ch| ch.solve(&q))
        .ok_or_else(|| SimError::NumericalBlowup {
            time: state.time,
            detail: "mass matrix is not positive definite".into(),
        })
}

/// Time derivative of the configuration and velocity packed as a state.
struct Derivative {
    position: Vector3<f64>,
    orientation: Quaternion<f64>,
    angles: DVector<f64>,
    nu_dot: DVector<f64>,
}

fn derivative(
    model: &RobotModel,
    state: &SystemState,
    tau: &DVector<f64>,
    contacts: &[ContactPoint],
    gravity: &Vector3<f64>,
) -> Result<Derivative, SimError> {
    let w = state.base_angular_velocity;
    Ok(Derivative {
        position: state.base_linear_velocity,
        orientation: Quaternion::new(0.0, w.x, w.y, w.z) * state.base_orientation.quaternion() * 0.5,
        angles: state.joint_rates.clone(),
        nu_dot: forward_dynamics(model, state, tau, contacts, gravity)?,
    })
}

fn offset(model: &RobotModel, state: &SystemState, k: &Derivative, h: f64) -> SystemState {
    let mut s = state.clone();
    s.base_position += k.position * h;
    s.base_orientation = UnitQuaternion::new_normalize(state.base_orientation.quaternion() + k.orientation * h);
    s.joint_angles += &k.angles * h;
    let nu = state.velocity(model.mode) + &k.nu_dot * h;
    s.set_velocity(model.mode, &nu);
    s.time += h;
    s
}

/// One fourth-order Runge–Kutta step of length `dt`. Torques are held over
/// the step; contact forces follow the state.
pub fn step(
    model: &RobotModel,
    state: &SystemState,
    tau: &DVector<f64>,
    contacts: &[ContactPoint],
    gravity: &Vector3<f64>,
    dt: f64,
) -> Result<SystemState, SimError> {
    let k1 = derivative(model, state, tau, contacts, gravity)?;
    let k2 = derivative(model, &offset(model, state, &k1, 0.5 * dt), tau, contacts, gravity)?;
    let k3 = derivative(model, &offset(model, state, &k2, 0.5 * dt), tau, contacts, gravity)?;
    let k4 = derivative(model, &offset(model, state, &k3, dt), tau, contacts, gravity)?;
    let blend = Derivative {
        position: (k1.position + k2.position * 2.0 + k3.position * 2.0 + k4.position) / 6.0,
        orientation: (k1.orientation + k2.orientation * 2.0 + k3.orientation * 2.0 + k4.orientation) / 6.0,
        angles: (&k1.angles + &k2.angles * 2.0 + &k3.angles * 2.0 + &k4.angles) / 6.0,
        nu_dot: (&k1.nu_dot + &k2.nu_dot * 2.0 + &k3.nu_dot * 2.0 + &k4.nu_dot) / 6.0,
    };
    let mut next = offset(model, state, &blend, dt);
    next.time = state.time + dt;
    if model.mode == BaseMode::Planar {
        // keep the motion in the plane despite rounding
        next.base_position.z = state.base_position.z;
        let yaw = next.yaw();
        next.base_orientation = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw);
    }
    if !next.is_finite() {
        return Err(SimError::NumericalBlowup {
            time: next.time,
            detail: format!("state became non-finite after a step of {dt} s"),
        });
    }
    Ok(next)
}
