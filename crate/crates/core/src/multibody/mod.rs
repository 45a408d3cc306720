//! Kinematic-tree quantities: forward kinematics, Jacobians, inertia
//! matrices, system momentum and inverse kinematics.

mod ik;
mod kinematics;
mod momentum;

pub(crate) use ik::{chain, Chain};
pub use ik::{inverse_kinematics, IkTarget, MAX_ITERATIONS, POSITION_TOLERANCE, STEP_CAP};
pub use kinematics::{forward_kinematics, yaw_rotation, EndEffector, ForwardKinematics, Kinematics, LinkFrame};
pub use momentum::{
    base_momentum_matrix, body_jacobians, center_of_mass, inertia_matrices, kinetic_energy, mass_matrix,
    momentum_about, momentum_matrix, reduce_rows, reduce_vector, system_momentum, BodyJacobian, InertiaSet,
    MomentumState,
};

use nalgebra::DMatrix;

use crate::error::ModelError;
use crate::linalg::{damped_pinv, PseudoInverse};
use crate::model::{RobotModel, TaskKind};
use crate::state::SystemState;

/// Base and manipulator Jacobians of one limb tip, with the damped
/// pseudoinverse of the manipulator part.
#[derive(Debug, Clone)]
pub struct JacobianSet {
    pub j_b: DMatrix<f64>,
    pub j_m: DMatrix<f64>,
    pub j_m_pinv: PseudoInverse,
}

impl JacobianSet {
    pub fn from_kinematics(model: &RobotModel, kin: &Kinematics, limb: usize, kind: TaskKind) -> Self {
        let full = kin.task_jacobian(model, limb, kind);
        let d = model.base_dof();
        let cols: Vec<usize> = model.limbs[limb].joints.iter().map(|j| d + j).collect();
        let j_m = full.select_columns(&cols);
        JacobianSet {
            j_b: full.columns(0, d).into_owned(),
            j_m_pinv: damped_pinv(&j_m),
            j_m,
        }
    }
}

pub fn jacobians(model: &RobotModel, state: &SystemState, limb: usize, kind: TaskKind) -> Result<JacobianSet, ModelError> {
    model.limb(limb)?;
    let kin = Kinematics::compute(model, state)?;
    Ok(JacobianSet::from_kinematics(model, &kin, limb, kind))
}
