//! Iterative damped-least-squares inverse kinematics for a single limb.

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, UnitQuaternion, Vector3};

use crate::error::IkError;
use crate::linalg::{wrap_angle, DAMPING, DAMPING_NEAR_SINGULAR, ESCALATE_BELOW};
use crate::model::{BaseMode, RobotModel, TaskKind};
use crate::state::BasePose;


pub const MAX_ITERATIONS: usize = 200;
/// Largest joint change allowed in one iteration (rad).
pub const STEP_CAP: f64 = 0.2;
/// Residual accepted as converged inside the loop.
const TIGHT_TOLERANCE: f64 = 1e-12;
/// Residual still accepted after the iteration cap.
pub const POSITION_TOLERANCE: f64 = 1e-6;

/// Desired tip placement. Orientation is optional: without it only the
/// position is solved for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkTarget {
    pub position: Vector3<f64>,
    pub orientation: Option<UnitQuaternion<f64>>,
}

impl IkTarget {
    pub fn position(position: Vector3<f64>) -> Self {
        IkTarget {
            position,
            orientation: None,
        }
    }

    pub fn kind(&self) -> TaskKind {
        if self.orientation.is_some() {
            TaskKind::Pose
        } else {
            TaskKind::Position
        }
    }
}

/// Tip placement and joint frames of one serial limb, computed without the
/// rest of the tree.
pub(crate) struct Chain {
    pub origins: Vec<Vector3<f64>>,
    pub axes: Vec<Vector3<f64>>,
    pub rotations: Vec<Matrix3<f64>>,
    pub tip: Vector3<f64>,
    pub tip_rotation: Matrix3<f64>,
}

pub(crate) fn chain(model: &RobotModel, joints: &[usize], base: &BasePose, angles: &[f64]) -> Chain {
    let mut rot = *base.orientation.to_rotation_matrix().matrix();
    let mut origin = base.position;
    let mut origins = Vec::with_capacity(joints.len());
    let mut axes = Vec::with_capacity(joints.len());
    let mut rotations = Vec::with_capacity(joints.len());
    for (k, &j) in joints.iter().enumerate() {
        let link = &model.links[j];
        origin += rot * link.offset;
        let frame = rot * link.mount.to_rotation_matrix().matrix();
        axes.push(frame * link.axis.into_inner());
        origins.push(origin);
        rot = frame * Rotation3::from_axis_angle(&link.axis, angles[k]).matrix();
        rotations.push(rot);
    }
    let limb = &model.limbs[model.limb_of(joints[0])];
    Chain {
        origins,
        axes,
        rotations,
        tip: origin + rot * limb.tip,
        tip_rotation: rot,
    }
}

fn task_error(mode: BaseMode, c: &Chain, target: &IkTarget) -> DVector<f64> {
    let dp = target.position - c.tip;
    match (mode, target.orientation) {
        (BaseMode::Planar, None) => DVector::from_column_slice(&[dp.x, dp.y]),
        (BaseMode::Planar, Some(q)) => {
            let r = q.to_rotation_matrix();
            let yaw = r[(1, 0)].atan2(r[(0, 0)]);
            let ee_yaw = c.tip_rotation[(1, 0)].atan2(c.tip_rotation[(0, 0)]);
            DVector::from_column_slice(&[dp.x, dp.y, wrap_angle(yaw - ee_yaw)])
        }
        (BaseMode::Spatial, None) => DVector::from_column_slice(&[dp.x, dp.y, dp.z]),
        (BaseMode::Spatial, Some(q)) => {
            let err = (q.to_rotation_matrix() * Rotation3::from_matrix_unchecked(c.tip_rotation).transpose()).scaled_axis();
            DVector::from_column_slice(&[dp.x, dp.y, dp.z, err.x, err.y, err.z])
        }
    }
}

fn chain_jacobian(mode: BaseMode, kind: TaskKind, c: &Chain) -> DMatrix<f64> {
    let k = c.axes.len();
    let m = kind.dim(mode);
    let mut j = DMatrix::zeros(m, k);
    for (col, (axis, origin)) in c.axes.iter().zip(&c.origins).enumerate() {
        let lin = axis.cross(&(c.tip - origin));
        match mode {
            BaseMode::Planar => {
                j[(0, col)] = lin.x;
                j[(1, col)] = lin.y;
                if m == 3 {
                    j[(2, col)] = axis.z;
                }
            }
            BaseMode::Spatial => {
                for r in 0..3 {
                    j[(r, col)] = lin[r];
                }
                if m == 6 {
                    for r in 0..3 {
                        j[(3 + r, col)] = axis[r];
                    }
                }
            }
        }
    }
    j
}

/// Damped least-squares step `Jᵀ(JJᵀ + λ²I)⁻¹ e` with the same damping rule
/// as [`crate::linalg::damped_pinv`].
fn dls_step(j: &DMatrix<f64>, e: &DVector<f64>) -> DVector<f64> {
    let (m, n) = j.shape();
    let gram = if m <= n { j * j.transpose() } else { j.transpose() * j };
    let sigma_min = gram.clone().symmetric_eigenvalues().min().max(0.0).sqrt();
    let damping = if sigma_min < ESCALATE_BELOW { DAMPING_NEAR_SINGULAR } else { DAMPING };
    let size = gram.nrows();
    let damped = gram + DMatrix::identity(size, size) * (damping * damping);
    let chol = damped.cholesky().expect("damped Gram matrix is positive definite");
    if m <= n {
        j.transpose() * chol.solve(e)
    } else {
        chol.solve(&(j.transpose() * e))
    }
}

/// Solves for the joint angles of `limb` that put its tip on `target` given
/// the base pose. `seed` holds the limb's joint angles (base to tip order).
pub fn inverse_kinematics(
    model: &RobotModel,
    limb: usize,
    target: &IkTarget,
    base: &BasePose,
    seed: &DVector<f64>,
) -> Result<DVector<f64>, IkError> {
    let joints = model.limb(limb)?.joints.clone();
    if seed.len() != joints.len() {
        return Err(crate::error::ModelError::Incompatible(format!(
            "seed has {} angles, limb {limb} has {} joints",
            seed.len(),
            joints.len()
        ))
        .into());
    }
    let mut angles: Vec<f64> = seed.iter().copied().collect();

    let c = chain(model, &joints, base, &angles);
    let mut gap = target.position - c.origins[0];
    if model.mode == BaseMode::Planar {
        gap.z = 0.0;
    }
    let reach = model.limb_reach(limb);
    if gap.norm() > reach * (1.0 + 1e-12) {
        return Err(IkError::Unreachable {
            limb,
            residual: gap.norm() - reach,
            sigma_min: 0.0,
        });
    }

    let kind = target.kind();
    let mut residual = f64::INFINITY;
    for _ in 0..=MAX_ITERATIONS {
        let c = chain(model, &joints, base, &angles);
        let err = task_error(model.mode, &c, target);
        residual = err.norm();
        if residual < TIGHT_TOLERANCE {
            break;
        }
        let j = chain_jacobian(model.mode, kind, &c);
        let mut step = dls_step(&j, &err);
        let largest = step.amax();
        if largest > STEP_CAP {
            step *= STEP_CAP / largest;
        }
        for (a, d) in angles.iter_mut().zip(step.iter()) {
            *a += d;
        }
    }
    if !(residual <= POSITION_TOLERANCE) {
        let c = chain(model, &joints, base, &angles);
        let sigma_min = crate::linalg::sigma_min(&chain_jacobian(model.mode, kind, &c));
        return Err(IkError::Unreachable {
            limb,
            residual,
            sigma_min,
        });
    }

    let mut out = DVector::zeros(joints.len());
    for (k, &j) in joints.iter().enumerate() {
        let a = wrap_angle(angles[k]);
        let (min, max) = model.links[j].limits;
        if a < min || a > max {
            return Err(IkError::JointLimit {
                joint: j,
                angle: a,
                min,
                max,
            });
        }
        out[k] = a;
    }
    Ok(out)
}
