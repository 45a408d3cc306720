use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, UnitQuaternion, Vector3};

use crate::error::ModelError;
use crate::model::{BaseMode, RobotModel, TaskKind};
use crate::state::{BasePose, SystemState};

/// World-frame placement of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkFrame {
    pub rotation: Matrix3<f64>,
    /// Joint origin.
    pub origin: Vector3<f64>,
    /// Joint axis (unit).
    pub axis: Vector3<f64>,
    pub com: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndEffector {
    pub position: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

impl EndEffector {
    /// Heading of the tip in the xy plane.
    pub fn yaw(&self) -> f64 {
        self.rotation[(1, 0)].atan2(self.rotation[(0, 0)])
    }
}

/// Placement of every body for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    pub base_position: Vector3<f64>,
    pub base_rotation: Matrix3<f64>,
    pub base_com: Vector3<f64>,
    pub links: Vec<LinkFrame>,
}

impl Kinematics {
    pub fn compute(model: &RobotModel, state: &SystemState) -> Result<Self, ModelError> {
        state.check(model)?;
        Ok(Self::from_parts(model, &state.base_pose(), &state.joint_angles))
    }

    pub fn from_parts(model: &RobotModel, base: &BasePose, angles: &DVector<f64>) -> Self {
        let base_rotation = *base.orientation.to_rotation_matrix().matrix();
        let base_position = base.position;
        let mut links: Vec<LinkFrame> = Vec::with_capacity(model.dof());
        for (i, link) in model.links.iter().enumerate() {
            let (parent_origin, parent_rot) = match link.parent {
                None => (base_position, base_rotation),
                Some(p) => (links[p].origin, links[p].rotation),
            };
            let joint_frame = parent_rot * link.mount.to_rotation_matrix().matrix();
            let axis = joint_frame * link.axis.into_inner();
            let rotation = joint_frame * Rotation3::from_axis_angle(&link.axis, angles[i]).matrix();
            let origin = parent_origin + parent_rot * link.offset;
            let com = origin + rotation * link.body.com;
            links.push(LinkFrame {
                rotation,
                origin,
                axis,
                com,
            });
        }
        Kinematics {
            base_position,
            base_rotation,
            base_com: base_position + base_rotation * model.base.com,
            links,
        }
    }

    pub fn end_effector(&self, model: &RobotModel, limb: usize) -> EndEffector {
        let limb = &model.limbs[limb];
        let last = &self.links[*limb.joints.last().expect("limbs are non-empty")];
        EndEffector {
            position: last.origin + last.rotation * limb.tip,
            rotation: last.rotation,
        }
    }

    /// Rotation of body `link` (`None` for the base).
    pub fn rotation(&self, link: Option<usize>) -> &Matrix3<f64> {
        match link {
            None => &self.base_rotation,
            Some(i) => &self.links[i].rotation,
        }
    }

    pub fn com(&self, link: Option<usize>) -> &Vector3<f64> {
        match link {
            None => &self.base_com,
            Some(i) => &self.links[i].com,
        }
    }

    /// Translational and rotational Jacobians (3 × nv) of a point rigidly
    /// attached to body `link`, with respect to the generalized velocity.
    pub fn point_jacobian(
        &self,
        model: &RobotModel,
        link: Option<usize>,
        point: &Vector3<f64>,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let nv = model.nv();
        let d = model.base_dof();
        let mut jt = DMatrix::zeros(3, nv);
        let mut jr = DMatrix::zeros(3, nv);
        let r = point - self.base_position;
        match model.mode {
            BaseMode::Spatial => {
                jt.fixed_view_mut::<3, 3>(0, 0).fill_with_identity();
                jt.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-crate::linalg::skew(&r)));
                jr.fixed_view_mut::<3, 3>(0, 3).fill_with_identity();
            }
            BaseMode::Planar => {
                jt[(0, 0)] = 1.0;
                jt[(1, 1)] = 1.0;
                jt[(0, 2)] = -r.y;
                jt[(1, 2)] = r.x;
                jr[(2, 2)] = 1.0;
            }
        }
        if let Some(i) = link {
            for &j in model.ancestors(i).iter().chain(std::iter::once(&i)) {
                let f = &self.links[j];
                let lin = f.axis.cross(&(point - f.origin));
                jt.fixed_view_mut::<3, 1>(0, d + j).copy_from(&lin);
                jr.fixed_view_mut::<3, 1>(0, d + j).copy_from(&f.axis);
            }
        }
        (jt, jr)
    }

    /// Task-space Jacobian of a limb tip (task_dim × nv).
    pub fn task_jacobian(&self, model: &RobotModel, limb: usize, kind: TaskKind) -> DMatrix<f64> {
        let last = *model.limbs[limb].joints.last().expect("limbs are non-empty");
        let tip = self.end_effector(model, limb).position;
        let (jt, jr) = self.point_jacobian(model, Some(last), &tip);
        select_task_rows(model.mode, kind, &jt, &jr)
    }

    /// Task vector of a limb tip: position (2 or 3 rows), followed by the
    /// planar heading or nothing.
    pub fn task_vector(&self, model: &RobotModel, limb: usize, kind: TaskKind) -> DVector<f64> {
        let ee = self.end_effector(model, limb);
        task_vector_of(model.mode, kind, &ee)
    }
}

pub(crate) fn task_vector_of(mode: BaseMode, kind: TaskKind, ee: &EndEffector) -> DVector<f64> {
    let p = &ee.position;
    match (mode, kind) {
        (BaseMode::Planar, TaskKind::Position) => DVector::from_column_slice(&[p.x, p.y]),
        (BaseMode::Planar, TaskKind::Pose) => DVector::from_column_slice(&[p.x, p.y, ee.yaw()]),
        (BaseMode::Spatial, TaskKind::Position) => DVector::from_column_slice(&[p.x, p.y, p.z]),
        (BaseMode::Spatial, TaskKind::Pose) => {
            let rv = Rotation3::from_matrix_unchecked(ee.rotation).scaled_axis();
            DVector::from_column_slice(&[p.x, p.y, p.z, rv.x, rv.y, rv.z])
        }
    }
}

pub(crate) fn select_task_rows(
    mode: BaseMode,
    kind: TaskKind,
    jt: &DMatrix<f64>,
    jr: &DMatrix<f64>,
) -> DMatrix<f64> {
    let nv = jt.ncols();
    match (mode, kind) {
        (BaseMode::Planar, TaskKind::Position) => jt.rows(0, 2).into_owned(),
        (BaseMode::Planar, TaskKind::Pose) => {
            let mut j = DMatrix::zeros(3, nv);
            j.rows_mut(0, 2).copy_from(&jt.rows(0, 2));
            j.row_mut(2).copy_from(&jr.row(2));
            j
        }
        (BaseMode::Spatial, TaskKind::Position) => jt.clone(),
        (BaseMode::Spatial, TaskKind::Pose) => {
            let mut j = DMatrix::zeros(6, nv);
            j.rows_mut(0, 3).copy_from(jt);
            j.rows_mut(3, 3).copy_from(jr);
            j
        }
    }
}

/// Output of [`forward_kinematics`].
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardKinematics {
    pub end_effectors: Vec<EndEffector>,
    /// Centre-of-mass position and orientation of every link.
    pub link_coms: Vec<(Vector3<f64>, Matrix3<f64>)>,
}

pub fn forward_kinematics(model: &RobotModel, state: &SystemState) -> Result<ForwardKinematics, ModelError> {
    let kin = Kinematics::compute(model, state)?;
    Ok(ForwardKinematics {
        end_effectors: (0..model.limbs.len()).map(|l| kin.end_effector(model, l)).collect(),
        link_coms: kin.links.iter().map(|f| (f.com, f.rotation)).collect(),
    })
}

/// Orientation helper for building targets from a heading.
pub fn yaw_rotation(yaw: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw)
}
