use nalgebra::{DVector, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{BaseMode, RobotModel};

/// Position and orientation of the base frame in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasePose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl BasePose {
    pub fn identity() -> Self {
        BasePose {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn planar(x: f64, y: f64, yaw: f64) -> Self {
        BasePose {
            position: Vector3::new(x, y, 0.0),
            orientation: UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
        }
    }

    /// Rotation angle (rad) between two orientations.
    pub fn attitude_change(&self, other: &BasePose) -> f64 {
        self.orientation.angle_to(&other.orientation)
    }
}

/// Full dynamic state. The base twist is the velocity of the base origin and
/// the angular velocity of the base, both expressed in the inertial frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub base_position: Vector3<f64>,
    pub base_orientation: UnitQuaternion<f64>,
    pub base_linear_velocity: Vector3<f64>,
    pub base_angular_velocity: Vector3<f64>,
    pub joint_angles: DVector<f64>,
    pub joint_rates: DVector<f64>,
    pub time: f64,
}

impl SystemState {
    /// Base at the origin, every joint at zero and at rest.
    pub fn rest(model: &RobotModel) -> Self {
        SystemState {
            base_position: Vector3::zeros(),
            base_orientation: UnitQuaternion::identity(),
            base_linear_velocity: Vector3::zeros(),
            base_angular_velocity: Vector3::zeros(),
            joint_angles: DVector::zeros(model.dof()),
            joint_rates: DVector::zeros(model.dof()),
            time: 0.0,
        }
    }

    pub fn check(&self, model: &RobotModel) -> Result<(), ModelError> {
        if self.joint_angles.len() != model.dof() || self.joint_rates.len() != model.dof() {
            return Err(ModelError::Incompatible(format!(
                "model has {} joints, state has {} angles and {} rates",
                model.dof(),
                self.joint_angles.len(),
                self.joint_rates.len()
            )));
        }
        Ok(())
    }

    pub fn base_pose(&self) -> BasePose {
        BasePose {
            position: self.base_position,
            orientation: self.base_orientation,
        }
    }

    pub fn set_base_pose(&mut self, pose: &BasePose) {
        self.base_position = pose.position;
        self.base_orientation = pose.orientation;
    }

    /// Planar heading of the base (rad).
    pub fn yaw(&self) -> f64 {
        let r = self.base_orientation.to_rotation_matrix();
        r[(1, 0)].atan2(r[(0, 0)])
    }

    /// Base twist in model coordinates: `[v; ω]` spatial, `[vx, vy, ωz]` planar.
    pub fn base_twist(&self, mode: BaseMode) -> DVector<f64> {
        let v = &self.base_linear_velocity;
        let w = &self.base_angular_velocity;
        match mode {
            BaseMode::Spatial => DVector::from_column_slice(&[v.x, v.y, v.z, w.x, w.y, w.z]),
            BaseMode::Planar => DVector::from_column_slice(&[v.x, v.y, w.z]),
        }
    }

    pub fn set_base_twist(&mut self, mode: BaseMode, twist: &DVector<f64>) {
        match mode {
            BaseMode::Spatial => {
                self.base_linear_velocity = Vector3::new(twist[0], twist[1], twist[2]);
                self.base_angular_velocity = Vector3::new(twist[3], twist[4], twist[5]);
            }
            BaseMode::Planar => {
                self.base_linear_velocity = Vector3::new(twist[0], twist[1], 0.0);
                self.base_angular_velocity = Vector3::new(0.0, 0.0, twist[2]);
            }
        }
    }

    /// Generalized velocity `[base twist; joint rates]`.
    pub fn velocity(&self, mode: BaseMode) -> DVector<f64> {
        let twist = self.base_twist(mode);
        let mut nu = DVector::zeros(twist.len() + self.joint_rates.len());
        nu.rows_mut(0, twist.len()).copy_from(&twist);
        nu.rows_mut(twist.len(), self.joint_rates.len()).copy_from(&self.joint_rates);
        nu
    }

    pub fn set_velocity(&mut self, mode: BaseMode, nu: &DVector<f64>) {
        let d = mode.base_dof();
        self.set_base_twist(mode, &nu.rows(0, d).into_owned());
        self.joint_rates.copy_from(&nu.rows(d, nu.len() - d));
    }

    /// Joints whose angle lies outside the model limits.
    pub fn limit_violations(&self, model: &RobotModel) -> Vec<usize> {
        model
            .links
            .iter()
            .enumerate()
            .filter(|(i, l)| {
                let a = self.joint_angles[*i];
                a < l.limits.0 || a > l.limits.1
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.base_position.iter().all(|x| x.is_finite())
            && self.base_orientation.coords.iter().all(|x| x.is_finite())
            && self.base_linear_velocity.iter().all(|x| x.is_finite())
            && self.base_angular_velocity.iter().all(|x| x.is_finite())
            && self.joint_angles.iter().all(|x| x.is_finite())
            && self.joint_rates.iter().all(|x| x.is_finite())
    }
}
