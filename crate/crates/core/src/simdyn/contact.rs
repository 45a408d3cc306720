use nalgebra::{Matrix3, Rotation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Gripper and surface parameters shared by every contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContactParams {
    /// N/m
    pub stiffness: f64,
    /// N·s/m
    pub damping: f64,
    /// Largest tensile normal force the gripper holds (N).
    pub holding_force: f64,
    /// Rotational spring of a rigid grasp (N·m/rad); zero for a point contact.
    pub rotational_stiffness: f64,
    /// N·m·s/rad
    pub rotational_damping: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        ContactParams {
            stiffness: 4000.0,
            damping: 1.0,
            holding_force: 0.9,
            rotational_stiffness: 0.0,
            rotational_damping: 0.0,
        }
    }
}

impl ContactParams {
    pub fn validate(&self) -> Result<(), String> {
        let ok = self.stiffness > 0.0
            && self.damping >= 0.0
            && self.holding_force > 0.0
            && self.rotational_stiffness >= 0.0
            && self.rotational_damping >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(format!("contact parameters out of range: {self:?}"))
        }
    }
}

/// A gripper held at the point where it touched down.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactPoint {
    pub limb: usize,
    pub anchor: Vector3<f64>,
    /// Tip orientation at touchdown, used by the rotational spring.
    pub anchor_orientation: UnitQuaternion<f64>,
    pub attached: bool,
    pub params: ContactParams,
    /// Outward normal of the surface.
    pub surface_normal: Unit<Vector3<f64>>,
}

impl ContactPoint {
    pub fn new(
        limb: usize,
        anchor: Vector3<f64>,
        anchor_orientation: UnitQuaternion<f64>,
        params: ContactParams,
        surface_normal: Unit<Vector3<f64>>,
    ) -> Self {
        ContactPoint {
            limb,
            anchor,
            anchor_orientation,
            attached: true,
            params,
            surface_normal,
        }
    }
}

/// Force on the robot from an attached contact, for tip position `p` and
/// velocity `v`.
pub fn contact_force(contact: &ContactPoint, p: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
    -(p - contact.anchor) * contact.params.stiffness - v * contact.params.damping
}

/// Moment on the robot from the rotational spring, for tip rotation
/// `rotation` and angular velocity `w`.
pub fn contact_moment(contact: &ContactPoint, rotation: &Matrix3<f64>, w: &Vector3<f64>) -> Vector3<f64> {
    let k = contact.params.rotational_stiffness;
    let c = contact.params.rotational_damping;
    if k == 0.0 && c == 0.0 {
        return Vector3::zeros();
    }
    let error = rotation_vector(&UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(
        rotation * contact.anchor_orientation.to_rotation_matrix().matrix().transpose(),
    )));
    -error * k - w * c
}

// atan2 form; acos of a rounded trace goes NaN near zero
fn rotation_vector(q: &UnitQuaternion<f64>) -> Vector3<f64> {
    let v = q.imag();
    let s = v.norm();
    if s == 0.0 {
        return Vector3::zeros();
    }
    let w = q.scalar();
    let angle = 2.0 * s.atan2(w.abs());
    v * (angle / s) * w.signum()
}

/// Component of the contact force pulling the tip toward the surface, i.e.
/// holding it against separation (N). Negative when the surface pushes.
pub fn tensile_force(contact: &ContactPoint, force: &Vector3<f64>) -> f64 {
    -force.dot(&contact.surface_normal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hold {
    Holds,
    Detaches,
}

/// Whether the gripper lets go under `force`.
pub fn detachment_check(contact: &ContactPoint, force: &Vector3<f64>) -> Hold {
    if tensile_force(contact, force) > contact.params.holding_force {
        Hold::Detaches
    } else {
        Hold::Holds
    }
}
