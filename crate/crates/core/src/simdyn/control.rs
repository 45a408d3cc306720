use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::gait::MotionPlan;
use crate::model::RobotModel;
use crate::state::SystemState;

/// Joint PD gains. Each list holds one value for every joint, one value per
/// segment (repeated on each limb), or a single value for all joints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdGains {
    /// N·m/rad
    pub kp: Vec<f64>,
    /// N·m·s/rad
    pub kd: Vec<f64>,
}

impl PdGains {
    pub fn uniform(kp: f64, kd: f64) -> Self {
        PdGains { kp: vec![kp], kd: vec![kd] }
    }

    fn expand(values: &[f64], model: &RobotModel, what: &str) -> Result<DVector<f64>, String> {
        let out = expand_joint_values(values, model, what)?;
        if out.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(format!("{what} must be finite and non-negative"));
        }
        Ok(out)
    }

    /// Per-joint gains for `model`.
    pub fn resolve(&self, model: &RobotModel) -> Result<(DVector<f64>, DVector<f64>), String> {
        Ok((Self::expand(&self.kp, model, "kp")?, Self::expand(&self.kd, model, "kd")?))
    }
}

/// Expands one value, one value per segment (repeated on each limb) or one
/// value per joint into a per-joint vector.
pub fn expand_joint_values(values: &[f64], model: &RobotModel, what: &str) -> Result<DVector<f64>, String> {
    let n = model.dof();
    let per_limb = model.limbs.first().map_or(0, |l| l.joints.len());
    let mut out = DVector::zeros(n);
    match values.len() {
        1 => out.fill(values[0]),
        l if l == n => out.copy_from_slice(values),
        l if l == per_limb && model.limbs.iter().all(|limb| limb.joints.len() == l) => {
            for limb in &model.limbs {
                for (k, &j) in limb.joints.iter().enumerate() {
                    out[j] = values[k];
                }
            }
        }
        l => return Err(format!("{what} has {l} values; expected 1, {per_limb} or {n}")),
    }
    Ok(out)
}

/// PD torques tracking the plan's joint references at `t`.
pub fn pd_torques(plan: &MotionPlan, state: &SystemState, t: f64, kp: &DVector<f64>, kd: &DVector<f64>) -> DVector<f64> {
    let (angles, rates) = plan.joint_reference(t);
    pd_law(&angles, &rates, state, kp, kd)
}

pub(crate) fn pd_law(
    angles: &DVector<f64>,
    rates: &DVector<f64>,
    state: &SystemState,
    kp: &DVector<f64>,
    kd: &DVector<f64>,
) -> DVector<f64> {
    (angles - &state.joint_angles).component_mul(kp) + (rates - &state.joint_rates).component_mul(kd)
}
