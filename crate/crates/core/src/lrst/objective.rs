use nalgebra::{DMatrix, DVector, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::linalg::skew;
use crate::model::RobotModel;
use crate::multibody::{chain, inverse_kinematics, reduce_rows, Chain, IkTarget, Kinematics};
use crate::state::{BasePose, SystemState};

use super::swing::SwingPlan;

/// Weights of the swing objective. `sample_count` is the number of grid
/// intervals, so the curve is sampled at `sample_count + 1` instants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LrstWeights {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// Desired step height (m).
    pub h: f64,
    pub sample_count: usize,
}

impl Default for LrstWeights {
    fn default() -> Self {
        LrstWeights {
            k1: 1.0,
            k2: 10.0,
            k3: 10.0,
            h: 0.05,
            sample_count: 64,
        }
    }
}

impl LrstWeights {
    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.k1 >= 0.0 && self.k2 >= 0.0 && self.k3 >= 0.0) {
            return Err(PlanError::Invalid("objective weights must be non-negative".into()));
        }
        if !(self.h >= 0.0 && self.h.is_finite()) {
            return Err(PlanError::Invalid(format!("step height {} must be non-negative", self.h)));
        }
        if self.sample_count < 16 {
            return Err(PlanError::Invalid(format!("sample_count {} below 16", self.sample_count)));
        }
        Ok(())
    }
}

/// Objective terms with their weights already applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub j1: f64,
    pub j2: f64,
    pub total: f64,
}

impl ObjectiveValue {
    pub fn infeasible() -> Self {
        ObjectiveValue {
            j1: f64::INFINITY,
            j2: f64::INFINITY,
            total: f64::INFINITY,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.total.is_finite()
    }
}

/// Joint-space samples of a swing-limb path with the base held fixed.
#[derive(Debug, Clone)]
pub struct SwingSeries {
    pub times: Vec<f64>,
    pub positions: Vec<Vector3<f64>>,
    /// Limb joint angles at each sample.
    pub angles: Vec<DVector<f64>>,
    pub rates: Vec<DVector<f64>>,
    /// Swing-limb momentum `H_bm φ̇` about the base origin.
    pub momentum: Vec<DVector<f64>>,
    pub momentum_rate: Vec<DVector<f64>>,
}

/// Derivative of uniformly spaced samples: central differences inside,
/// second-order one-sided differences at the two ends.
pub fn grid_derivative(values: &[DVector<f64>], dt: f64) -> Vec<DVector<f64>> {
    let n = values.len();
    (0..n)
        .map(|k| {
            if n < 3 {
                DVector::zeros(values[k].len())
            } else if k == 0 {
                ((&values[1] - &values[0]) * 4.0 - (&values[2] - &values[0])) / (2.0 * dt)
            } else if k == n - 1 {
                ((&values[n - 1] - &values[n - 2]) * 4.0 - (&values[n - 1] - &values[n - 3])) / (2.0 * dt)
            } else {
                (&values[k + 1] - &values[k - 1]) / (2.0 * dt)
            }
        })
        .collect()
}

/// Momentum contributed by one limb's joint rates, `H_bm,limb` (rows reduced
/// to the model's motion space), about the base origin.
pub fn limb_coupling(model: &RobotModel, kin: &Kinematics, limb: usize) -> DMatrix<f64> {
    let joints = &model.limbs[limb].joints;
    let d = model.base_dof();
    let cols: Vec<usize> = joints.iter().map(|j| d + j).collect();
    let mut h = DMatrix::zeros(6, joints.len());
    for &i in joints {
        let body = &model.links[i].body;
        let frame = &kin.links[i];
        let (jt, jr) = kin.point_jacobian(model, Some(i), &frame.com);
        let jt = jt.select_columns(&cols);
        let jr = jr.select_columns(&cols);
        let inertia = frame.rotation * body.inertia * frame.rotation.transpose();
        let lin = &jt * body.mass;
        let ang = inertia * &jr + skew(&(frame.com - kin.base_position)) * &lin;
        let mut top = h.rows_mut(0, 3);
        top += &lin;
        let mut bottom = h.rows_mut(3, 3);
        bottom += &ang;
    }
    reduce_rows(model.mode, &h)
}

/// Same as [`limb_coupling`] but from the limb's own chain frames.
fn chain_coupling(model: &RobotModel, joints: &[usize], base: &Vector3<f64>, c: &Chain) -> DMatrix<f64> {
    let k = joints.len();
    let mut h = DMatrix::zeros(6, k);
    for (i, &link) in joints.iter().enumerate() {
        let body = &model.links[link].body;
        let rot = &c.rotations[i];
        let com = c.origins[i] + rot * body.com;
        let inertia = rot * body.inertia * rot.transpose();
        let arm = com - base;
        for col in 0..=i {
            let axis = &c.axes[col];
            let lin = axis.cross(&(com - c.origins[col])) * body.mass;
            let ang = inertia * axis + arm.cross(&lin);
            for r in 0..3 {
                h[(r, col)] += lin[r];
                h[(3 + r, col)] += ang[r];
            }
        }
    }
    reduce_rows(model.mode, &h)
}

/// Follows `path` with IK on a uniform grid over `window` and differentiates
/// the result. The base and every other joint stay where `state` has them.
pub fn sample_swing(
    model: &RobotModel,
    state: &SystemState,
    limb: usize,
    window: (f64, f64),
    sample_count: usize,
    path: impl Fn(f64) -> Result<Vector3<f64>, PlanError>,
) -> Result<SwingSeries, PlanError> {
    let joints = model.limb(limb)?.joints.clone();
    let base: BasePose = state.base_pose();
    let dt = (window.1 - window.0) / sample_count as f64;
    let mut seed = state.joint_angles.select_rows(&joints);
    let mut times = Vec::with_capacity(sample_count + 1);
    let mut positions = Vec::with_capacity(sample_count + 1);
    let mut angles = Vec::with_capacity(sample_count + 1);
    for k in 0..=sample_count {
        let t = if k == sample_count { window.1 } else { window.0 + k as f64 * dt };
        let p = path(t)?;
        let sol = inverse_kinematics(model, limb, &IkTarget::position(p), &base, &seed)
            .map_err(|source| PlanError::Ik { time: t, source })?;
        times.push(t);
        positions.push(p);
        // linear extrapolation of the previous two solutions
        seed = match angles.last() {
            Some(prev) => &sol * 2.0 - prev,
            None => sol.clone(),
        };
        angles.push(sol);
    }
    let rates = grid_derivative(&angles, dt);
    let momentum: Vec<DVector<f64>> = angles
        .iter()
        .zip(&rates)
        .map(|(a, r)| {
            let c = chain(model, &joints, &base, a.as_slice());
            chain_coupling(model, &joints, &base.position, &c) * r
        })
        .collect();
    let momentum_rate = grid_derivative(&momentum, dt);
    Ok(SwingSeries {
        times,
        positions,
        angles,
        rates,
        momentum,
        momentum_rate,
    })
}

/// Height of `p` above the chord `a → b`, measured along the component of
/// `up` normal to the chord.
pub fn height_above_chord(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>, up: &Unit<Vector3<f64>>) -> f64 {
    let d = p - a;
    let chord = b - a;
    let n = match chord.try_normalize(1e-15) {
        Some(u) => {
            let normal = up.as_ref() - u * u.dot(up);
            match normal.try_normalize(1e-12) {
                Some(n) => n,
                None => return d.dot(up),
            }
        }
        None => up.into_inner(),
    };
    d.dot(&n)
}

/// `J_1 + J_2` of a sampled swing.
pub fn score_series(series: &SwingSeries, up: &Unit<Vector3<f64>>, weights: &LrstWeights) -> ObjectiveValue {
    let peak_rate = series.momentum_rate.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let a = series.positions[0];
    let b = *series.positions.last().expect("non-empty grid");
    let heights: Vec<f64> = series.positions.iter().map(|p| height_above_chord(p, &a, &b, up)).collect();
    let max = heights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = heights.iter().sum::<f64>() / heights.len() as f64;
    let j1 = weights.k1 * peak_rate;
    let j2 = weights.k2 * (weights.h - max).abs() + weights.k3 * (weights.h - mean).abs();
    ObjectiveValue { j1, j2, total: j1 + j2 }
}

/// Objective of the swing curve of `plan`. `state` holds the configuration
/// at the start of the curve; IK or joint-limit failures give the infinite
/// sentinel.
pub fn objective(model: &RobotModel, state: &SystemState, plan: &SwingPlan, weights: &LrstWeights) -> ObjectiveValue {
    let window = plan.curve.window();
    let series = sample_swing(model, state, plan.limb, window, weights.sample_count, |t| {
        plan.curve.evaluate(t).map(|s| s.position)
    });
    match series {
        Ok(series) => score_series(&series, &plan.up, weights),
        Err(_) => ObjectiveValue::infeasible(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_quadratic_is_exact() {
        let dt = 0.1;
        let vals: Vec<DVector<f64>> = (0..10)
            .map(|k| {
                let t = k as f64 * dt;
                DVector::from_element(1, 3.0 * t * t - t)
            })
            .collect();
        for (k, d) in grid_derivative(&vals, dt).iter().enumerate() {
            let t = k as f64 * dt;
            assert!((d[0] - (6.0 * t - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn chord_height() {
        let up = Vector3::z_axis();
        let a = Vector3::zeros();
        let b = Vector3::new(1.0, 0.0, 0.0);
        assert_eq!(height_above_chord(&Vector3::new(0.4, 0.3, 0.2), &a, &b, &up), 0.2);
        // sloped chord: height is measured normal to the chord
        let b = Vector3::new(1.0, 0.0, 1.0);
        let h = height_above_chord(&Vector3::new(0.0, 0.0, 1.0), &a, &b, &up);
        assert!((h - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn weights_validation() {
        assert!(LrstWeights::default().validate().is_ok());
        let bad = LrstWeights {
            sample_count: 8,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = LrstWeights {
            k2: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
