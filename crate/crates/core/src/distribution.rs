//! Swing momentum distribution.
//!
//! While one limb swings, the base moves so that a fraction `α` of the swing
//! limb's momentum is cancelled, and the supporting limbs move so that their
//! tips stay fixed. With `α = 0` the base stays put; with `α = 1` the total
//! momentum stays zero.

use nalgebra::{DMatrix, DVector, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{IkError, ModelError, PlanError};
use crate::linalg::{robust_solve, sigma_min};
use crate::lrst::SwingPlan;
use crate::model::{RobotModel, TaskKind};
use crate::multibody::{
    base_momentum_matrix, inverse_kinematics, yaw_rotation, IkTarget, InertiaSet, JacobianSet, Kinematics,
    MomentumState,
};
use crate::state::{BasePose, SystemState};

pub const SINGULARITY_THRESHOLD: f64 = 1e-4;

/// Fraction of swing momentum compensated, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DistributionFactor(f64);

impl DistributionFactor {
    pub const NONE: DistributionFactor = DistributionFactor(0.0);
    pub const FULL: DistributionFactor = DistributionFactor(1.0);

    pub fn new(alpha: f64) -> Result<Self, PlanError> {
        if (0.0..=1.0).contains(&alpha) {
            Ok(DistributionFactor(alpha))
        } else {
            Err(PlanError::Invalid(format!("distribution factor {alpha} outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for DistributionFactor {
    type Error = PlanError;
    fn try_from(v: f64) -> Result<Self, PlanError> {
        DistributionFactor::new(v)
    }
}

impl From<DistributionFactor> for f64 {
    fn from(a: DistributionFactor) -> f64 {
        a.0
    }
}

/// How limbs are constrained and when the solve is declared singular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistributionSettings {
    /// Task held fixed at supporting tips: a point contact fixes the
    /// position only, a rigid grasp fixes the pose.
    pub support_task: TaskKind,
    pub singularity_threshold: f64,
}

impl Default for DistributionSettings {
    fn default() -> Self {
        DistributionSettings {
            support_task: TaskKind::Position,
            singularity_threshold: SINGULARITY_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveBaseInertia {
    pub matrix: DMatrix<f64>,
    pub sigma_min: f64,
    /// Smallest singular value of each supporting limb's Jacobian, in support order.
    pub support_sigma: Vec<f64>,
}

fn check_limbs(model: &RobotModel, limbs: &[usize]) -> Result<(), ModelError> {
    for &l in limbs {
        model.limb(l)?;
    }
    Ok(())
}

fn complement(model: &RobotModel, set: &[usize]) -> Vec<usize> {
    (0..model.limbs.len()).filter(|l| !set.contains(l)).collect()
}

struct Terms {
    inertia: InertiaSet,
    supports: Vec<(usize, JacobianSet)>,
    h_eff: EffectiveBaseInertia,
}

fn terms(model: &RobotModel, kin: &Kinematics, support_set: &[usize], kind: TaskKind) -> Terms {
    let inertia = InertiaSet::from_momentum_matrix(model, &base_momentum_matrix(model, kin));
    let mut matrix = inertia.h_b.clone();
    let mut supports = Vec::with_capacity(support_set.len());
    let mut support_sigma = Vec::with_capacity(support_set.len());
    for &l in support_set {
        let set = JacobianSet::from_kinematics(model, kin, l, kind);
        matrix -= &inertia.h_bm[l] * &set.j_m_pinv.matrix * &set.j_b;
        support_sigma.push(set.j_m_pinv.sigma_min);
        supports.push((l, set));
    }
    let h_eff = EffectiveBaseInertia {
        sigma_min: sigma_min(&matrix),
        matrix,
        support_sigma,
    };
    Terms {
        inertia,
        supports,
        h_eff,
    }
}

fn check_singular(model: &RobotModel, t: &Terms, time: f64, threshold: f64) -> Result<(), PlanError> {
    for ((l, _), &s) in t.supports.iter().zip(&t.h_eff.support_sigma) {
        if s < threshold {
            return Err(PlanError::Singularity {
                time,
                what: format!("support limb {} Jacobian", model.limbs[*l].name),
                sigma: s,
                threshold,
            });
        }
    }
    if t.h_eff.sigma_min < threshold {
        return Err(PlanError::Singularity {
            time,
            what: "effective base inertia".into(),
            sigma: t.h_eff.sigma_min,
            threshold,
        });
    }
    Ok(())
}

/// `H_eff = H_b − Σ H_bm,i J_mi⁺ J_b,i` over the supporting limbs.
pub fn effective_inertia(
    model: &RobotModel,
    state: &SystemState,
    support_set: &[usize],
    settings: &DistributionSettings,
) -> Result<EffectiveBaseInertia, ModelError> {
    check_limbs(model, support_set)?;
    let kin = Kinematics::compute(model, state)?;
    Ok(terms(model, &kin, support_set, settings.support_task).h_eff)
}

/// Base twist cancelling `α` of the momentum of the limbs in `swing_set`,
/// given their rates in `state`; every other limb supports.
pub fn base_velocity(
    model: &RobotModel,
    state: &SystemState,
    swing_set: &[usize],
    alpha: DistributionFactor,
    settings: &DistributionSettings,
) -> Result<DVector<f64>, PlanError> {
    check_limbs(model, swing_set)?;
    let kin = Kinematics::compute(model, state)?;
    let t = terms(model, &kin, &complement(model, swing_set), settings.support_task);
    check_singular(model, &t, state.time, settings.singularity_threshold)?;
    let mut swing = DVector::zeros(t.inertia.h_b.nrows());
    for &l in swing_set {
        swing += &t.inertia.h_bm[l] * state.joint_rates.select_rows(&model.limbs[l].joints);
    }
    Ok(robust_solve(&t.h_eff.matrix, &(swing * -alpha.value())))
}

/// Joint rates keeping every supporting tip still under `base_twist`.
pub fn support_rates(
    model: &RobotModel,
    state: &SystemState,
    support_set: &[usize],
    base_twist: &DVector<f64>,
    settings: &DistributionSettings,
) -> Result<Vec<DVector<f64>>, PlanError> {
    check_limbs(model, support_set)?;
    let kin = Kinematics::compute(model, state)?;
    let threshold = settings.singularity_threshold;
    support_set
        .iter()
        .map(|&l| {
            let set = JacobianSet::from_kinematics(model, &kin, l, settings.support_task);
            if set.j_m_pinv.sigma_min < threshold {
                return Err(PlanError::Singularity {
                    time: state.time,
                    what: format!("support limb {} Jacobian", model.limbs[l].name),
                    sigma: set.j_m_pinv.sigma_min,
                    threshold,
                });
            }
            Ok(-(&set.j_m_pinv.matrix * (&set.j_b * base_twist)))
        })
        .collect()
}

/// One sample of a kinematic plan.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanSample {
    pub state: SystemState,
    pub momentum: MomentumState,
}

/// Where each supporting tip is held.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub limb: usize,
    pub target: IkTarget,
}

impl Anchor {
    /// Current tip placement of `limb`, as a target for the given task.
    pub fn at_current(model: &RobotModel, kin: &Kinematics, limb: usize, kind: TaskKind) -> Self {
        let ee = kin.end_effector(model, limb);
        let orientation = match kind {
            TaskKind::Position => None,
            TaskKind::Pose => Some(match model.mode {
                crate::model::BaseMode::Planar => yaw_rotation(ee.yaw()),
                crate::model::BaseMode::Spatial => {
                    UnitQuaternion::from_matrix(&ee.rotation)
                }
            }),
        };
        Anchor {
            limb,
            target: IkTarget {
                position: ee.position,
                orientation,
            },
        }
    }
}

/// Inputs of the plan-level distribution.
#[derive(Debug, Clone)]
pub struct Distribution<'a> {
    pub model: &'a RobotModel,
    pub swing: &'a SwingPlan,
    pub anchors: Vec<Anchor>,
    pub alpha: DistributionFactor,
    pub settings: DistributionSettings,
}

/// Samples produced until the end of the window or the first failure.
#[derive(Debug, Clone)]
pub struct DistributionRun {
    pub samples: Vec<PlanSample>,
    pub failure: Option<PlanError>,
}

impl Distribution<'_> {
    fn support_set(&self) -> Vec<usize> {
        self.anchors.iter().map(|a| a.limb).collect()
    }

    /// Configuration, velocities and momentum at time `t` for base pose `pose`.
    /// `seed` supplies the joint angles IK starts from.
    pub fn solve(&self, pose: &BasePose, t: f64, seed: &DVector<f64>) -> Result<PlanSample, PlanError> {
        let model = self.model;
        let mut angles = seed.clone();
        let ik = |limb: usize, target: &IkTarget, angles: &mut DVector<f64>| -> Result<(), PlanError> {
            let joints = &model.limbs[limb].joints;
            let sol = inverse_kinematics(model, limb, target, pose, &angles.select_rows(joints))
                .map_err(|source| PlanError::Ik { time: t, source })?;
            for (k, &j) in joints.iter().enumerate() {
                angles[j] = sol[k];
            }
            Ok(())
        };
        for a in &self.anchors {
            ik(a.limb, &a.target, &mut angles)?;
        }
        let reference = self.swing.evaluate(t)?;
        let sw = self.swing.limb;
        ik(sw, &IkTarget::position(reference.position), &mut angles)?;

        let kin = Kinematics::from_parts(model, pose, &angles);
        let supports = self.support_set();
        let t_terms = terms(model, &kin, &supports, self.settings.support_task);
        let swing_set = JacobianSet::from_kinematics(model, &kin, sw, TaskKind::Position);
        let v = reference.velocity;
        let xe = match model.mode {
            crate::model::BaseMode::Planar => DVector::from_column_slice(&[v.x, v.y]),
            crate::model::BaseMode::Spatial => DVector::from_column_slice(&[v.x, v.y, v.z]),
        };
        let alpha = self.alpha.value();
        let d = model.base_dof();
        let twist = if alpha == 0.0 {
            DVector::zeros(d)
        } else {
            check_singular(model, &t_terms, t, self.settings.singularity_threshold)?;
            let b = &t_terms.inertia.h_bm[sw] * &swing_set.j_m_pinv.matrix;
            let lhs = &t_terms.h_eff.matrix - &b * &swing_set.j_b * alpha;
            robust_solve(&lhs, &(&b * &xe * -alpha))
        };

        let mut state = SystemState::rest(model);
        state.set_base_pose(pose);
        state.set_base_twist(model.mode, &twist);
        state.joint_angles = angles;
        state.time = t;
        let swing_rates = &swing_set.j_m_pinv.matrix * (&xe - &swing_set.j_b * &twist);
        for (k, &j) in model.limbs[sw].joints.iter().enumerate() {
            state.joint_rates[j] = swing_rates[k];
        }
        for (l, set) in &t_terms.supports {
            let rates = -(&set.j_m_pinv.matrix * (&set.j_b * &twist));
            for (k, &j) in model.limbs[*l].joints.iter().enumerate() {
                state.joint_rates[j] = rates[k];
            }
        }
        let momentum = MomentumState::from_inertia(model, &t_terms.inertia, &state, &[sw]);
        Ok(PlanSample { state, momentum })
    }

    /// Integrates the base over `steps` equal intervals of `window` with
    /// Heun's rule; orientation is updated through the exponential map.
    pub fn run(&self, initial: &SystemState, window: (f64, f64), steps: usize) -> DistributionRun {
        let mut samples = Vec::with_capacity(steps + 1);
        let dt = (window.1 - window.0) / steps as f64;
        let time = |k: usize| if k == steps { window.1 } else { window.0 + k as f64 * dt };
        let mut pose = initial.base_pose();
        let mut current = match self.solve(&pose, time(0), &initial.joint_angles) {
            Ok(s) => s,
            Err(e) => {
                return DistributionRun {
                    samples,
                    failure: Some(e),
                }
            }
        };
        for k in 0..steps {
            let t_next = time(k + 1);
            let v0 = current.state.base_linear_velocity;
            let w0 = current.state.base_angular_velocity;
            let predicted = advance(&pose, &v0, &w0, dt);
            let seed = &current.state.joint_angles;
            let outcome = self
                .solve(&predicted, t_next, seed)
                .map_err(|e| self.boundary_singularity(e, (&pose, &predicted), (time(k), t_next), seed))
                .and_then(|p| {
                    let v = (v0 + p.state.base_linear_velocity) * 0.5;
                    let w = (w0 + p.state.base_angular_velocity) * 0.5;
                    let corrected = advance(&pose, &v, &w, dt);
                    self.solve(&corrected, t_next, &p.state.joint_angles)
                        .map(|s| (corrected, s))
                        .map_err(|e| self.boundary_singularity(e, (&pose, &corrected), (time(k), t_next), seed))
                });
            samples.push(current);
            match outcome {
                Ok((next_pose, next)) => {
                    pose = next_pose;
                    current = next;
                }
                Err(e) => {
                    return DistributionRun {
                        samples,
                        failure: Some(e),
                    }
                }
            }
        }
        samples.push(current);
        DistributionRun { samples, failure: None }
    }
}

impl Distribution<'_> {
    /// A limb that cannot reach its target from `poses.1` but could from
    /// `poses.0` has crossed the edge of its workspace, where it is fully
    /// stretched or folded. Bisects the base path for the crossing and
    /// reports a singularity if the support Jacobian there is degenerate.
    fn boundary_singularity(
        &self,
        error: PlanError,
        poses: (&BasePose, &BasePose),
        times: (f64, f64),
        seed: &DVector<f64>,
    ) -> PlanError {
        let limb = match &error {
            PlanError::Ik {
                source: IkError::Unreachable { limb, .. },
                ..
            } => *limb,
            _ => return error,
        };
        let anchor = self.anchors.iter().find(|a| a.limb == limb).map(|a| a.target);
        if anchor.is_none() && limb != self.swing.limb {
            return error;
        }
        let target = |s: f64| match anchor {
            Some(t) => Some(t),
            None => self
                .swing
                .evaluate(times.0 + s * (times.1 - times.0))
                .ok()
                .map(|r| IkTarget::position(r.position)),
        };
        let kind = anchor.map_or(TaskKind::Position, |_| self.settings.support_task);
        let model = self.model;
        let joints = &model.limbs[limb].joints;
        let at = |s: f64| BasePose {
            position: poses.0.position.lerp(&poses.1.position, s),
            orientation: poses.0.orientation.slerp(&poses.1.orientation, s),
        };
        let solve = |s: f64, start: &DVector<f64>| {
            target(s).and_then(|target| inverse_kinematics(model, limb, &target, &at(s), start).ok())
        };
        let mut best = match solve(0.0, &seed.select_rows(joints)) {
            Some(a) => a,
            None => return error,
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            match solve(mid, &best) {
                Some(a) => {
                    lo = mid;
                    best = a;
                }
                None => hi = mid,
            }
        }
        let mut angles = seed.clone();
        for (k, &j) in joints.iter().enumerate() {
            angles[j] = best[k];
        }
        let kin = Kinematics::from_parts(model, &at(lo), &angles);
        let set = JacobianSet::from_kinematics(model, &kin, limb, kind);
        let threshold = self.settings.singularity_threshold;
        if set.j_m_pinv.sigma_min < threshold {
            PlanError::Singularity {
                time: times.0 + lo * (times.1 - times.0),
                what: format!("limb {} at the edge of its workspace, Jacobian", model.limbs[limb].name),
                sigma: set.j_m_pinv.sigma_min,
                threshold,
            }
        } else {
            error
        }
    }
}

fn advance(pose: &BasePose, v: &Vector3<f64>, w: &Vector3<f64>, dt: f64) -> BasePose {
    BasePose {
        position: pose.position + v * dt,
        orientation: UnitQuaternion::from_scaled_axis(w * dt) * pose.orientation,
    }
}

/// Plan-level distribution over the whole swing (release, curve, grasp) on a
/// uniform grid of `steps` intervals. Supporting tips are held where they
/// are in `initial`.
pub fn distribute_over_plan(
    model: &RobotModel,
    initial: &SystemState,
    swing: &SwingPlan,
    support_set: &[usize],
    alpha: DistributionFactor,
    settings: &DistributionSettings,
    steps: usize,
) -> Result<Vec<PlanSample>, PlanError> {
    check_limbs(model, support_set)?;
    if support_set.contains(&swing.limb) {
        return Err(PlanError::Invalid("swing limb cannot also support".into()));
    }
    if steps == 0 {
        return Err(PlanError::Invalid("distribution grid needs at least one step".into()));
    }
    let kin = Kinematics::compute(model, initial)?;
    let anchors = support_set
        .iter()
        .map(|&l| Anchor::at_current(model, &kin, l, settings.support_task))
        .collect();
    let dist = Distribution {
        model,
        swing,
        anchors,
        alpha,
        settings: *settings,
    };
    let run = dist.run(initial, swing.window(), steps);
    match run.failure {
        Some(e) => Err(e),
        None => Ok(run.samples),
    }
}
