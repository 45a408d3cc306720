use nalgebra::{DVector, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::distribution::{support_rates, Anchor, Distribution, DistributionFactor, DistributionSettings, PlanSample};
use crate::error::PlanError;
use crate::lrst::{
    objective, optimize_swing, quintic_blend, BezierCurve, LrstWeights, ObjectiveValue, OptimizerSettings, SwingCurve,
    SwingPlan, SwingProblem,
};
use crate::model::{BaseMode, RobotModel};
use crate::multibody::{inertia_matrices, inverse_kinematics, Kinematics, MomentumState};
use crate::state::{BasePose, SystemState};

use super::baseline::baseline_swing;
use super::schedule::{GaitSchedule, Phase};

/// How swings are shaped and whether their momentum is distributed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "alpha")]
pub enum PlanMode {
    /// Via-point spline, base held.
    #[serde(rename = "BL")]
    Baseline,
    /// Optimised swing, base held.
    #[serde(rename = "LRST")]
    Lrst,
    /// Optimised swing with partial distribution.
    #[serde(rename = "PMD")]
    Partial(DistributionFactor),
    /// Optimised swing with full distribution.
    #[serde(rename = "FMD")]
    Full,
}

impl PlanMode {
    pub fn alpha(&self) -> f64 {
        match self {
            PlanMode::Baseline | PlanMode::Lrst => 0.0,
            PlanMode::Partial(a) => a.value(),
            PlanMode::Full => 1.0,
        }
    }

    pub fn optimized(&self) -> bool {
        !matches!(self, PlanMode::Baseline)
    }

    pub fn label(&self) -> &'static str {
        match self {
            PlanMode::Baseline => "BL",
            PlanMode::Lrst => "LRST",
            PlanMode::Partial(_) => "PMD",
            PlanMode::Full => "FMD",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanSettings {
    /// `h` is overridden by the schedule's step height.
    pub weights: LrstWeights,
    pub optimizer: OptimizerSettings,
    pub distribution: DistributionSettings,
}

/// One sample of the plan grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanPoint {
    pub time: f64,
    pub phase: usize,
    pub base: BasePose,
    pub base_twist: DVector<f64>,
    pub joint_angles: DVector<f64>,
    pub joint_rates: DVector<f64>,
    /// Reference tip position of every limb.
    pub tips: Vec<Vector3<f64>>,
    pub attached: Vec<bool>,
    pub momentum: DVector<f64>,
    pub swing_momentum: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpan {
    pub kind: String,
    pub limb: Option<usize>,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwingRecord {
    /// Index of the swing phase.
    pub phase: usize,
    pub plan: SwingPlan,
    pub objective: ObjectiveValue,
}

/// Why assembly stopped early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFailure {
    pub phase: usize,
    pub time: f64,
    pub singularity: bool,
    pub message: String,
}

/// Planned references for the base, every tip and every joint on a uniform
/// time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPlan {
    pub mode: PlanMode,
    pub dt: f64,
    pub points: Vec<PlanPoint>,
    pub phases: Vec<PhaseSpan>,
    pub swings: Vec<SwingRecord>,
    /// Set when the plan ends before the schedule does.
    pub failure: Option<PlanFailure>,
}

impl MotionPlan {
    pub fn end_time(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.time)
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    fn bracket(&self, t: f64) -> (usize, f64) {
        let n = self.points.len();
        if n < 2 || t <= 0.0 {
            return (0, 0.0);
        }
        let x = t / self.dt;
        let k = (x.floor() as usize).min(n - 2);
        (k, (x - k as f64).clamp(0.0, 1.0))
    }

    /// Joint angle and rate references at `t` by cubic Hermite interpolation
    /// of the plan samples; held at the last sample beyond the end.
    pub fn joint_reference(&self, t: f64) -> (DVector<f64>, DVector<f64>) {
        let n = self.points.len();
        if n == 1 || t >= self.end_time() {
            let last = &self.points[n - 1];
            let rates = if n == 1 || t > self.end_time() {
                DVector::zeros(last.joint_rates.len())
            } else {
                last.joint_rates.clone()
            };
            return (last.joint_angles.clone(), rates);
        }
        let (k, u) = self.bracket(t);
        let (a, b) = (&self.points[k], &self.points[k + 1]);
        let h = self.dt;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let angles = &a.joint_angles * h00 + &a.joint_rates * (h10 * h) + &b.joint_angles * h01 + &b.joint_rates * (h11 * h);
        let d00 = (6.0 * u2 - 6.0 * u) / h;
        let d10 = 3.0 * u2 - 4.0 * u + 1.0;
        let d01 = (-6.0 * u2 + 6.0 * u) / h;
        let d11 = 3.0 * u2 - 2.0 * u;
        let rates = &a.joint_angles * d00 + &a.joint_rates * d10 + &b.joint_angles * d01 + &b.joint_rates * d11;
        (angles, rates)
    }

    /// Index of the phase running at `t` (the last one past the end).
    pub fn phase_at(&self, t: f64) -> usize {
        self.phases
            .iter()
            .position(|p| t < p.end)
            .unwrap_or(self.phases.len().saturating_sub(1))
    }

    /// Which limbs the plan holds attached at `t`: the contact state of the
    /// last sample at or before `t`.
    pub fn attached_at(&self, t: f64) -> Vec<bool> {
        let k = ((t / self.dt + 1e-9).floor().max(0.0) as usize).min(self.points.len() - 1);
        self.points[k].attached.clone()
    }
}

struct Builder<'a> {
    model: &'a RobotModel,
    settings: PlanSettings,
    dt: f64,
    points: Vec<PlanPoint>,
    anchors: Vec<Anchor>,
    state: SystemState,
}

impl Builder<'_> {
    fn steps(&self, duration: f64) -> Result<usize, PlanError> {
        let n = duration / self.dt;
        let r = n.round();
        if (n - r).abs() > 1e-6 {
            return Err(PlanError::Invalid(format!(
                "phase duration {duration} s is not a multiple of the plan step {} s",
                self.dt
            )));
        }
        Ok(r as usize)
    }

    fn push(&mut self, sample: PlanSample, phase: usize, tips: Vec<Vector3<f64>>, attached: Vec<bool>) {
        let index = self.points.len();
        self.points.push(PlanPoint {
            time: index as f64 * self.dt,
            phase,
            base: sample.state.base_pose(),
            base_twist: sample.state.base_twist(self.model.mode),
            joint_angles: sample.state.joint_angles.clone(),
            joint_rates: sample.state.joint_rates.clone(),
            tips,
            attached,
            momentum: sample.momentum.total,
            swing_momentum: sample.momentum.swing_part,
        });
        self.state = sample.state;
        self.state.time = index as f64 * self.dt;
    }

    fn anchor_tips(&self) -> Vec<Vector3<f64>> {
        self.anchors.iter().map(|a| a.target.position).collect()
    }

    /// Configuration with every tip on its anchor and the base at `pose`
    /// moving with `twist`.
    fn stance(&self, pose: &BasePose, twist: &DVector<f64>, t: f64) -> Result<PlanSample, PlanError> {
        let model = self.model;
        let mut angles = self.state.joint_angles.clone();
        for a in &self.anchors {
            let joints = &model.limbs[a.limb].joints;
            let sol = inverse_kinematics(model, a.limb, &a.target, pose, &angles.select_rows(joints))
                .map_err(|source| PlanError::Ik { time: t, source })?;
            for (k, &j) in joints.iter().enumerate() {
                angles[j] = sol[k];
            }
        }
        let mut state = SystemState::rest(model);
        state.set_base_pose(pose);
        state.set_base_twist(model.mode, twist);
        state.joint_angles = angles;
        state.time = t;
        let limbs: Vec<usize> = (0..model.limbs.len()).collect();
        let rates = support_rates(model, &state, &limbs, twist, &self.settings.distribution)?;
        for (l, r) in rates.iter().enumerate() {
            for (k, &j) in model.limbs[l].joints.iter().enumerate() {
                state.joint_rates[j] = r[k];
            }
        }
        let set = inertia_matrices(model, &state)?;
        let momentum = MomentumState::from_inertia(model, &set, &state, &[]);
        Ok(PlanSample { state, momentum })
    }

    fn base_shift(&mut self, phase: usize, from: BasePose, to: BasePose, duration: f64) -> Result<(), PlanError> {
        let n = self.steps(duration)?;
        let t0 = self.state.time;
        let delta = to.orientation * from.orientation.inverse();
        let turn = delta.scaled_axis();
        let shift = to.position - from.position;
        for k in 1..=n {
            let s = k as f64 / n as f64;
            let (q, dq, _) = quintic_blend(s);
            let pose = BasePose {
                position: from.position + shift * q,
                orientation: UnitQuaternion::from_scaled_axis(turn * q) * from.orientation,
            };
            let v = shift * (dq / duration);
            let w = turn * (dq / duration);
            let twist = match self.model.mode {
                BaseMode::Planar => DVector::from_column_slice(&[v.x, v.y, w.z]),
                BaseMode::Spatial => DVector::from_column_slice(&[v.x, v.y, v.z, w.x, w.y, w.z]),
            };
            let t = t0 + k as f64 * self.dt;
            let sample = self.stance(&pose, &twist, t)?;
            let tips = self.anchor_tips();
            self.push(sample, phase, tips, vec![true; self.model.limbs.len()]);
        }
        Ok(())
    }

    fn distribute(
        &mut self,
        swing: &SwingPlan,
        alpha: f64,
        window: (f64, f64),
        steps: usize,
        phase_of: &dyn Fn(f64) -> usize,
    ) -> Result<(), PlanError> {
        let model = self.model;
        let limb = swing.limb;
        let dist = Distribution {
            model,
            swing,
            anchors: self.anchors.iter().filter(|a| a.limb != limb).cloned().collect(),
            alpha: DistributionFactor::new(alpha)?,
            settings: self.settings.distribution,
        };
        let run = dist.run(&self.state, window, steps);
        // the run restarts at the last stored sample
        self.points.pop();
        let start_index = self.points.len();
        for (k, sample) in run.samples.into_iter().enumerate() {
            let t = (start_index + k) as f64 * self.dt;
            let mut tips = self.anchor_tips();
            let mut attached = vec![true; model.limbs.len()];
            if t < swing.grasp_end - 0.5 * self.dt {
                attached[limb] = false;
            }
            tips[limb] = swing.evaluate(t.clamp(window.0, window.1))?.position;
            self.push(sample, phase_of(t), tips, attached);
        }
        match run.failure {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

fn swing_problem<'a>(
    model: &'a RobotModel,
    state: &'a SystemState,
    limb: usize,
    (start, target, up): (Vector3<f64>, Vector3<f64>, Vector3<f64>),
    (release_height, grasp_height): (f64, f64),
    (r0, c0, c1, g1): (f64, f64, f64, f64),
) -> SwingProblem<'a> {
    SwingProblem {
        model,
        state,
        limb,
        start,
        target,
        up: nalgebra::Unit::new_unchecked(up),
        release_height,
        grasp_height,
        release_start: r0,
        window: (c0, c1),
        grasp_end: g1,
    }
}

fn error_time(e: &PlanError) -> Option<f64> {
    match e.root() {
        PlanError::Singularity { time, .. } | PlanError::Ik { time, .. } => Some(*time),
        _ => None,
    }
}

fn build(
    model: &RobotModel,
    schedule: &GaitSchedule,
    mode: PlanMode,
    initial: &SystemState,
    settings: &PlanSettings,
) -> Result<(MotionPlan, Option<PlanError>), PlanError> {
    schedule.validate()?;
    settings.weights.validate()?;
    let swing_time = schedule
        .phases
        .iter()
        .find_map(|p| match p {
            Phase::SwingLeg { duration, .. } => Some(*duration),
            _ => None,
        })
        .unwrap_or(1.0);
    let dt = swing_time / settings.weights.sample_count as f64;
    let kin = Kinematics::compute(model, initial)?;
    for p in &schedule.phases {
        if let Some(l) = p.limb() {
            model.limb(l)?;
        }
    }
    let anchors: Vec<Anchor> = (0..model.limbs.len())
        .map(|l| Anchor::at_current(model, &kin, l, settings.distribution.support_task))
        .collect();

    let mut spans = Vec::with_capacity(schedule.phases.len());
    let mut t = 0.0;
    for p in &schedule.phases {
        spans.push(PhaseSpan {
            kind: p.name().to_string(),
            limb: p.limb(),
            start: t,
            end: t + p.duration(),
        });
        t += p.duration();
    }
    let phase_of = |t: f64| -> usize {
        spans
            .iter()
            .position(|s| t < s.end - 1e-9)
            .unwrap_or(spans.len().saturating_sub(1))
    };

    let mut b = Builder {
        model,
        settings: *settings,
        dt,
        points: Vec::new(),
        anchors,
        state: initial.clone(),
    };
    let mut swings = Vec::new();
    let neutral = initial.base_pose();
    let mut offset = Vector3::zeros();
    let mut weights = settings.weights;
    weights.h = schedule.step_height;

    let first = {
        let mut s = initial.clone();
        s.time = 0.0;
        s.base_linear_velocity = Vector3::zeros();
        s.base_angular_velocity = Vector3::zeros();
        s.joint_rates.fill(0.0);
        b.state = s;
        b.stance(&neutral, &DVector::zeros(model.base_dof()), 0.0)
    };
    let outcome: Result<(), PlanError> = (|| {
        let first = first?;
        let tips = b.anchor_tips();
        b.push(first, 0, tips, vec![true; model.limbs.len()]);
        let mut i = 0;
        while i < schedule.phases.len() {
            match &schedule.phases[i] {
                Phase::BaseShift { displacement, duration } => {
                    offset += displacement;
                    let to = BasePose {
                        position: neutral.position + offset,
                        orientation: neutral.orientation,
                    };
                    let from = b.state.base_pose();
                    b.base_shift(i, from, to, *duration)?;
                    i += 1;
                }
                Phase::Release { limb, height, duration } => {
                    let (release_h, release_dur) = (*height, *duration);
                    let (displacement, swing_dur) = match &schedule.phases[i + 1] {
                        Phase::SwingLeg { displacement, duration, .. } => (*displacement, *duration),
                        _ => unreachable!("validated schedule"),
                    };
                    let (grasp_h, grasp_dur) = match &schedule.phases[i + 2] {
                        Phase::Grasp { height, duration, .. } => (*height, *duration),
                        _ => unreachable!("validated schedule"),
                    };
                    let limb = *limb;
                    let n = [b.steps(release_dur)?, b.steps(swing_dur)?, b.steps(grasp_dur)?];
                    let r0 = b.state.time;
                    let c0 = r0 + n[0] as f64 * dt;
                    let c1 = c0 + n[1] as f64 * dt;
                    let g1 = c1 + n[2] as f64 * dt;
                    let start = b.anchors[limb].target.position;
                    let target = start + displacement;
                    let up = schedule.up;
                    let alpha = mode.alpha();
                    let plan = if !mode.optimized() {
                        let plan = baseline_swing(
                            limb,
                            start,
                            target,
                            up,
                            schedule.step_height,
                            release_h,
                            grasp_h,
                            (r0, c0, c1, g1),
                        )?;
                        let score = objective(model, &b.state, &plan, &weights);
                        b.distribute(&plan, alpha, (r0, g1), n[0] + n[1] + n[2], &phase_of)?;
                        swings.push(SwingRecord {
                            phase: i + 1,
                            plan: plan.clone(),
                            objective: score,
                        });
                        plan
                    } else {
                        let mut problem_state = b.state.clone();
                        let geometry = (start, target, *up);
                        let heights = (release_h, grasp_h);
                        let times = (r0, c0, c1, g1);
                        if n[0] > 0 {
                            let p = swing_problem(model, &problem_state, limb, geometry, heights, times);
                            let mid = (p.curve_start() + p.curve_end()) * 0.5;
                            let straight =
                                BezierCurve::boundary_constrained(p.curve_start(), p.curve_end(), (c0, c1), mid, mid)?;
                            let lift = p.plan_with(SwingCurve::Bezier(straight));
                            b.distribute(&lift, alpha, (r0, c0), n[0], &phase_of)?;
                            problem_state = b.state.clone();
                        }
                        let problem = swing_problem(model, &problem_state, limb, geometry, heights, times);
                        let sol = optimize_swing(&problem, &weights, &settings.optimizer)?;
                        b.distribute(&sol.plan, alpha, (c0, g1), n[1] + n[2], &phase_of)?;
                        swings.push(SwingRecord {
                            phase: i + 1,
                            plan: sol.plan.clone(),
                            objective: sol.value,
                        });
                        sol.plan
                    };
                    let kin = Kinematics::compute(model, &b.state)?;
                    let mut anchor = Anchor::at_current(model, &kin, limb, settings.distribution.support_task);
                    anchor.target.position = plan.target;
                    b.anchors[limb] = anchor;
                    i += 3;
                }
                Phase::SwingLeg { .. } | Phase::Grasp { .. } => unreachable!("validated schedule"),
            }
        }
        Ok(())
    })();

    let error = outcome.err().map(|e| {
        let time = error_time(&e).unwrap_or(b.state.time);
        let phase = phase_of(time);
        (phase, time, e)
    });
    let failure = error.as_ref().map(|(phase, time, e)| PlanFailure {
        phase: *phase,
        time: *time,
        singularity: e.is_singularity(),
        message: e.to_string(),
    });
    let error = error.map(|(phase, _, e)| PlanError::Phase {
        phase,
        source: Box::new(e),
    });
    if b.points.is_empty() {
        // nothing to execute
        return Err(error.expect("an empty plan always has a failure"));
    }
    let plan = MotionPlan {
        mode,
        dt,
        points: b.points,
        phases: spans,
        swings,
        failure,
    };
    Ok((plan, error))
}

/// Assembles the plan for `schedule`, stopping at the first failure. The
/// returned plan holds every sample computed before the failure, which is
/// described in [`MotionPlan::failure`]. Requests that fail before the first
/// sample are errors.
pub fn assemble_partial(
    model: &RobotModel,
    schedule: &GaitSchedule,
    mode: PlanMode,
    initial: &SystemState,
    settings: &PlanSettings,
) -> Result<MotionPlan, PlanError> {
    build(model, schedule, mode, initial, settings).map(|(plan, _)| plan)
}

/// Like [`assemble_partial`], but any failure is an error tagged with the
/// phase it happened in.
pub fn assemble_plan(
    model: &RobotModel,
    schedule: &GaitSchedule,
    mode: PlanMode,
    initial: &SystemState,
    settings: &PlanSettings,
) -> Result<MotionPlan, PlanError> {
    match build(model, schedule, mode, initial, settings)? {
        (plan, None) => Ok(plan),
        (_, Some(e)) => Err(e),
    }
}
