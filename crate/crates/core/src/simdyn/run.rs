use nalgebra::{DVector, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::gait::MotionPlan;
use crate::model::RobotModel;
use crate::multibody::{momentum_about, reduce_vector, Kinematics};
use crate::state::{BasePose, SystemState};

use super::contact::{detachment_check, tensile_force, ContactParams, ContactPoint, Hold};
use super::control::{pd_torques, PdGains};
use super::dynamics::{contact_wrenches, step, ContactWrench};

/// Distance the base has to travel for a run to count as successful.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Goal {
    /// m
    pub distance: f64,
    pub direction: Unit<Vector3<f64>>,
    /// Shortfall still accepted (m).
    #[serde(default = "default_goal_tolerance")]
    pub tolerance: f64,
}

fn default_goal_tolerance() -> f64 {
    0.005
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// m/s²
    pub gravity: Vector3<f64>,
    /// s
    pub timestep: f64,
    /// Upper bound on simulated time (s).
    pub duration: f64,
    pub gains: PdGains,
    pub contact: ContactParams,
    pub surface_normal: Unit<Vector3<f64>>,
    /// Without a goal, finishing the plan counts as success.
    pub goal: Option<Goal>,
    /// Time simulated after an unplanned detachment (s).
    pub float_time: f64,
    /// Interval between logged samples (s).
    pub log_interval: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            gravity: Vector3::zeros(),
            timestep: 1e-3,
            duration: 120.0,
            gains: PdGains::uniform(5.0, 0.1),
            contact: ContactParams::default(),
            surface_normal: Vector3::z_axis(),
            goal: None,
            float_time: 2.0,
            log_interval: 1e-3,
        }
    }
}

/// Largest timestep accepted for `model` under `contact`: one twentieth of
/// the period scale of the stiffest spring on the lightest body.
pub fn max_stable_timestep(model: &RobotModel, contact: &ContactParams) -> f64 {
    let linear = (contact.stiffness / model.min_link_mass()).sqrt();
    let smallest_inertia = model
        .links
        .iter()
        .map(|l| l.body.inertia.diagonal().iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min))
        .fold(f64::INFINITY, f64::min);
    let angular = if contact.rotational_stiffness > 0.0 && smallest_inertia.is_finite() {
        (contact.rotational_stiffness / smallest_inertia).sqrt()
    } else {
        0.0
    };
    1.0 / (20.0 * linear.max(angular))
}

impl SimConfig {
    pub fn validate(&self, model: &RobotModel) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        self.contact.validate().map_err(SimError::Config)?;
        self.gains.resolve(model).map_err(SimError::Config)?;
        if !(self.timestep > 0.0) {
            return bad(format!("timestep must be positive, got {}", self.timestep));
        }
        let bound = max_stable_timestep(model, &self.contact);
        if self.timestep > bound {
            return bad(format!(
                "timestep {} s exceeds the stability bound {:.3e} s for this model and contact",
                self.timestep, bound
            ));
        }
        if !(self.duration > 0.0 && self.float_time >= 0.0 && self.log_interval > 0.0) {
            return bad("duration and log interval must be positive, float time non-negative".into());
        }
        if !self.gravity.iter().all(|g| g.is_finite()) {
            return bad("gravity must be finite".into());
        }
        if let Some(g) = &self.goal {
            if !(g.distance >= 0.0 && g.tolerance >= 0.0) {
                return bad("goal distance and tolerance must be non-negative".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GoalReached,
    DetachedFloating,
    Singularity,
    TimeOut,
    NumericalBlowup,
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::GoalReached => "goal_reached",
            Termination::DetachedFloating => "detached_floating",
            Termination::Singularity => "singularity",
            Termination::TimeOut => "time_out",
            Termination::NumericalBlowup => "numerical_blowup",
        }
    }
}

/// One logged instant. Wrenches and anchors are listed per limb; detached
/// limbs carry zero wrenches and no anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSample {
    pub time: f64,
    pub base: BasePose,
    pub base_twist: DVector<f64>,
    pub joint_angles: DVector<f64>,
    pub joint_rates: DVector<f64>,
    pub forces: Vec<Vector3<f64>>,
    pub moments: Vec<Vector3<f64>>,
    pub anchors: Vec<Option<Vector3<f64>>>,
    /// System momentum with the angular part about the inertial origin,
    /// in the model's motion space.
    pub momentum: DVector<f64>,
}

impl SimSample {
    pub fn state(&self, model: &RobotModel) -> SystemState {
        let mut s = SystemState::rest(model);
        s.set_base_pose(&self.base);
        s.set_base_twist(model.mode, &self.base_twist);
        s.joint_angles = self.joint_angles.clone();
        s.joint_rates = self.joint_rates.clone();
        s.time = self.time;
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detachment {
    pub time: f64,
    pub limb: usize,
    /// Tensile force that broke the grip (N).
    pub tensile_force: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactChange {
    Release,
    Grasp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub time: f64,
    pub limb: usize,
    pub change: ContactChange,
    pub anchor: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityEvent {
    pub time: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimLog {
    pub samples: Vec<SimSample>,
    pub detachments: Vec<Detachment>,
    pub contact_events: Vec<ContactEvent>,
    pub singularities: Vec<SingularityEvent>,
    pub termination: Termination,
    pub end_time: f64,
    /// Base displacement along the goal direction (along x without a goal).
    pub distance: f64,
    pub note: Option<String>,
}

fn initial_state(model: &RobotModel, plan: &MotionPlan) -> SystemState {
    let p = &plan.points[0];
    let mut s = SystemState::rest(model);
    s.set_base_pose(&p.base);
    s.set_base_twist(model.mode, &p.base_twist);
    s.joint_angles = p.joint_angles.clone();
    s.joint_rates = p.joint_rates.clone();
    s
}

fn tip_pose(model: &RobotModel, state: &SystemState, limb: usize) -> (Vector3<f64>, UnitQuaternion<f64>) {
    let kin = Kinematics::from_parts(model, &state.base_pose(), &state.joint_angles);
    let ee = kin.end_effector(model, limb);
    (
        ee.position,
        UnitQuaternion::from_rotation_matrix(&nalgebra::Rotation3::from_matrix_unchecked(ee.rotation)),
    )
}

fn sample(model: &RobotModel, state: &SystemState, contacts: &[ContactPoint], wrenches: &[ContactWrench]) -> SimSample {
    let momentum = momentum_about(model, state, &Vector3::zeros()).expect("state matches model");
    SimSample {
        time: state.time,
        base: state.base_pose(),
        base_twist: state.base_twist(model.mode),
        joint_angles: state.joint_angles.clone(),
        joint_rates: state.joint_rates.clone(),
        forces: wrenches.iter().map(|w| w.force).collect(),
        moments: wrenches.iter().map(|w| w.moment).collect(),
        anchors: contacts.iter().map(|c| c.attached.then_some(c.anchor)).collect(),
        momentum: reduce_vector(model.mode, &momentum),
    }
}

/// Executes `plan` with PD joint tracking on the free-floating robot.
pub fn run_scenario(model: &RobotModel, plan: &MotionPlan, config: &SimConfig) -> Result<SimLog, SimError> {
    config.validate(model)?;
    if plan.points.is_empty() {
        return Err(SimError::Config("plan has no samples".into()));
    }
    if plan.points[0].joint_angles.len() != model.dof() {
        return Err(SimError::Config("plan does not match the robot model".into()));
    }
    let (kp, kd) = config.gains.resolve(model).map_err(SimError::Config)?;
    let dt = config.timestep;
    let log_every = ((config.log_interval / dt).round() as usize).max(1);
    let mut state = initial_state(model, plan);
    let origin = state.base_position;
    let direction = config.goal.map_or(Vector3::x_axis(), |g| g.direction);

    let planned0 = plan.attached_at(0.0);
    let mut contacts: Vec<ContactPoint> = (0..model.limbs.len())
        .map(|l| {
            let (p, q) = tip_pose(model, &state, l);
            let mut c = ContactPoint::new(l, p, q, config.contact, config.surface_normal);
            c.attached = planned0[l];
            c
        })
        .collect();
    let mut lost = vec![false; model.limbs.len()];
    let mut floating_since: Option<f64> = None;

    let mut log = SimLog {
        samples: Vec::new(),
        detachments: Vec::new(),
        contact_events: Vec::new(),
        singularities: Vec::new(),
        termination: Termination::TimeOut,
        end_time: 0.0,
        distance: 0.0,
        note: None,
    };
    let plan_end = plan.end_time();
    let max_steps = (config.duration / dt).ceil() as usize;
    let mut k = 0usize;
    loop {
        let t = k as f64 * dt;
        state.time = t;

        let planned = plan.attached_at(t);
        for (l, c) in contacts.iter_mut().enumerate() {
            if c.attached && !planned[l] {
                c.attached = false;
                log.contact_events.push(ContactEvent {
                    time: t,
                    limb: l,
                    change: ContactChange::Release,
                    anchor: c.anchor,
                });
            } else if !c.attached && planned[l] && !lost[l] {
                let (p, q) = tip_pose(model, &state, l);
                c.anchor = p;
                c.anchor_orientation = q;
                c.attached = true;
                log.contact_events.push(ContactEvent {
                    time: t,
                    limb: l,
                    change: ContactChange::Grasp,
                    anchor: p,
                });
            }
        }

        let wrenches = contact_wrenches(model, &state, &contacts);
        let breaking: Vec<usize> = contacts
            .iter()
            .enumerate()
            .filter(|(l, c)| c.attached && detachment_check(c, &wrenches[*l].force) == Hold::Detaches)
            .map(|(l, _)| l)
            .collect();
        if k % log_every == 0 || !breaking.is_empty() {
            log.samples.push(sample(model, &state, &contacts, &wrenches));
        }
        for &l in &breaking {
            log.detachments.push(Detachment {
                time: t,
                limb: l,
                tensile_force: tensile_force(&contacts[l], &wrenches[l].force),
            });
            contacts[l].attached = false;
            lost[l] = true;
            floating_since.get_or_insert(t);
        }

        let done = if let Some(since) = floating_since {
            (t - since >= config.float_time - 1e-12).then_some(Termination::DetachedFloating)
        } else if t >= plan_end - 1e-12 {
            match &plan.failure {
                Some(f) => {
                    log.singularities.push(SingularityEvent {
                        time: f.time,
                        message: f.message.clone(),
                    });
                    Some(if f.singularity {
                        Termination::Singularity
                    } else {
                        Termination::TimeOut
                    })
                }
                None => {
                    let travelled = (state.base_position - origin).dot(&direction);
                    Some(match &config.goal {
                        Some(g) if travelled < g.distance - g.tolerance => Termination::TimeOut,
                        _ => Termination::GoalReached,
                    })
                }
            }
        } else {
            None
        };
        let done = done.or_else(|| (k >= max_steps).then_some(Termination::TimeOut));
        if let Some(cause) = done {
            if log.samples.last().map(|s| s.time) != Some(t) {
                log.samples.push(sample(model, &state, &contacts, &wrenches));
            }
            log.termination = cause;
            break;
        }

        let tau = pd_torques(plan, &state, t, &kp, &kd);
        match step(model, &state, &tau, &contacts, &config.gravity, dt) {
            Ok(next) => state = next,
            Err(e) => {
                log.termination = Termination::NumericalBlowup;
                log.note = Some(e.to_string());
                break;
            }
        }
        k += 1;
    }
    log.end_time = state.time;
    log.distance = (state.base_position - origin).dot(&direction);
    Ok(log)
}
