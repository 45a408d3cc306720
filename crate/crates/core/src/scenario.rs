//! Scenario files: one TOML document naming a robot model, a gait, the
//! planner mode and the simulation settings. Runs write a CSV time series,
//! a JSON summary and the plan as JSON.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distribution::DistributionFactor;
use crate::error::{ModelError, PlanError, SimError};
use crate::gait::{assemble_partial, build_crawl_schedule, build_single_step, CrawlParams, GaitSchedule, MotionPlan, PlanFailure, PlanMode, PlanSettings};
use crate::model::{load_model, RobotModel};
use crate::multibody::forward_kinematics;
use crate::simdyn::{
    expand_joint_values, max_stable_timestep, run_scenario, ContactEvent, ContactParams, Detachment, Goal, PdGains, SimConfig, SimLog,
    SingularityEvent, Termination,
};
use crate::state::SystemState;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("planning failed: {0}")]
    Plan(#[from] PlanError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("scenarios cannot be compared: {0}")]
    Comparison(String),
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Config document
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeName {
    BL,
    LRST,
    PMD,
    FMD,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Robot model file, relative to this file.
    pub robot: PathBuf,
    pub mode: ModeName,
    /// Momentum distribution factor; required for PMD.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Output directory, relative to the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub initial: InitialConfig,
    pub gait: GaitConfig,
    #[serde(default)]
    pub planner: PlanSettings,
    #[serde(default)]
    pub contact: ContactParams,
    pub sim: SimSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// One value per joint, one per segment, or one for all joints (rad).
    pub joint_angles: Vec<f64>,
    #[serde(default)]
    pub base_position: [f64; 3],
    #[serde(default)]
    pub base_yaw_deg: f64,
    /// Shift the base along the gait's up axis until the mean tip height is zero.
    #[serde(default)]
    pub feet_on_surface: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pattern", rename_all = "snake_case", deny_unknown_fields)]
pub enum GaitConfig {
    Crawl {
        stride: f64,
        step_height: f64,
        swing_period: f64,
        base_shift: f64,
        shift_duration: f64,
        #[serde(default = "one_cm")]
        release_height: f64,
        #[serde(default = "one_cm")]
        grasp_height: f64,
        #[serde(default = "tenth")]
        release_fraction: f64,
        #[serde(default = "tenth")]
        grasp_fraction: f64,
        cycles: usize,
        /// Limb names in swing order.
        order: Vec<String>,
        direction: [f64; 3],
        up: [f64; 3],
    },
    SingleStep {
        limb: String,
        stride: f64,
        step_height: f64,
        swing_period: f64,
        #[serde(default)]
        settle: f64,
        direction: [f64; 3],
        up: [f64; 3],
    },
}

fn one_cm() -> f64 {
    0.01
}

fn tenth() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub timestep: f64,
    pub duration: f64,
    #[serde(default)]
    pub gravity: [f64; 3],
    pub kp: Vec<f64>,
    pub kd: Vec<f64>,
    /// Base travel needed for success (m); the plan's end suffices without it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_distance: Option<f64>,
    #[serde(default = "goal_tolerance")]
    pub goal_tolerance: f64,
    #[serde(default = "float_time")]
    pub float_time: f64,
    #[serde(default = "log_interval")]
    pub log_interval: f64,
    /// Defaults to the gait's up axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface_normal: Option<[f64; 3]>,
}

fn goal_tolerance() -> f64 {
    0.005
}

fn float_time() -> f64 {
    2.0
}

fn log_interval() -> f64 {
    1e-3
}

fn unit(v: [f64; 3], what: &str) -> Result<Unit<Vector3<f64>>, String> {
    let v = Vector3::from(v);
    if !(v.norm() > 1e-12) || !v.iter().all(|x| x.is_finite()) {
        return Err(format!("{what} must be a non-zero vector"));
    }
    Ok(Unit::new_normalize(v))
}

impl GaitConfig {
    fn up(&self) -> [f64; 3] {
        match self {
            GaitConfig::Crawl { up, .. } | GaitConfig::SingleStep { up, .. } => *up,
        }
    }

    fn step_height(&self) -> f64 {
        match self {
            GaitConfig::Crawl { step_height, .. } | GaitConfig::SingleStep { step_height, .. } => *step_height,
        }
    }

    pub fn schedule(&self, model: &RobotModel) -> Result<GaitSchedule, String> {
        let limb = |name: &str| model.limb_index(name).ok_or_else(|| format!("gait names unknown limb `{name}`"));
        let built = match self {
            GaitConfig::Crawl {
                stride,
                step_height,
                swing_period,
                base_shift,
                shift_duration,
                release_height,
                grasp_height,
                release_fraction,
                grasp_fraction,
                cycles,
                order,
                direction,
                up,
            } => build_crawl_schedule(&CrawlParams {
                stride: *stride,
                step_height: *step_height,
                swing_period: *swing_period,
                base_shift: *base_shift,
                shift_duration: *shift_duration,
                release_height: *release_height,
                grasp_height: *grasp_height,
                release_fraction: *release_fraction,
                grasp_fraction: *grasp_fraction,
                cycles: *cycles,
                order: order.iter().map(|n| limb(n)).collect::<Result<_, _>>()?,
                direction: unit(*direction, "gait direction")?,
                up: unit(*up, "gait up axis")?,
            }),
            GaitConfig::SingleStep {
                limb: name,
                stride,
                step_height,
                swing_period,
                settle,
                direction,
                up,
            } => build_single_step(
                limb(name)?,
                *stride,
                *step_height,
                *swing_period,
                *settle,
                unit(*direction, "gait direction")?,
                unit(*up, "gait up axis")?,
            ),
        };
        built.map_err(|e| e.to_string())
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario config serializes")
    }

    pub fn plan_mode(&self) -> Result<PlanMode, String> {
        let alpha = self.alpha;
        let fixed = |expected: f64| match alpha {
            Some(a) if a != expected => Err(format!("mode {:?} fixes alpha = {expected}, got {a}", self.mode)),
            _ => Ok(()),
        };
        match self.mode {
            ModeName::BL => fixed(0.0).map(|_| PlanMode::Baseline),
            ModeName::LRST => fixed(0.0).map(|_| PlanMode::Lrst),
            ModeName::FMD => fixed(1.0).map(|_| PlanMode::Full),
            ModeName::PMD => {
                let a = alpha.ok_or("mode PMD needs alpha")?;
                if !(a > 0.0 && a < 1.0) {
                    return Err(format!("mode PMD needs 0 < alpha < 1, got {a}"));
                }
                Ok(PlanMode::Partial(DistributionFactor::new(a).map_err(|e| e.to_string())?))
            }
        }
    }

    /// Everything that has to agree for two runs to be compared.
    fn shared(&self) -> impl PartialEq + '_ {
        let p = &self.planner;
        (&self.initial, &self.gait, &self.contact, &self.sim, p.weights, p.distribution, p.optimizer.starts)
    }
}

/// A loaded scenario with its model resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub source: PathBuf,
    pub model: RobotModel,
    /// Robot file content, used to check comparisons.
    robot_text: String,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Self::from_text(&text, path)
    }

    /// Parses `text` as if read from `path` (used to resolve the robot file).
    pub fn from_text(text: &str, path: &Path) -> Result<Self, ScenarioError> {
        let bad = |message: String| ScenarioError::Config {
            path: path.display().to_string(),
            message,
        };
        let config = ScenarioConfig::parse(text).map_err(bad)?;
        let robot = path.parent().unwrap_or(Path::new("")).join(&config.robot);
        if !robot.is_file() {
            return Err(bad(format!("robot file {} does not exist", robot.display())));
        }
        let robot_text = fs::read_to_string(&robot).map_err(|e| io_error(&robot, e))?;
        let model = load_model(&robot)?;
        let scenario = Scenario {
            config,
            source: path.to_path_buf(),
            model,
            robot_text,
        };
        scenario.validate().map_err(bad)?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<(), String> {
        let c = &self.config;
        c.plan_mode()?;
        c.gait.schedule(&self.model)?;
        self.initial_state()?;
        self.sim_config()?.validate(&self.model).map_err(|e| e.to_string())?;
        c.planner.weights.validate().map_err(|e| e.to_string())?;
        Ok(())
    }

    pub fn set_timestep(&mut self, dt: f64) -> Result<(), ScenarioError> {
        self.config.sim.timestep = dt;
        self.validate().map_err(|message| ScenarioError::Config {
            path: self.source.display().to_string(),
            message,
        })
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.config.seed = seed;
    }

    pub fn out_dir(&self) -> PathBuf {
        self.config
            .out_dir
            .clone()
            .unwrap_or_else(|| Path::new("out").join(&self.config.name))
    }

    pub fn plan_settings(&self) -> PlanSettings {
        let mut s = self.config.planner;
        s.weights.h = self.config.gait.step_height();
        s.optimizer.seed = self.config.seed;
        s
    }

    pub fn initial_state(&self) -> Result<SystemState, String> {
        let init = &self.config.initial;
        let model = &self.model;
        let angles = expand_joint_values(&init.joint_angles, model, "initial joint angles")?;
        let mut s = SystemState::rest(model);
        s.joint_angles = angles;
        s.base_position = Vector3::from(init.base_position);
        s.base_orientation = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), init.base_yaw_deg.to_radians());
        if init.feet_on_surface {
            let up = unit(self.config.gait.up(), "gait up axis")?;
            let fk = forward_kinematics(model, &s).map_err(|e| e.to_string())?;
            let mean = fk.end_effectors.iter().map(|e| e.position.dot(&up)).sum::<f64>() / fk.end_effectors.len() as f64;
            s.base_position -= up.into_inner() * mean;
        }
        if !s.limit_violations(model).is_empty() {
            return Err("initial joint angles violate joint limits".into());
        }
        Ok(s)
    }

    pub fn sim_config(&self) -> Result<SimConfig, String> {
        let sim = &self.config.sim;
        let up = self.config.gait.up();
        let direction = match &self.config.gait {
            GaitConfig::Crawl { direction, .. } | GaitConfig::SingleStep { direction, .. } => *direction,
        };
        Ok(SimConfig {
            gravity: Vector3::from(sim.gravity),
            timestep: sim.timestep,
            duration: sim.duration,
            gains: PdGains {
                kp: sim.kp.clone(),
                kd: sim.kd.clone(),
            },
            contact: self.config.contact,
            surface_normal: unit(sim.surface_normal.unwrap_or(up), "surface normal")?,
            goal: match sim.goal_distance {
                Some(distance) => Some(Goal {
                    distance,
                    direction: unit(direction, "gait direction")?,
                    tolerance: sim.goal_tolerance,
                }),
                None => None,
            },
            float_time: sim.float_time,
            log_interval: sim.log_interval,
        })
    }

    pub fn plan(&self) -> Result<MotionPlan, ScenarioError> {
        let mode = self.config.plan_mode().expect("validated at load");
        let schedule = self.config.gait.schedule(&self.model).expect("validated at load");
        let initial = self.initial_state().expect("validated at load");
        let plan = assemble_partial(&self.model, &schedule, mode, &initial, &self.plan_settings())?;
        // singular plans are executed up to the failure; anything else is fatal
        if let Some(f) = &plan.failure {
            if !f.singularity {
                return Err(ScenarioError::Plan(PlanError::Invalid(format!(
                    "phase {} at t = {:.3} s: {}",
                    f.phase, f.time, f.message
                ))));
            }
        }
        Ok(plan)
    }

    pub fn run(&self) -> Result<RunOutcome, ScenarioError> {
        let plan = self.plan()?;
        let config = self.sim_config().expect("validated at load");
        let log = run_scenario(&self.model, &plan, &config)?;
        let summary = RunSummary::new(self, &plan, &log);
        Ok(RunOutcome { plan, log, summary })
    }
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

/// Exit status of a run with the given termination.
pub fn exit_code(t: Termination) -> i32 {
    match t {
        Termination::GoalReached => 0,
        Termination::DetachedFloating => 10,
        Termination::Singularity => 11,
        Termination::TimeOut => 12,
        Termination::NumericalBlowup => 13,
    }
}

impl ScenarioError {
    /// Exit status for a run that could not produce results.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Config { .. } | ScenarioError::Model(_) => 20,
            ScenarioError::Plan(_) => 21,
            ScenarioError::Comparison(_) => 22,
            ScenarioError::Sim(_) => 23,
            ScenarioError::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    /// Largest contact force magnitude over time and contacts (N).
    pub max_force: f64,
    /// Time average of the largest contact force at each sample (N).
    pub mean_force: f64,
    /// N·m
    pub max_moment: f64,
    pub mean_moment: f64,
    /// Peak norm of the momentum rate, from the logged momentum.
    pub peak_momentum_rate: f64,
    /// Largest base rotation from the initial attitude (deg).
    pub attitude_excursion_deg: f64,
    /// Base travel along the gait direction (m).
    pub distance: f64,
    pub end_time: f64,
}

impl RunStats {
    pub fn from_log(log: &SimLog) -> Self {
        let largest = |v: &[Vector3<f64>]| v.iter().map(|f| f.norm()).fold(0.0, f64::max);
        let n = log.samples.len().max(1) as f64;
        let forces: Vec<f64> = log.samples.iter().map(|s| largest(&s.forces)).collect();
        let moments: Vec<f64> = log.samples.iter().map(|s| largest(&s.moments)).collect();
        let rate = log
            .samples
            .windows(2)
            .map(|w| (&w[1].momentum - &w[0].momentum).norm() / (w[1].time - w[0].time))
            .fold(0.0, f64::max);
        let first = log.samples.first().map(|s| s.base);
        let attitude = log
            .samples
            .iter()
            .map(|s| first.map_or(0.0, |b| b.attitude_change(&s.base)))
            .fold(0.0, f64::max);
        RunStats {
            max_force: forces.iter().copied().fold(0.0, f64::max),
            mean_force: forces.iter().sum::<f64>() / n,
            max_moment: moments.iter().copied().fold(0.0, f64::max),
            mean_moment: moments.iter().sum::<f64>() / n,
            peak_momentum_rate: rate,
            attitude_excursion_deg: attitude.to_degrees(),
            distance: log.distance,
            end_time: log.end_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanInfo {
    pub complete: bool,
    pub end_time: f64,
    pub swings: usize,
    pub failure: Option<PlanFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub name: String,
    pub robot: String,
    pub mode: String,
    pub alpha: f64,
    pub seed: u64,
    pub timestep: f64,
    pub termination: Termination,
    pub exit_code: i32,
    pub stats: RunStats,
    pub plan: PlanInfo,
    pub detachments: Vec<Detachment>,
    pub singularities: Vec<SingularityEvent>,
    pub contact_events: Vec<ContactEvent>,
    pub note: Option<String>,
}

impl RunSummary {
    pub fn new(scenario: &Scenario, plan: &MotionPlan, log: &SimLog) -> Self {
        RunSummary {
            schema_version: SCHEMA_VERSION,
            name: scenario.config.name.clone(),
            robot: scenario.model.name.clone(),
            mode: plan.mode.label().to_string(),
            alpha: plan.mode.alpha(),
            seed: scenario.config.seed,
            timestep: scenario.config.sim.timestep,
            termination: log.termination,
            exit_code: exit_code(log.termination),
            stats: RunStats::from_log(log),
            plan: PlanInfo {
                complete: plan.is_complete(),
                end_time: plan.end_time(),
                swings: plan.swings.len(),
                failure: plan.failure.clone(),
            },
            detachments: log.detachments.clone(),
            singularities: log.singularities.clone(),
            contact_events: log.contact_events.clone(),
            note: log.note.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub plan: MotionPlan,
    pub log: SimLog,
    pub summary: RunSummary,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ScenarioError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| io_error(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_error(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("results serialize");
    v.push(b'\n');
    v
}

pub fn write_plan(plan: &MotionPlan, dir: &Path) -> Result<PathBuf, ScenarioError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join("plan.json");
    write_atomic(&path, &to_json(plan))?;
    Ok(path)
}

pub fn read_plan(path: &Path) -> Result<MotionPlan, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_error(path, e))
}

/// Header of the time-series file.
pub fn timeseries_header(model: &RobotModel) -> Vec<String> {
    let mut h: Vec<String> = ["time", "base_x", "base_y", "base_z", "base_qw", "base_qx", "base_qy", "base_qz"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(model.links.iter().map(|l| format!("q_{}", l.name)));
    for limb in &model.limbs {
        for c in ["fx", "fy", "fz", "mx", "my", "mz"] {
            h.push(format!("{}_{c}", limb.name));
        }
    }
    let momentum: &[&str] = match model.mode {
        crate::model::BaseMode::Spatial => &["p_x", "p_y", "p_z", "l_x", "l_y", "l_z"],
        crate::model::BaseMode::Planar => &["p_x", "p_y", "l_z"],
    };
    h.extend(momentum.iter().map(|s| s.to_string()));
    h
}

pub fn write_timeseries(model: &RobotModel, log: &SimLog, path: &Path) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| io_error(path, e);
    w.write_record(timeseries_header(model)).map_err(err)?;
    for s in &log.samples {
        let q = s.base.orientation.quaternion();
        let mut row = vec![s.time, s.base.position.x, s.base.position.y, s.base.position.z, q.w, q.i, q.j, q.k];
        row.extend(s.joint_angles.iter());
        for (f, m) in s.forces.iter().zip(&s.moments) {
            row.extend(f.iter().chain(m.iter()));
        }
        row.extend(s.momentum.iter());
        w.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| io_error(path, e))?;
    write_atomic(path, &bytes)
}

/// Writes `timeseries.csv`, `summary.json` and `plan.json` into `dir`.
pub fn write_outputs(scenario: &Scenario, outcome: &RunOutcome, dir: &Path) -> Result<(), ScenarioError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    write_timeseries(&scenario.model, &outcome.log, &dir.join("timeseries.csv"))?;
    write_atomic(&dir.join("summary.json"), &to_json(&outcome.summary))?;
    write_plan(&outcome.plan, dir)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

/// Stats of one run divided by those of the baseline run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub max_force: Option<f64>,
    pub mean_force: Option<f64>,
    pub max_moment: Option<f64>,
    pub mean_moment: Option<f64>,
    pub peak_momentum_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub mode: String,
    pub alpha: f64,
    pub termination: Termination,
    pub stats: RunStats,
    pub ratios: Option<Ratios>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub schema_version: u32,
    /// Name of the run the ratios refer to.
    pub baseline: Option<String>,
    pub rows: Vec<ComparisonRow>,
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    (b != 0.0).then(|| a / b)
}

impl ComparisonSummary {
    /// Ratios refer to the first BL run.
    pub fn from_summaries(summaries: &[RunSummary]) -> Self {
        let base = summaries.iter().find(|s| s.mode == PlanMode::Baseline.label());
        let rows = summaries
            .iter()
            .map(|s| ComparisonRow {
                name: s.name.clone(),
                mode: s.mode.clone(),
                alpha: s.alpha,
                termination: s.termination,
                stats: s.stats,
                ratios: base.map(|b| Ratios {
                    max_force: ratio(s.stats.max_force, b.stats.max_force),
                    mean_force: ratio(s.stats.mean_force, b.stats.mean_force),
                    max_moment: ratio(s.stats.max_moment, b.stats.max_moment),
                    mean_moment: ratio(s.stats.mean_moment, b.stats.mean_moment),
                    peak_momentum_rate: ratio(s.stats.peak_momentum_rate, b.stats.peak_momentum_rate),
                }),
            })
            .collect();
        ComparisonSummary {
            schema_version: SCHEMA_VERSION,
            baseline: base.map(|b| b.name.clone()),
            rows,
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        to_json(self)
    }

    /// Plain-text table.
    pub fn render(&self) -> String {
        let fmt = |r: Option<f64>| r.map_or("-".to_string(), |v| format!("{v:.3}"));
        let mut out = format!(
            "{:<24} {:<5} {:>5} {:<18} {:>9} {:>9} {:>9} {:>9} {:>8} {:>8} {:>7} {:>7}\n",
            "scenario", "mode", "alpha", "termination", "maxF [N]", "meanF [N]", "maxM", "meanM", "att[deg]", "dist[m]", "maxF/BL", "meanF/BL"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<24} {:<5} {:>5.2} {:<18} {:>9.4} {:>9.4} {:>9.5} {:>9.5} {:>8.3} {:>8.4} {:>7} {:>7}\n",
                r.name,
                r.mode,
                r.alpha,
                r.termination.name(),
                r.stats.max_force,
                r.stats.mean_force,
                r.stats.max_moment,
                r.stats.mean_moment,
                r.stats.attitude_excursion_deg,
                r.stats.distance,
                fmt(r.ratios.and_then(|x| x.max_force)),
                fmt(r.ratios.and_then(|x| x.mean_force)),
            ));
        }
        out
    }
}

/// Checks that the scenarios differ only in mode, alpha, seed and naming.
/// The same file may appear more than once.
pub fn check_comparable(scenarios: &[Scenario]) -> Result<(), ScenarioError> {
    let Some(first) = scenarios.first() else {
        return Err(ScenarioError::Comparison("no scenarios given".into()));
    };
    for s in scenarios {
        if s.robot_text != first.robot_text {
            return Err(ScenarioError::Comparison(format!(
                "{} uses a different robot than {}",
                s.config.name, first.config.name
            )));
        }
        if s.config.shared() != first.config.shared() {
            return Err(ScenarioError::Comparison(format!(
                "{} differs from {} in gait, contact, simulation or initial pose",
                s.config.name, first.config.name
            )));
        }
    }
    Ok(())
}

/// Runs every scenario (concurrently) and compares them with the BL run.
pub fn compare(scenarios: &[Scenario]) -> Result<(Vec<RunOutcome>, ComparisonSummary), ScenarioError> {
    check_comparable(scenarios)?;
    let outcomes: Vec<Result<RunOutcome, ScenarioError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios.iter().map(|s| scope.spawn(move || s.run())).collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    let summaries: Vec<RunSummary> = outcomes.iter().map(|o| o.summary.clone()).collect();
    Ok((outcomes, ComparisonSummary::from_summaries(&summaries)))
}

/// Smallest stable timestep hint for the scenario's model and contact.
pub fn timestep_bound(scenario: &Scenario) -> f64 {
    max_stable_timestep(&scenario.model, &scenario.config.contact)
}
