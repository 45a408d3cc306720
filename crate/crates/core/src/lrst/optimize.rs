use nalgebra::{DVector, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::model::{BaseMode, RobotModel};
use crate::state::SystemState;

use super::bezier::BezierCurve;
use super::objective::{sample_swing, score_series, LrstWeights, ObjectiveValue};
use super::simplex::{minimize, SimplexOptions};
use super::swing::{SwingCurve, SwingPlan};

/// Apex height of a Bezier curve whose two free points sit `c` above the
/// chord midpoint is `APEX_GAIN * c` (sum of the two middle Bernstein weights at ½).
const APEX_GAIN: f64 = 70.0 / 128.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSettings {
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            starts: 8,
            seed: 0,
            max_iterations: 500,
            tolerance: 1e-6,
        }
    }
}

/// Everything needed to plan one swing. `state` is the configuration at the
/// start of the curve, i.e. with the swing tip already lifted by the release
/// offset.
#[derive(Debug, Clone)]
pub struct SwingProblem<'a> {
    pub model: &'a RobotModel,
    pub state: &'a SystemState,
    pub limb: usize,
    /// Grasp point the swing leaves from.
    pub start: Vector3<f64>,
    /// Grasp point the swing ends on.
    pub target: Vector3<f64>,
    pub up: Unit<Vector3<f64>>,
    pub release_height: f64,
    pub grasp_height: f64,
    pub release_start: f64,
    /// Window of the swing curve between the vertical moves.
    pub window: (f64, f64),
    pub grasp_end: f64,
}

impl SwingProblem<'_> {
    pub fn curve_start(&self) -> Vector3<f64> {
        self.start + self.up.as_ref() * self.release_height
    }

    pub fn curve_end(&self) -> Vector3<f64> {
        self.target + self.up.as_ref() * self.grasp_height
    }

    pub fn plan_with(&self, curve: SwingCurve) -> SwingPlan {
        SwingPlan {
            limb: self.limb,
            curve,
            start: self.start,
            target: self.target,
            up: self.up,
            release_height: self.release_height,
            grasp_height: self.grasp_height,
            release_start: self.release_start,
            grasp_end: self.grasp_end,
        }
    }

    fn free_dim(&self) -> usize {
        match self.model.mode {
            BaseMode::Planar => 4,
            BaseMode::Spatial => 6,
        }
    }

    fn pack(&self, a3: &Vector3<f64>, a4: &Vector3<f64>) -> DVector<f64> {
        match self.model.mode {
            BaseMode::Planar => DVector::from_column_slice(&[a3.x, a3.y, a4.x, a4.y]),
            BaseMode::Spatial => DVector::from_column_slice(&[a3.x, a3.y, a3.z, a4.x, a4.y, a4.z]),
        }
    }

    /// Builds the rest-to-rest curve from the decision vector.
    pub fn curve(&self, x: &DVector<f64>) -> Result<BezierCurve, PlanError> {
        let a = self.curve_start();
        let (a3, a4) = match self.model.mode {
            BaseMode::Planar => (Vector3::new(x[0], x[1], a.z), Vector3::new(x[2], x[3], a.z)),
            BaseMode::Spatial => (Vector3::new(x[0], x[1], x[2]), Vector3::new(x[3], x[4], x[5])),
        };
        BezierCurve::boundary_constrained(a, self.curve_end(), self.window, a3, a4)
    }

    /// Objective of the curve described by the decision vector.
    pub fn evaluate(&self, x: &DVector<f64>, weights: &LrstWeights) -> ObjectiveValue {
        match self.curve(x) {
            Ok(curve) => self.evaluate_curve(&SwingCurve::Bezier(curve), weights),
            Err(_) => ObjectiveValue::infeasible(),
        }
    }

    pub fn evaluate_curve(&self, curve: &SwingCurve, weights: &LrstWeights) -> ObjectiveValue {
        let window = curve.window();
        match sample_swing(self.model, self.state, self.limb, window, weights.sample_count, |t| {
            curve.evaluate(t).map(|s| s.position)
        }) {
            Ok(series) => score_series(&series, &self.up, weights),
            Err(_) => ObjectiveValue::infeasible(),
        }
    }

    /// Initial decision vectors: the chord midpoint, vertical offsets of it,
    /// then seeded random perturbations around the offset that reaches `h`.
    pub fn seeds(&self, weights: &LrstWeights, settings: &OptimizerSettings) -> Vec<DVector<f64>> {
        let a = self.curve_start();
        let b = self.curve_end();
        let mid = (a + b) * 0.5;
        let up = self.up.as_ref();
        let h = weights.h;
        let mut out: Vec<DVector<f64>> = [0.0, h, -h, 2.0 * h]
            .iter()
            .map(|c| {
                let p = mid + up * *c;
                self.pack(&p, &p)
            })
            .collect();
        let lift = mid + up * (h / APEX_GAIN);
        let centre = self.pack(&lift, &lift);
        let spread = h.max(1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        while out.len() < settings.starts {
            let noise = DVector::from_fn(self.free_dim(), |_, _| rng.random_range(-spread..spread));
            out.push(&centre + noise);
        }
        out.truncate(settings.starts.max(1));
        out
    }
}

/// Result of [`optimize_swing`].
#[derive(Debug, Clone)]
pub struct LrstSolution {
    pub plan: SwingPlan,
    pub value: ObjectiveValue,
    /// Objective at each start before optimisation.
    pub seed_values: Vec<ObjectiveValue>,
    /// Objective reached from each start.
    pub start_results: Vec<ObjectiveValue>,
    pub best_start: usize,
    /// Best objective found so far, after each simplex iteration across all starts.
    pub history: Vec<f64>,
}

/// Multi-start simplex search over the two free control points.
pub fn optimize_swing(
    problem: &SwingProblem,
    weights: &LrstWeights,
    settings: &OptimizerSettings,
) -> Result<LrstSolution, PlanError> {
    weights.validate()?;
    if settings.starts == 0 {
        return Err(PlanError::Invalid("optimizer needs at least one start".into()));
    }
    let chord = (problem.curve_end() - problem.curve_start()).norm();
    let step = (0.5 * weights.h).max(0.1 * chord).max(1e-3);
    let opts = SimplexOptions {
        max_iterations: settings.max_iterations,
        tolerance: settings.tolerance,
    };
    let seeds = problem.seeds(weights, settings);
    let mut seed_values = Vec::with_capacity(seeds.len());
    let mut start_results = Vec::with_capacity(seeds.len());
    let mut history = Vec::new();
    let mut best: Option<(usize, DVector<f64>, f64)> = None;
    for (i, x0) in seeds.iter().enumerate() {
        seed_values.push(problem.evaluate(x0, weights));
        let result = minimize(|x| problem.evaluate(x, weights).total, x0, step, &opts);
        let running = best.as_ref().map_or(f64::INFINITY, |b| b.2);
        history.extend(result.history.iter().map(|v| v.min(running)));
        start_results.push(problem.evaluate(&result.x, weights));
        if result.value < running {
            best = Some((i, result.x, result.value));
        }
    }
    let (best_start, x, _) = best.ok_or(PlanError::NoFeasibleTrajectory)?;
    let curve = problem.curve(&x)?;
    let value = start_results[best_start];
    Ok(LrstSolution {
        plan: problem.plan_with(SwingCurve::Bezier(curve)),
        value,
        seed_values,
        start_results,
        best_start,
        history,
    })
}
