use nalgebra::{Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::PlanError;

/// One step of a gait schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phase {
    /// Vertical lift of the tip off its grasp point.
    Release { limb: usize, height: f64, duration: f64 },
    /// Swing from the current grasp point to one `displacement` away.
    SwingLeg {
        limb: usize,
        displacement: Vector3<f64>,
        duration: f64,
    },
    /// Vertical descent onto the new grasp point.
    Grasp { limb: usize, height: f64, duration: f64 },
    /// All limbs attached while the base moves by `displacement`.
    BaseShift { displacement: Vector3<f64>, duration: f64 },
}

impl Phase {
    pub fn duration(&self) -> f64 {
        match self {
            Phase::Release { duration, .. }
            | Phase::SwingLeg { duration, .. }
            | Phase::Grasp { duration, .. }
            | Phase::BaseShift { duration, .. } => *duration,
        }
    }

    pub fn limb(&self) -> Option<usize> {
        match self {
            Phase::Release { limb, .. } | Phase::SwingLeg { limb, .. } | Phase::Grasp { limb, .. } => Some(*limb),
            Phase::BaseShift { .. } => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Phase::Release { .. } => "release",
            Phase::SwingLeg { .. } => "swing",
            Phase::Grasp { .. } => "grasp",
            Phase::BaseShift { .. } => "base_shift",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitSchedule {
    pub phases: Vec<Phase>,
    pub cycle_period: f64,
    pub cycles: usize,
    pub stride: f64,
    pub step_height: f64,
    /// Surface normal at the grasp points.
    pub up: Unit<Vector3<f64>>,
}

impl GaitSchedule {
    pub fn total_duration(&self) -> f64 {
        self.phases.iter().map(Phase::duration).sum()
    }

    pub fn swing_count(&self) -> usize {
        self.phases.iter().filter(|p| matches!(p, Phase::SwingLeg { .. })).count()
    }

    /// Checks the ordering and timing invariants.
    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: String| Err(PlanError::Invalid(m));
        for (i, p) in self.phases.iter().enumerate() {
            if !(p.duration() >= 0.0 && p.duration().is_finite()) {
                return bad(format!("phase {i} has invalid duration {}", p.duration()));
            }
            match p {
                Phase::Release { limb, .. } => {
                    let ok = matches!(self.phases.get(i + 1), Some(Phase::SwingLeg { limb: l, .. }) if l == limb);
                    if !ok {
                        return bad(format!("release in phase {i} is not followed by a swing of limb {limb}"));
                    }
                }
                Phase::SwingLeg { limb, duration, .. } => {
                    let before = i > 0 && matches!(self.phases[i - 1], Phase::Release { limb: l, .. } if l == *limb);
                    let after = matches!(self.phases.get(i + 1), Some(Phase::Grasp { limb: l, .. }) if l == limb);
                    if !before || !after {
                        return bad(format!("swing in phase {i} must sit between a release and a grasp of limb {limb}"));
                    }
                    if !(*duration > 0.0) {
                        return bad(format!("swing in phase {i} needs a positive duration"));
                    }
                }
                Phase::Grasp { limb, .. } => {
                    let ok = i > 0 && matches!(self.phases[i - 1], Phase::SwingLeg { limb: l, .. } if l == *limb);
                    if !ok {
                        return bad(format!("grasp in phase {i} does not follow a swing of limb {limb}"));
                    }
                }
                Phase::BaseShift { .. } => {}
            }
        }
        if self.cycles > 0 {
            let expected = self.cycle_period * self.cycles as f64;
            if (self.total_duration() - expected).abs() > 1e-9 * expected.max(1.0) {
                return bad(format!(
                    "phases last {} s, expected {} cycles of {} s",
                    self.total_duration(),
                    self.cycles,
                    self.cycle_period
                ));
            }
        }
        Ok(())
    }
}

/// Parameters of the periodic crawl gait.
#[derive(Debug, Clone, PartialEq)]
pub struct CrawlParams {
    pub stride: f64,
    pub step_height: f64,
    /// Release + swing + grasp time of one leg.
    pub swing_period: f64,
    /// Base displacement per shift phase.
    pub base_shift: f64,
    pub shift_duration: f64,
    pub release_height: f64,
    pub grasp_height: f64,
    pub release_fraction: f64,
    pub grasp_fraction: f64,
    pub cycles: usize,
    /// Leg order within one cycle (limb indices).
    pub order: Vec<usize>,
    pub direction: Unit<Vector3<f64>>,
    pub up: Unit<Vector3<f64>>,
}

impl Default for CrawlParams {
    fn default() -> Self {
        CrawlParams {
            stride: 0.08,
            step_height: 0.04,
            swing_period: 1.5,
            base_shift: 0.02,
            shift_duration: 1.5,
            release_height: 0.01,
            grasp_height: 0.01,
            release_fraction: 0.1,
            grasp_fraction: 0.1,
            cycles: 1,
            order: vec![2, 3, 0, 1],
            direction: Vector3::x_axis(),
            up: Vector3::z_axis(),
        }
    }
}

/// Swing of every leg in turn, each followed by a base shift.
pub fn build_crawl_schedule(p: &CrawlParams) -> Result<GaitSchedule, PlanError> {
    let positive = [
        ("stride", p.stride),
        ("step height", p.step_height),
        ("swing period", p.swing_period),
        ("shift duration", p.shift_duration),
    ];
    if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(PlanError::Invalid(format!("{name} must be positive, got {v}")));
    }
    if !(p.base_shift >= 0.0 && p.release_height >= 0.0 && p.grasp_height >= 0.0) {
        return Err(PlanError::Invalid("base shift and vertical offsets must be non-negative".into()));
    }
    let fr = p.release_fraction + p.grasp_fraction;
    if !(p.release_fraction >= 0.0 && p.grasp_fraction >= 0.0 && fr < 1.0) {
        return Err(PlanError::Invalid("release and grasp fractions must leave time to swing".into()));
    }
    if p.order.is_empty() || p.cycles == 0 {
        return Err(PlanError::Invalid("crawl needs at least one leg and one cycle".into()));
    }
    let dir = p.direction.into_inner();
    let mut phases = Vec::new();
    for _ in 0..p.cycles {
        for &limb in &p.order {
            phases.push(Phase::Release {
                limb,
                height: p.release_height,
                duration: p.release_fraction * p.swing_period,
            });
            phases.push(Phase::SwingLeg {
                limb,
                displacement: dir * p.stride,
                duration: (1.0 - fr) * p.swing_period,
            });
            phases.push(Phase::Grasp {
                limb,
                height: p.grasp_height,
                duration: p.grasp_fraction * p.swing_period,
            });
            phases.push(Phase::BaseShift {
                displacement: dir * p.base_shift,
                duration: p.shift_duration,
            });
        }
    }
    let schedule = GaitSchedule {
        phases,
        cycle_period: p.order.len() as f64 * (p.swing_period + p.shift_duration),
        cycles: p.cycles,
        stride: p.stride,
        step_height: p.step_height,
        up: p.up,
    };
    schedule.validate()?;
    Ok(schedule)
}

/// A single swing of one limb, without vertical moves, followed by a still
/// settling period.
pub fn build_single_step(
    limb: usize,
    stride: f64,
    step_height: f64,
    swing_period: f64,
    settle: f64,
    direction: Unit<Vector3<f64>>,
    up: Unit<Vector3<f64>>,
) -> Result<GaitSchedule, PlanError> {
    if !(stride >= 0.0 && step_height >= 0.0 && swing_period > 0.0 && settle >= 0.0) {
        return Err(PlanError::Invalid("single step needs non-negative sizes and a positive period".into()));
    }
    let mut phases = vec![
        Phase::Release {
            limb,
            height: 0.0,
            duration: 0.0,
        },
        Phase::SwingLeg {
            limb,
            displacement: direction.into_inner() * stride,
            duration: swing_period,
        },
        Phase::Grasp {
            limb,
            height: 0.0,
            duration: 0.0,
        },
    ];
    if settle > 0.0 {
        phases.push(Phase::BaseShift {
            displacement: Vector3::zeros(),
            duration: settle,
        });
    }
    let schedule = GaitSchedule {
        cycle_period: swing_period + settle,
        phases,
        cycles: 1,
        stride,
        step_height,
        up,
    };
    schedule.validate()?;
    Ok(schedule)
}
