use nalgebra::{Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::gait::ViaPointSpline;

use super::bezier::{BezierCurve, CurveSample};

/// Rest-to-rest quintic time scaling and its first two derivatives on `[0, 1]`.
pub fn quintic_blend(s: f64) -> (f64, f64, f64) {
    let s = s.clamp(0.0, 1.0);
    let s2 = s * s;
    let s3 = s2 * s;
    (
        s3 * (10.0 - 15.0 * s + 6.0 * s2),
        30.0 * s2 * (1.0 - 2.0 * s + s2),
        60.0 * s * (1.0 - 3.0 * s + 2.0 * s2),
    )
}

/// Path followed between the release and grasp offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SwingCurve {
    Bezier(BezierCurve),
    ViaPoint(ViaPointSpline),
}

impl SwingCurve {
    pub fn window(&self) -> (f64, f64) {
        match self {
            SwingCurve::Bezier(c) => (c.t0, c.tf),
            SwingCurve::ViaPoint(c) => (c.t0, c.tf),
        }
    }

    pub fn evaluate(&self, t: f64) -> Result<CurveSample, PlanError> {
        match self {
            SwingCurve::Bezier(c) => c.evaluate(t),
            SwingCurve::ViaPoint(c) => c.evaluate(t),
        }
    }

    pub fn start(&self) -> Vector3<f64> {
        match self {
            SwingCurve::Bezier(c) => c.control_points[0],
            SwingCurve::ViaPoint(c) => c.start,
        }
    }

    pub fn end(&self) -> Vector3<f64> {
        match self {
            SwingCurve::Bezier(c) => c.control_points[7],
            SwingCurve::ViaPoint(c) => c.target,
        }
    }
}

/// One complete swing: vertical release, the swing curve, vertical grasp.
///
/// Times are absolute. The release runs over `[release_start, curve.t0]` and
/// the grasp over `[curve.tf, grasp_end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwingPlan {
    pub limb: usize,
    pub curve: SwingCurve,
    pub start: Vector3<f64>,
    pub target: Vector3<f64>,
    pub up: Unit<Vector3<f64>>,
    pub release_height: f64,
    pub grasp_height: f64,
    pub release_start: f64,
    pub grasp_end: f64,
}

impl SwingPlan {
    pub fn curve_start_point(start: &Vector3<f64>, up: &Unit<Vector3<f64>>, release_height: f64) -> Vector3<f64> {
        start + up.as_ref() * release_height
    }

    /// Checks that the curve endpoints sit on the release and grasp offsets.
    pub fn validate(&self) -> Result<(), PlanError> {
        let (t0, tf) = self.curve.window();
        let a = self.start + self.up.as_ref() * self.release_height;
        let b = self.target + self.up.as_ref() * self.grasp_height;
        if (self.curve.start() - a).norm() > 1e-12 || (self.curve.end() - b).norm() > 1e-12 {
            return Err(PlanError::Invalid("swing curve endpoints do not match release/grasp offsets".into()));
        }
        if !(self.release_start <= t0 && t0 < tf && tf <= self.grasp_end) {
            return Err(PlanError::Invalid(format!(
                "swing timing out of order: {} {} {} {}",
                self.release_start, t0, tf, self.grasp_end
            )));
        }
        Ok(())
    }

    pub fn window(&self) -> (f64, f64) {
        (self.release_start, self.grasp_end)
    }

    /// Tip reference over the whole swing.
    pub fn evaluate(&self, t: f64) -> Result<CurveSample, PlanError> {
        let (t0, tf) = self.curve.window();
        let up = self.up.as_ref();
        if t < self.release_start || t > self.grasp_end {
            return Err(PlanError::Domain {
                t,
                t0: self.release_start,
                tf: self.grasp_end,
            });
        }
        if t < t0 {
            let dur = t0 - self.release_start;
            let (q, dq, ddq) = quintic_blend((t - self.release_start) / dur);
            let h = self.release_height;
            return Ok(CurveSample {
                position: self.start + up * (h * q),
                velocity: up * (h * dq / dur),
                acceleration: up * (h * ddq / (dur * dur)),
            });
        }
        if t > tf {
            let dur = self.grasp_end - tf;
            let (q, dq, ddq) = quintic_blend((t - tf) / dur);
            let h = self.grasp_height;
            return Ok(CurveSample {
                position: self.target + up * (h * (1.0 - q)),
                velocity: -up * (h * dq / dur),
                acceleration: -up * (h * ddq / (dur * dur)),
            });
        }
        self.curve.evaluate(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blend_is_rest_to_rest() {
        assert_eq!(quintic_blend(0.0), (0.0, 0.0, 0.0));
        let (q, dq, ddq) = quintic_blend(1.0);
        assert_eq!(q, 1.0);
        assert_eq!(dq, 0.0);
        assert!(ddq.abs() < 1e-12);
        let h = 1e-6;
        for k in 1..10 {
            let s = k as f64 / 10.0;
            let fd = (quintic_blend(s + h).0 - quintic_blend(s - h).0) / (2.0 * h);
            assert!((fd - quintic_blend(s).1).abs() < 1e-8);
        }
    }

    #[test]
    fn full_swing_is_continuous() {
        let up = Vector3::z_axis();
        let start = Vector3::new(0.0, 0.0, 0.0);
        let target = Vector3::new(0.05, 0.0, 0.0);
        let curve = BezierCurve::boundary_constrained(
            start + up.as_ref() * 0.01,
            target + up.as_ref() * 0.01,
            (0.1, 0.9),
            Vector3::new(0.02, 0.0, 0.05),
            Vector3::new(0.03, 0.0, 0.05),
        )
        .unwrap();
        let plan = SwingPlan {
            limb: 0,
            curve: SwingCurve::Bezier(curve),
            start,
            target,
            up,
            release_height: 0.01,
            grasp_height: 0.01,
            release_start: 0.0,
            grasp_end: 1.0,
        };
        plan.validate().unwrap();
        for t in [0.1, 0.9] {
            let a = plan.evaluate(t - 1e-12).unwrap();
            let b = plan.evaluate(t + 1e-12).unwrap();
            assert!((a.position - b.position).norm() < 1e-9);
            assert!(a.velocity.norm() < 1e-9 && b.velocity.norm() < 1e-9);
        }
        assert_eq!(plan.evaluate(0.0).unwrap().position, start);
        assert_eq!(plan.evaluate(1.0).unwrap().position, target);
    }
}
