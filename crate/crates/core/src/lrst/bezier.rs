use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::PlanError;

pub const DEGREE: usize = 7;

/// Position, velocity and acceleration of a trajectory at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
}

impl CurveSample {
    pub fn at_rest(position: Vector3<f64>) -> Self {
        CurveSample {
            position,
            velocity: Vector3::zeros(),
            acceleration: Vector3::zeros(),
        }
    }
}

/// Degree-7 Bezier curve over the time window `[t0, tf]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BezierCurve {
    pub control_points: [Vector3<f64>; DEGREE + 1],
    pub t0: f64,
    pub tf: f64,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Bernstein polynomial `B_{i,n}(s)`; exactly 0 or 1 at the interval ends.
fn bernstein(n: usize, i: usize, s: f64) -> f64 {
    binomial(n, i) * s.powi(i as i32) * (1.0 - s).powi((n - i) as i32)
}

impl BezierCurve {
    pub fn new(control_points: [Vector3<f64>; DEGREE + 1], t0: f64, tf: f64) -> Self {
        BezierCurve { control_points, t0, tf }
    }

    pub fn duration(&self) -> f64 {
        self.tf - self.t0
    }

    /// Rest-to-rest curve: `a0 = a1 = a2 = start`, `a5 = a6 = a7 = target`,
    /// so velocity and acceleration vanish at both ends; `a3`, `a4` are free.
    pub fn boundary_constrained(
        start: Vector3<f64>,
        target: Vector3<f64>,
        window: (f64, f64),
        a3: Vector3<f64>,
        a4: Vector3<f64>,
    ) -> Result<Self, PlanError> {
        if !(window.1 > window.0) {
            return Err(PlanError::Invalid(format!("empty curve window {window:?}")));
        }
        Ok(BezierCurve::new(
            [start, start, start, a3, a4, target, target, target],
            window.0,
            window.1,
        ))
    }

    /// Bernstein-basis evaluation with analytic derivatives.
    pub fn evaluate(&self, t: f64) -> Result<CurveSample, PlanError> {
        if !(t >= self.t0 && t <= self.tf) {
            return Err(PlanError::Domain {
                t,
                t0: self.t0,
                tf: self.tf,
            });
        }
        let dur = self.duration();
        let s = (t - self.t0) / dur;
        let a = &self.control_points;
        let n = DEGREE;
        let mut position = Vector3::zeros();
        for (i, p) in a.iter().enumerate() {
            position += p * bernstein(n, i, s);
        }
        let mut velocity = Vector3::zeros();
        for i in 0..n {
            velocity += (a[i + 1] - a[i]) * bernstein(n - 1, i, s);
        }
        velocity *= n as f64 / dur;
        let mut acceleration = Vector3::zeros();
        for i in 0..n - 1 {
            acceleration += (a[i + 2] - a[i + 1] * 2.0 + a[i]) * bernstein(n - 2, i, s);
        }
        acceleration *= (n * (n - 1)) as f64 / (dur * dur);
        Ok(CurveSample {
            position,
            velocity,
            acceleration,
        })
    }
}
