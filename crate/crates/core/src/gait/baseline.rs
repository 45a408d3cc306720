use nalgebra::{DMatrix, DVector, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::lrst::{CurveSample, SwingCurve, SwingPlan};

/// Two quintic segments meeting at a via point, rest-to-rest at the ends and
/// continuous up to the fourth derivative at the via point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViaPointSpline {
    pub start: Vector3<f64>,
    pub via: Vector3<f64>,
    pub target: Vector3<f64>,
    pub t0: f64,
    pub tf: f64,
    /// Per axis: six coefficients of the first segment then six of the
    /// second, in powers of the local time of each segment.
    coefficients: [[f64; 12]; 3],
}

fn row(tau: f64, order: usize) -> [f64; 6] {
    let mut r = [0.0; 6];
    for (p, c) in r.iter_mut().enumerate() {
        if p >= order {
            let fall: f64 = (0..order).map(|k| (p - k) as f64).product();
            *c = fall * tau.powi((p - order) as i32);
        }
    }
    r
}

impl ViaPointSpline {
    pub fn new(start: Vector3<f64>, via: Vector3<f64>, target: Vector3<f64>, t0: f64, tf: f64) -> Result<Self, PlanError> {
        if !(tf > t0) {
            return Err(PlanError::Invalid(format!("empty spline window ({t0}, {tf})")));
        }
        let half = 0.5 * (tf - t0);
        let mut a = DMatrix::zeros(12, 12);
        let mut put = |r: usize, seg: usize, vals: [f64; 6], sign: f64| {
            for (k, v) in vals.iter().enumerate() {
                a[(r, seg * 6 + k)] += sign * v;
            }
        };
        put(0, 0, row(0.0, 0), 1.0);
        put(1, 0, row(0.0, 1), 1.0);
        put(2, 0, row(0.0, 2), 1.0);
        put(3, 0, row(half, 0), 1.0);
        put(4, 1, row(0.0, 0), 1.0);
        put(5, 1, row(half, 0), 1.0);
        put(6, 1, row(half, 1), 1.0);
        put(7, 1, row(half, 2), 1.0);
        for order in 1..=4 {
            put(7 + order, 0, row(half, order), 1.0);
            put(7 + order, 1, row(0.0, order), -1.0);
        }
        let lu = a.lu();
        let mut coefficients = [[0.0; 12]; 3];
        for axis in 0..3 {
            let mut b = DVector::zeros(12);
            b[0] = start[axis];
            b[3] = via[axis];
            b[4] = via[axis];
            b[5] = target[axis];
            let x = lu
                .solve(&b)
                .ok_or_else(|| PlanError::Invalid("via-point spline system is singular".into()))?;
            coefficients[axis].copy_from_slice(x.as_slice());
        }
        Ok(ViaPointSpline {
            start,
            via,
            target,
            t0,
            tf,
            coefficients,
        })
    }

    pub fn evaluate(&self, t: f64) -> Result<CurveSample, PlanError> {
        if !(t >= self.t0 && t <= self.tf) {
            return Err(PlanError::Domain {
                t,
                t0: self.t0,
                tf: self.tf,
            });
        }
        if t == self.t0 {
            return Ok(CurveSample::at_rest(self.start));
        }
        if t == self.tf {
            return Ok(CurveSample::at_rest(self.target));
        }
        let half = 0.5 * (self.tf - self.t0);
        let (seg, tau) = if t - self.t0 <= half { (0, t - self.t0) } else { (1, t - self.t0 - half) };
        let mut out = [Vector3::zeros(); 3];
        for (order, o) in out.iter_mut().enumerate() {
            let r = row(tau, order);
            for axis in 0..3 {
                let c = &self.coefficients[axis][seg * 6..seg * 6 + 6];
                o[axis] = r.iter().zip(c).map(|(a, b)| a * b).sum();
            }
        }
        Ok(CurveSample {
            position: out[0],
            velocity: out[1],
            acceleration: out[2],
        })
    }
}

/// Baseline swing: a via point `step_height` above the chord midpoint of
/// the curve endpoints (the grasp points lifted by the release/grasp offsets).
#[allow(clippy::too_many_arguments)]
pub fn baseline_swing(
    limb: usize,
    start: Vector3<f64>,
    target: Vector3<f64>,
    up: Unit<Vector3<f64>>,
    step_height: f64,
    release_height: f64,
    grasp_height: f64,
    times: (f64, f64, f64, f64),
) -> Result<SwingPlan, PlanError> {
    let a = start + up.as_ref() * release_height;
    let b = target + up.as_ref() * grasp_height;
    let via = (a + b) * 0.5 + up.as_ref() * step_height;
    let spline = ViaPointSpline::new(a, via, b, times.1, times.2)?;
    let plan = SwingPlan {
        limb,
        curve: SwingCurve::ViaPoint(spline),
        start,
        target,
        up,
        release_height,
        grasp_height,
        release_start: times.0,
        grasp_end: times.3,
    };
    plan.validate()?;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_hump_matches_closed_form() {
        // apex profile of the symmetric case is 20/3 s³ − 25/3 s⁴ + 8/3 s⁵ on the first half
        let s = ViaPointSpline::new(Vector3::zeros(), Vector3::new(0.5, 0.0, 1.0), Vector3::new(1.0, 0.0, 0.0), 0.0, 2.0)
            .unwrap();
        for k in 0..=10 {
            let u = k as f64 / 10.0;
            let z = s.evaluate(u).unwrap().position.z;
            let expected = 20.0 / 3.0 * u.powi(3) - 25.0 / 3.0 * u.powi(4) + 8.0 / 3.0 * u.powi(5);
            assert!((z - expected).abs() < 1e-12, "{u}: {z} vs {expected}");
        }
    }

    #[test]
    fn passes_through_via_with_rest_ends() {
        let s = ViaPointSpline::new(
            Vector3::new(0.1, 0.2, 0.0),
            Vector3::new(0.3, -0.1, 0.2),
            Vector3::new(0.2, 0.4, 0.1),
            1.0,
            3.0,
        )
        .unwrap();
        assert!((s.evaluate(2.0).unwrap().position - s.via).norm() < 1e-12);
        for t in [1.0 + 1e-9, 3.0 - 1e-9] {
            assert!(s.evaluate(t).unwrap().velocity.norm() < 1e-6);
        }
        // continuity of velocity and acceleration across the via point
        let a = s.evaluate(2.0 - 1e-9).unwrap();
        let b = s.evaluate(2.0 + 1e-9).unwrap();
        assert!((a.velocity - b.velocity).norm() < 1e-6);
        assert!((a.acceleration - b.acceleration).norm() < 1e-6);
    }

    #[test]
    fn apex_of_stride() {
        let plan = baseline_swing(
            0,
            Vector3::zeros(),
            Vector3::new(0.08, 0.0, 0.0),
            Vector3::z_axis(),
            0.04,
            0.0,
            0.0,
            (0.0, 0.0, 1.0, 1.0),
        )
        .unwrap();
        let apex = plan.evaluate(0.5).unwrap().position;
        assert!((apex - Vector3::new(0.04, 0.0, 0.04)).norm() < 1e-12);
    }

    #[test]
    fn coincident_endpoints_without_height_are_stationary() {
        let p = Vector3::new(0.1, 0.1, 0.1);
        let plan = baseline_swing(0, p, p, Vector3::z_axis(), 0.0, 0.0, 0.0, (0.0, 0.0, 1.0, 1.0)).unwrap();
        for k in 0..=10 {
            let s = plan.evaluate(k as f64 / 10.0).unwrap();
            assert!((s.position - p).norm() < 1e-15 && s.velocity.norm() < 1e-15);
        }
    }
}
