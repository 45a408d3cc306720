mod common;

use nalgebra::{DVector, Vector3};
use proptest::prelude::*;
use ramp_core::gait::baseline_swing;
use ramp_core::lrst::{
    objective, optimize_swing, sample_swing, score_series, BezierCurve, LrstWeights, OptimizerSettings, SwingCurve,
    SwingPlan, SwingProblem, SwingSeries,
};

fn random_curve(rng: &mut impl rand::Rng) -> BezierCurve {
    let mut p = || Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let pts: [Vector3<f64>; 8] = std::array::from_fn(|_| p());
    BezierCurve::new(pts, 0.3, 2.3)
}

#[test]
fn velocity_matches_finite_differences() {
    use rand::Rng;
    let mut rng = common::rng(4);
    let curve = random_curve(&mut rng);
    let h = 1e-7;
    for _ in 0..100 {
        let t = rng.random_range(curve.t0 + h..curve.tf - h);
        let fd = (curve.evaluate(t + h).unwrap().position - curve.evaluate(t - h).unwrap().position) / (2.0 * h);
        assert!((fd - curve.evaluate(t).unwrap().velocity).norm() < 1e-5);
        let fd_acc = (curve.evaluate(t + h).unwrap().velocity - curve.evaluate(t - h).unwrap().velocity) / (2.0 * h);
        assert!((fd_acc - curve.evaluate(t).unwrap().acceleration).norm() < 1e-4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn boundary_constrained_curves_start_and_end_at_rest(
        a3 in prop::array::uniform3(-1.0f64..1.0),
        a4 in prop::array::uniform3(-1.0f64..1.0),
        t0 in -5.0f64..5.0,
        dur in 0.1f64..10.0,
    ) {
        let start = Vector3::new(0.01, 0.2, -0.3);
        let target = Vector3::new(0.4, -0.1, 0.2);
        let c = BezierCurve::boundary_constrained(start, target, (t0, t0 + dur), Vector3::from(a3), Vector3::from(a4)).unwrap();
        let a = c.evaluate(c.t0).unwrap();
        let b = c.evaluate(c.tf).unwrap();
        prop_assert!((a.position - start).norm() <= 1e-12);
        prop_assert!((b.position - target).norm() <= 1e-12);
        prop_assert!(a.velocity.norm() <= 1e-12 && b.velocity.norm() <= 1e-12);
        prop_assert!(a.acceleration.norm() <= 1e-12 && b.acceleration.norm() <= 1e-12);
    }
}

fn problem(step: &common::PlanarStep) -> SwingProblem<'_> {
    SwingProblem {
        model: &step.model,
        state: &step.state,
        limb: step.limb,
        start: step.start,
        target: step.target,
        up: step.up,
        release_height: 0.0,
        grasp_height: 0.0,
        release_start: 0.0,
        window: (0.0, 2.0),
        grasp_end: 2.0,
    }
}

fn weights() -> LrstWeights {
    LrstWeights {
        h: 0.07,
        ..Default::default()
    }
}

#[test]
fn stationary_curve_has_no_momentum_rate() {
    let step = common::planar_step();
    let tip = ramp_core::multibody::forward_kinematics(&step.model, &step.state).unwrap().end_effectors[step.limb].position;
    let curve = BezierCurve::new([tip; 8], 0.0, 2.0);
    let plan = problem(&step).plan_with(SwingCurve::Bezier(curve));
    let v = objective(&step.model, &step.state, &plan, &weights());
    assert_eq!(v.j1, 0.0);
    // flat path scores the full height penalty
    assert!((v.j2 - 20.0 * 0.07).abs() < 1e-12);
}

#[test]
fn height_terms_vanish_on_target_profile() {
    let series = SwingSeries {
        times: vec![0.0, 1.0, 2.0],
        positions: vec![Vector3::zeros(), Vector3::new(0.0, 0.0, 0.3), Vector3::zeros()],
        angles: vec![],
        rates: vec![],
        momentum: vec![],
        momentum_rate: vec![DVector::zeros(3); 3],
    };
    let w = LrstWeights {
        h: 0.3,
        k3: 0.0,
        ..Default::default()
    };
    assert_eq!(score_series(&series, &Vector3::z_axis(), &w).j2, 0.0);
    // a profile holding h everywhere zeroes both height terms
    let flat = SwingSeries {
        positions: vec![Vector3::new(0.0, 0.0, 0.3); 3],
        ..series
    };
    let w = LrstWeights { h: 0.0, ..w };
    assert_eq!(score_series(&flat, &Vector3::z_axis(), &w).j2, 0.0);
}

#[test]
fn momentum_rate_term_matches_per_link_oracle() {
    let step = common::planar_step();
    let p = problem(&step);
    let x = DVector::from_column_slice(&[0.06, -0.22, 0.14, -0.22]);
    let curve = p.curve(&x).unwrap();
    let plan = p.plan_with(SwingCurve::Bezier(curve.clone()));
    let w = weights();
    let value = objective(&step.model, &step.state, &plan, &w);
    assert!(value.is_feasible());

    let series = sample_swing(&step.model, &step.state, step.limb, (0.0, 2.0), w.sample_count, |t| {
        curve.evaluate(t).map(|s| s.position)
    })
    .unwrap();
    let dt = 2.0 / w.sample_count as f64;
    let joints = &step.model.limbs[step.limb].joints;
    let n = series.angles.len();
    let momentum: Vec<[f64; 3]> = (0..n)
        .map(|k| {
            let prev = &series.angles[k.saturating_sub(1)];
            let next = &series.angles[(k + 1).min(n - 1)];
            let rates = if k == 0 {
                (&series.angles[1] * 4.0 - &series.angles[0] * 3.0 - &series.angles[2]) / (2.0 * dt)
            } else if k == n - 1 {
                (&series.angles[n - 1] * 3.0 - &series.angles[n - 2] * 4.0 + &series.angles[n - 3]) / (2.0 * dt)
            } else {
                (next - prev) / (2.0 * dt)
            };
            let mut s = step.state.clone();
            for (i, &j) in joints.iter().enumerate() {
                s.joint_angles[j] = series.angles[k][i];
                s.joint_rates[j] = rates[i];
            }
            let m = common::per_link_momentum(&step.model, &s, &s.base_position);
            [m[0], m[1], m[5]]
        })
        .collect();
    let mut peak: f64 = 0.0;
    for k in 1..n - 1 {
        let d: f64 = (0..3).map(|c| ((momentum[k + 1][c] - momentum[k - 1][c]) / (2.0 * dt)).powi(2)).sum();
        peak = peak.max(d.sqrt());
    }
    for (k, nb) in [(0usize, [1usize, 2usize]), (n - 1, [n - 2, n - 3])] {
        let sign = if k == 0 { 1.0 } else { -1.0 };
        let d: f64 = (0..3)
            .map(|c| (sign * (4.0 * momentum[nb[0]][c] - 3.0 * momentum[k][c] - momentum[nb[1]][c]) / (2.0 * dt)).powi(2))
            .sum();
        peak = peak.max(d.sqrt());
    }
    assert!(peak > 0.0);
    assert!((value.j1 - w.k1 * peak).abs() <= 1e-6 * value.j1, "{} vs {}", value.j1, peak);
}

fn settings() -> OptimizerSettings {
    OptimizerSettings {
        seed: 7,
        ..Default::default()
    }
}

#[test]
fn optimizer_beats_its_seeds_and_the_baseline() {
    let step = common::planar_step();
    let p = problem(&step);
    let w = weights();
    let sol = optimize_swing(&p, &w, &settings()).unwrap();
    for seed in &sol.seed_values {
        assert!(sol.value.total <= seed.total);
    }
    assert!(sol.history.windows(2).all(|h| h[1] <= h[0]));
    assert_eq!(*sol.history.last().unwrap(), sol.value.total);

    let bl = baseline_swing(step.limb, step.start, step.target, step.up, w.h, 0.0, 0.0, (0.0, 0.0, 2.0, 2.0)).unwrap();
    let bl_value = objective(&step.model, &step.state, &bl, &w);
    assert!(bl_value.is_feasible());
    assert!(sol.value.total <= bl_value.total, "{:?} vs {:?}", sol.value, bl_value);
    assert!(sol.value.j1 <= bl_value.j1, "{:?} vs {:?}", sol.value, bl_value);

    let curve = &sol.plan.curve;
    assert_eq!(curve.start(), step.start);
    assert_eq!(curve.end(), step.target);
    let (t0, tf) = curve.window();
    assert!((curve.evaluate(t0).unwrap().position - step.start).norm() <= 1e-12);
    assert!((curve.evaluate(tf).unwrap().position - step.target).norm() <= 1e-12);
}

#[test]
fn optimizer_is_deterministic() {
    let step = common::planar_step();
    let p = problem(&step);
    let a = optimize_swing(&p, &weights(), &settings()).unwrap();
    let b = optimize_swing(&p, &weights(), &settings()).unwrap();
    assert_eq!(a.plan, b.plan);
    assert_eq!(a.value, b.value);
    assert_eq!(a.history, b.history);
}

#[test]
fn height_only_objective_reaches_step_height() {
    let step = common::planar_step();
    let p = problem(&step);
    let w = LrstWeights { k1: 0.0, ..weights() };
    let sol = optimize_swing(&p, &w, &settings()).unwrap();
    let series = sample_swing(&step.model, &step.state, step.limb, (0.0, 2.0), w.sample_count, |t| {
        sol.plan.curve.evaluate(t).map(|s| s.position)
    })
    .unwrap();
    let apex = series
        .positions
        .iter()
        .map(|q| ramp_core::lrst::height_above_chord(q, &step.start, &step.target, &step.up))
        .fold(f64::MIN, f64::max);
    assert!((apex - w.h).abs() <= 0.05 * w.h, "apex {apex}");
}

#[test]
fn joint_limits_are_respected_by_the_result() {
    let mut step = common::planar_step();
    // cap the elbow so that part of the naive search space is infeasible
    let elbow = step.model.limbs[step.limb].joints[1];
    let current = step.state.joint_angles[elbow];
    step.model.links[elbow].limits = (current - 0.6, current + 0.6);
    let p = problem(&step);
    let w = weights();
    let sol = optimize_swing(&p, &w, &settings()).unwrap();
    assert!(sol.value.is_feasible());
    assert!(sol.seed_values.iter().any(|v| !v.is_feasible()) || sol.start_results.iter().all(|v| v.is_feasible()));
    let series = sample_swing(&step.model, &step.state, step.limb, (0.0, 2.0), w.sample_count, |t| {
        sol.plan.curve.evaluate(t).map(|s| s.position)
    })
    .unwrap();
    for a in &series.angles {
        for (k, &j) in step.model.limbs[step.limb].joints.iter().enumerate() {
            let (lo, hi) = step.model.links[j].limits;
            assert!(a[k] >= lo && a[k] <= hi);
        }
    }
}

#[test]
fn unreachable_swing_has_no_feasible_trajectory() {
    let mut step = common::planar_step();
    step.target = Vector3::new(0.6, -0.13, 0.0);
    let p = problem(&step);
    let err = optimize_swing(&p, &weights(), &settings()).unwrap_err();
    assert!(matches!(err, ramp_core::PlanError::NoFeasibleTrajectory));
}

#[test]
fn swing_plan_round_trips_through_json() {
    let step = common::planar_step();
    let p = problem(&step);
    let sol = optimize_swing(&p, &weights(), &settings()).unwrap();
    let text = serde_json::to_string(&sol.plan).unwrap();
    let back: SwingPlan = serde_json::from_str(&text).unwrap();
    assert_eq!(back, sol.plan);
}


