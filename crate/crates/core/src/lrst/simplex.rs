//! Nelder–Mead downhill simplex.

use nalgebra::DVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Stop once every vertex is within this distance of the best one.
    pub tolerance: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iterations: 500,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best value after each iteration (the first entry is the initial simplex).
    pub history: Vec<f64>,
}

fn diameter(points: &[(DVector<f64>, f64)]) -> f64 {
    let best = &points[0].0;
    points[1..].iter().map(|(p, _)| (p - best).amax()).fold(0.0, f64::max)
}

fn order(points: &mut [(DVector<f64>, f64)]) {
    // stable sort keeps earlier vertices first on ties, infinities last
    points.sort_by(|a, b| a.1.total_cmp(&b.1));
}

/// Minimises `f` from `x0` with an axis-aligned initial simplex of edge `step`.
pub fn minimize(mut f: impl FnMut(&DVector<f64>) -> f64, x0: &DVector<f64>, step: f64, opts: &SimplexOptions) -> SimplexResult {
    let n = x0.len();
    let mut points: Vec<(DVector<f64>, f64)> = Vec::with_capacity(n + 1);
    points.push((x0.clone(), f(x0)));
    for i in 0..n {
        let mut p = x0.clone();
        p[i] += step;
        let v = f(&p);
        points.push((p, v));
    }
    order(&mut points);
    let mut history = vec![points[0].1];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        if diameter(&points) < opts.tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid = points[..n].iter().fold(DVector::zeros(n), |acc, (p, _)| acc + p) / n as f64;
        let worst = points[n].clone();
        let second_worst = points[n - 1].1;
        let best = points[0].1;

        let xr = &centroid + (&centroid - &worst.0);
        let fr = f(&xr);
        if fr < best {
            let xe = &centroid + (&xr - &centroid) * 2.0;
            let fe = f(&xe);
            points[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < second_worst {
            points[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = &centroid + (&xr - &centroid) * 0.5;
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = &centroid + (&worst.0 - &centroid) * 0.5;
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                points[n] = (xc, fc);
            } else {
                let x_best = points[0].0.clone();
                for p in points.iter_mut().skip(1) {
                    let x = &x_best + (&p.0 - &x_best) * 0.5;
                    let v = f(&x);
                    *p = (x, v);
                }
            }
        }
        order(&mut points);
        history.push(points[0].1);
    }
    if !converged && diameter(&points) < opts.tolerance {
        converged = true;
    }
    let (x, value) = points.swap_remove(0);
    SimplexResult {
        x,
        value,
        iterations,
        converged,
        history,
    }
}
