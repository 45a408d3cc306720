//! Small linear-algebra helpers shared by the planner and the simulator.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

/// Damping used for well-conditioned pseudoinverses.
pub const DAMPING: f64 = 1e-6;
/// Damping used once the smallest singular value falls below [`ESCALATE_BELOW`].
pub const DAMPING_NEAR_SINGULAR: f64 = 1e-3;
pub const ESCALATE_BELOW: f64 = 1e-4;

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Damped least-squares pseudoinverse together with the conditioning it saw.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    pub matrix: DMatrix<f64>,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub damping: f64,
}

/// `Jᵀ(JJᵀ + λ²I)⁻¹` computed through the SVD.
pub fn damped_pinv(j: &DMatrix<f64>) -> PseudoInverse {
    let (m, n) = j.shape();
    if m == 0 || n == 0 {
        return PseudoInverse {
            matrix: DMatrix::zeros(n, m),
            sigma_min: 0.0,
            sigma_max: 0.0,
            damping: DAMPING,
        };
    }
    let svd = j.clone().svd(true, true);
    let sigma = &svd.singular_values;
    let sigma_min = sigma.min();
    let sigma_max = sigma.max();
    let damping = if sigma_min < ESCALATE_BELOW {
        DAMPING_NEAR_SINGULAR
    } else {
        DAMPING
    };
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let lambda2 = damping * damping;
    let gains = sigma.map(|s| s / (s * s + lambda2));
    let matrix = v_t.transpose() * DMatrix::from_diagonal(&gains) * u.transpose();
    PseudoInverse {
        matrix,
        sigma_min,
        sigma_max,
        damping,
    }
}

/// Smallest singular value of a (possibly non-square) matrix.
pub fn sigma_min(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().min()
}

/// Solves `A x = b`, switching to damped least squares when `A` is badly
/// conditioned relative to its own scale.
pub fn robust_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let sv = a.clone().singular_values();
    if sv.min() > 1e-9 * sv.max() {
        if let Some(x) = a.clone().lu().solve(b) {
            return x;
        }
    }
    damped_pinv(a).matrix * b
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    if a > -PI && a <= PI {
        return a;
    }
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_is_generalized_inverse_away_from_singularity() {
        let j = DMatrix::from_row_slice(2, 3, &[0.3, -0.1, 0.05, 0.2, 0.4, -0.25]);
        let p = damped_pinv(&j);
        assert_eq!(p.damping, DAMPING);
        let back = &j * &p.matrix * &j;
        assert!((back - &j).abs().max() < 1e-8);
    }

    #[test]
    fn pinv_escalates_damping_near_singularity() {
        let j = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-6]);
        let p = damped_pinv(&j);
        assert_eq!(p.damping, DAMPING_NEAR_SINGULAR);
        assert!(p.matrix.norm() < 1e4);
    }

    #[test]
    fn wrap() {
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }
}
