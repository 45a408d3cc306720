use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::ModelError;
use crate::linalg::skew;
use crate::model::{BaseMode, RobotModel};
use crate::state::SystemState;

use super::kinematics::Kinematics;

/// Mass properties and COM Jacobians of one body at the current configuration.
#[derive(Debug, Clone)]
pub struct BodyJacobian {
    /// `None` for the base.
    pub link: Option<usize>,
    pub mass: f64,
    /// Inertia about the COM in world axes.
    pub inertia: Matrix3<f64>,
    pub com: Vector3<f64>,
    pub jt: DMatrix<f64>,
    pub jr: DMatrix<f64>,
}

/// COM Jacobians of the base followed by every link.
pub fn body_jacobians(model: &RobotModel, kin: &Kinematics) -> Vec<BodyJacobian> {
    std::iter::once(None)
        .chain((0..model.dof()).map(Some))
        .map(|link| {
            let body = match link {
                None => &model.base,
                Some(i) => &model.links[i].body,
            };
            let r = kin.rotation(link);
            let com = *kin.com(link);
            let (jt, jr) = kin.point_jacobian(model, link, &com);
            BodyJacobian {
                link,
                mass: body.mass,
                inertia: r * body.inertia * r.transpose(),
                com,
                jt,
                jr,
            }
        })
        .collect()
}

/// Spatial momentum map `[P; L_about]` (6 × nv) for angular momentum taken about `about`.
pub fn momentum_matrix(bodies: &[BodyJacobian], about: &Vector3<f64>) -> DMatrix<f64> {
    let nv = bodies[0].jt.ncols();
    let mut h = DMatrix::zeros(6, nv);
    for b in bodies {
        let lin = &b.jt * b.mass;
        let ang = b.inertia * &b.jr + skew(&(b.com - about)) * &lin;
        let mut top = h.rows_mut(0, 3);
        top += &lin;
        let mut bottom = h.rows_mut(3, 3);
        bottom += &ang;
    }
    h
}

/// Keeps the momentum rows that live in the model's motion space:
/// all six spatially, `[Px, Py, Lz]` in planar mode.
pub fn reduce_rows(mode: BaseMode, m: &DMatrix<f64>) -> DMatrix<f64> {
    match mode {
        BaseMode::Spatial => m.clone(),
        BaseMode::Planar => m.select_rows(&[0, 1, 5]),
    }
}

pub fn reduce_vector(mode: BaseMode, v: &DVector<f64>) -> DVector<f64> {
    match mode {
        BaseMode::Spatial => v.clone(),
        BaseMode::Planar => v.select_rows(&[0, 1, 5]),
    }
}

/// Generalized mass matrix (nv × nv).
pub fn mass_matrix(bodies: &[BodyJacobian]) -> DMatrix<f64> {
    let nv = bodies[0].jt.ncols();
    let mut m = DMatrix::zeros(nv, nv);
    for b in bodies {
        m += b.jt.transpose() * &b.jt * b.mass + b.jr.transpose() * (b.inertia * &b.jr);
    }
    m
}

/// Base inertia and per-limb base–manipulator coupling inertia.
#[derive(Debug, Clone, PartialEq)]
pub struct InertiaSet {
    pub h_b: DMatrix<f64>,
    pub h_bm: Vec<DMatrix<f64>>,
}

impl InertiaSet {
    pub fn from_momentum_matrix(model: &RobotModel, h: &DMatrix<f64>) -> Self {
        let d = model.base_dof();
        let h_b = h.columns(0, d).into_owned();
        let h_bm = model
            .limbs
            .iter()
            .map(|limb| {
                let cols: Vec<usize> = limb.joints.iter().map(|j| d + j).collect();
                h.select_columns(&cols)
            })
            .collect();
        InertiaSet { h_b, h_bm }
    }
}

/// Momentum map about the base origin, reduced to the model's motion space.
pub fn base_momentum_matrix(model: &RobotModel, kin: &Kinematics) -> DMatrix<f64> {
    let bodies = body_jacobians(model, kin);
    reduce_rows(model.mode, &momentum_matrix(&bodies, &kin.base_position))
}

pub fn inertia_matrices(model: &RobotModel, state: &SystemState) -> Result<InertiaSet, ModelError> {
    let kin = Kinematics::compute(model, state)?;
    Ok(InertiaSet::from_momentum_matrix(model, &base_momentum_matrix(model, &kin)))
}

/// Momentum split into base, supporting-limb and swinging-limb contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState {
    pub total: DVector<f64>,
    pub base_part: DVector<f64>,
    pub support_part: DVector<f64>,
    pub swing_part: DVector<f64>,
}

impl MomentumState {
    pub fn from_inertia(model: &RobotModel, set: &InertiaSet, state: &SystemState, swing_set: &[usize]) -> Self {
        let base_part = &set.h_b * state.base_twist(model.mode);
        let dim = base_part.len();
        let mut support_part = DVector::zeros(dim);
        let mut swing_part = DVector::zeros(dim);
        for (l, limb) in model.limbs.iter().enumerate() {
            let rates = state.joint_rates.select_rows(&limb.joints);
            let part = &set.h_bm[l] * rates;
            if swing_set.contains(&l) {
                swing_part += part;
            } else {
                support_part += part;
            }
        }
        let total = &base_part + &support_part + &swing_part;
        MomentumState {
            total,
            base_part,
            support_part,
            swing_part,
        }
    }
}

pub fn system_momentum(
    model: &RobotModel,
    state: &SystemState,
    swing_set: &[usize],
) -> Result<MomentumState, ModelError> {
    if let Some(&bad) = swing_set.iter().find(|&&l| l >= model.limbs.len()) {
        return Err(ModelError::LimbIndex {
            index: bad,
            count: model.limbs.len(),
        });
    }
    let set = inertia_matrices(model, state)?;
    Ok(MomentumState::from_inertia(model, &set, state, swing_set))
}

/// Full spatial momentum `[P; L]` with the angular part about a fixed point.
pub fn momentum_about(model: &RobotModel, state: &SystemState, point: &Vector3<f64>) -> Result<DVector<f64>, ModelError> {
    let kin = Kinematics::compute(model, state)?;
    let bodies = body_jacobians(model, &kin);
    Ok(momentum_matrix(&bodies, point) * state.velocity(model.mode))
}

/// Kinetic energy `½ νᵀ M ν`.
pub fn kinetic_energy(model: &RobotModel, state: &SystemState) -> Result<f64, ModelError> {
    let kin = Kinematics::compute(model, state)?;
    let m = mass_matrix(&body_jacobians(model, &kin));
    let nu = state.velocity(model.mode);
    Ok(0.5 * nu.dot(&(m * &nu)))
}

/// System centre of mass.
pub fn center_of_mass(model: &RobotModel, kin: &Kinematics) -> Vector3<f64> {
    let mut acc = kin.base_com * model.base.mass;
    for (l, f) in model.links.iter().zip(&kin.links) {
        acc += f.com * l.body.mass;
    }
    acc / model.total_mass()
}
