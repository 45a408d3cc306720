//! Robot description: a floating base carrying limbs made of revolute joints.
//!
//! Every non-base link owns exactly one revolute joint connecting it to its
//! parent, so joint indices and link indices coincide.

use std::path::Path;

use nalgebra::{Matrix3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Base degrees of freedom: full 6-DOF floating base or 3-DOF planar (x, y, yaw).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseMode {
    Spatial,
    Planar,
}

impl BaseMode {
    /// Dimension of the base twist, and of the momentum vector.
    pub fn base_dof(self) -> usize {
        match self {
            BaseMode::Spatial => 6,
            BaseMode::Planar => 3,
        }
    }
}

/// End-effector task used for inverse kinematics and limb Jacobians.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Tip position only (2 rows planar, 3 rows spatial).
    Position,
    /// Tip position and orientation (3 rows planar, 6 rows spatial).
    Pose,
}

impl TaskKind {
    pub fn dim(self, mode: BaseMode) -> usize {
        match (mode, self) {
            (BaseMode::Planar, TaskKind::Position) => 2,
            (BaseMode::Planar, TaskKind::Pose) => 3,
            (BaseMode::Spatial, TaskKind::Position) => 3,
            (BaseMode::Spatial, TaskKind::Pose) => 6,
        }
    }
}

/// Mass properties of a rigid body, expressed in its own frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BodySpec {
    pub mass: f64,
    /// Inertia tensor about the centre of mass.
    pub inertia: Matrix3<f64>,
    pub com: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub name: String,
    /// `None` when attached directly to the base.
    pub parent: Option<usize>,
    /// Joint origin in the parent frame.
    pub offset: Vector3<f64>,
    /// Joint frame orientation relative to the parent frame at zero angle.
    pub mount: UnitQuaternion<f64>,
    /// Joint axis in the link frame.
    pub axis: Unit<Vector3<f64>>,
    pub body: BodySpec,
    pub limits: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Limb {
    pub name: String,
    /// Joint (link) indices from base to tip.
    pub joints: Vec<usize>,
    /// Tip point in the frame of the last link.
    pub tip: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub name: String,
    pub mode: BaseMode,
    pub base: BodySpec,
    pub links: Vec<LinkSpec>,
    pub limbs: Vec<Limb>,
    ancestors: Vec<Vec<usize>>,
    limb_of: Vec<usize>,
}

impl RobotModel {
    /// Builds and validates a model.
    pub fn new(
        name: impl Into<String>,
        mode: BaseMode,
        base: BodySpec,
        links: Vec<LinkSpec>,
        limbs: Vec<Limb>,
    ) -> Result<Self, ModelError> {
        let mut model = RobotModel {
            name: name.into(),
            mode,
            base,
            links,
            limbs,
            ancestors: Vec::new(),
            limb_of: Vec::new(),
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&mut self) -> Result<(), ModelError> {
        let invalid = |m: String| Err(ModelError::Invalid(m));
        check_body("base", &self.base)?;
        let n = self.links.len();
        let mut ancestors = Vec::with_capacity(n);
        for (i, link) in self.links.iter().enumerate() {
            check_body(&link.name, &link.body)?;
            // parents must precede children, which also rules out cycles
            let mut chain = match link.parent {
                None => Vec::new(),
                Some(p) if p < i => {
                    let c: &Vec<usize> = &ancestors[p];
                    let mut c = c.clone();
                    c.push(p);
                    c
                }
                Some(p) => return invalid(format!("link {i} has parent {p} that does not precede it")),
            };
            chain.shrink_to_fit();
            ancestors.push(chain);
            let (lo, hi) = link.limits;
            if !(lo < hi) {
                return invalid(format!("joint {i} limits must satisfy min < max"));
            }
            if self.mode == BaseMode::Planar {
                let world_axis = link.mount * link.axis.into_inner();
                if (world_axis - Vector3::z()).norm() > 1e-12 || link.offset.z.abs() > 1e-12 {
                    return invalid(format!("planar joint {i} must rotate about z within the xy plane"));
                }
            }
        }
        let mut limb_of = vec![usize::MAX; n];
        for (l, limb) in self.limbs.iter().enumerate() {
            if limb.joints.is_empty() {
                return invalid(format!("limb {l} has no joints"));
            }
            for (k, &j) in limb.joints.iter().enumerate() {
                if j >= n {
                    return invalid(format!("limb {l} references missing joint {j}"));
                }
                if limb_of[j] != usize::MAX {
                    return invalid(format!("joint {j} belongs to more than one limb"));
                }
                limb_of[j] = l;
                let expected = if k == 0 { None } else { Some(limb.joints[k - 1]) };
                if self.links[j].parent != expected {
                    return invalid(format!("limb {l} is not a serial chain from the base"));
                }
            }
        }
        if let Some(j) = limb_of.iter().position(|&l| l == usize::MAX) {
            return invalid(format!("joint {j} is not part of any limb"));
        }
        self.ancestors = ancestors;
        self.limb_of = limb_of;
        Ok(())
    }

    pub fn dof(&self) -> usize {
        self.links.len()
    }

    /// Size of the generalized velocity: base twist plus joint rates.
    pub fn nv(&self) -> usize {
        self.mode.base_dof() + self.links.len()
    }

    pub fn base_dof(&self) -> usize {
        self.mode.base_dof()
    }

    /// Strict ancestors of `link`, root first.
    pub fn ancestors(&self, link: usize) -> &[usize] {
        &self.ancestors[link]
    }

    pub fn limb_of(&self, joint: usize) -> usize {
        self.limb_of[joint]
    }

    pub fn limb(&self, index: usize) -> Result<&Limb, ModelError> {
        self.limbs.get(index).ok_or(ModelError::LimbIndex {
            index,
            count: self.limbs.len(),
        })
    }

    pub fn limb_index(&self, name: &str) -> Option<usize> {
        self.limbs.iter().position(|l| l.name == name)
    }

    pub fn total_mass(&self) -> f64 {
        self.base.mass + self.links.iter().map(|l| l.body.mass).sum::<f64>()
    }

    pub fn min_link_mass(&self) -> f64 {
        self.links
            .iter()
            .map(|l| l.body.mass)
            .fold(self.base.mass, f64::min)
    }

    /// Distance from the first joint of a limb to its tip when fully stretched.
    pub fn limb_reach(&self, limb: usize) -> f64 {
        let limb = &self.limbs[limb];
        let inner: f64 = limb.joints[1..].iter().map(|&j| self.links[j].offset.norm()).sum();
        inner + limb.tip.norm()
    }
}

fn check_body(name: &str, body: &BodySpec) -> Result<(), ModelError> {
    if !(body.mass > 0.0) {
        return Err(ModelError::Invalid(format!("{name}: mass must be positive")));
    }
    let i = &body.inertia;
    if (i - i.transpose()).abs().max() > 1e-12 * i.abs().max().max(1.0) {
        return Err(ModelError::Invalid(format!("{name}: inertia must be symmetric")));
    }
    if i.cholesky().is_none() {
        return Err(ModelError::Invalid(format!("{name}: inertia must be positive definite")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

/// On-disk robot description. Lengths in mm, masses in g, inertias in kg·m²,
/// joint limits in degrees; everything is converted to SI by [`ModelFile::build`].
///
/// Each link of the `segment` table extends along its local x axis; the next
/// joint sits at the far end and the centre of mass at the midpoint. The same
/// segment list is instantiated for every `limb`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub name: String,
    #[serde(default)]
    pub planar: bool,
    pub base: BaseEntry,
    pub segment: Vec<SegmentEntry>,
    pub limb: Vec<LimbEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseEntry {
    pub size_mm: Vec<f64>,
    pub mass_g: f64,
    /// Principal inertias `[Ixx, Iyy, Izz]`, or `[Izz]` for planar robots.
    pub inertia: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentEntry {
    pub name: String,
    /// First entry is the link length along its local x axis.
    pub size_mm: Vec<f64>,
    pub mass_g: f64,
    pub inertia: Vec<f64>,
    pub axis: [f64; 3],
    pub limit_deg: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimbEntry {
    pub name: String,
    pub mount_mm: [f64; 3],
    #[serde(default)]
    pub mount_yaw_deg: f64,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text).map_err(|message| ModelError::Parse {
            path: path.display().to_string(),
            message,
        })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("model file serializes")
    }

    pub fn build(&self) -> Result<RobotModel, ModelError> {
        let mode = if self.planar { BaseMode::Planar } else { BaseMode::Spatial };
        let base = BodySpec {
            mass: self.base.mass_g * 1e-3,
            inertia: principal_inertia(&self.base.inertia, "base")?,
            com: Vector3::zeros(),
        };
        if self.segment.is_empty() {
            return Err(ModelError::Invalid("model needs at least one segment".into()));
        }
        let mut links = Vec::new();
        let mut limbs = Vec::new();
        for limb in &self.limb {
            let mut joints = Vec::new();
            let mut prev_len = 0.0;
            for (k, seg) in self.segment.iter().enumerate() {
                let length = *seg
                    .size_mm
                    .first()
                    .ok_or_else(|| ModelError::Invalid(format!("segment {} needs a size", seg.name)))?
                    * 1e-3;
                let axis = Vector3::from(seg.axis);
                if axis.norm() < 1e-12 {
                    return Err(ModelError::Invalid(format!("segment {} has a zero axis", seg.name)));
                }
                let (parent, offset, mount) = if k == 0 {
                    let m = limb.mount_mm;
                    (
                        None,
                        Vector3::new(m[0], m[1], m[2]) * 1e-3,
                        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), limb.mount_yaw_deg.to_radians()),
                    )
                } else {
                    (
                        Some(*joints.last().unwrap()),
                        Vector3::new(prev_len, 0.0, 0.0),
                        UnitQuaternion::identity(),
                    )
                };
                let index = links.len();
                links.push(LinkSpec {
                    name: format!("{}.{}", limb.name, seg.name),
                    parent,
                    offset,
                    mount,
                    axis: Unit::new_normalize(axis),
                    body: BodySpec {
                        mass: seg.mass_g * 1e-3,
                        inertia: principal_inertia(&seg.inertia, &seg.name)?,
                        com: Vector3::new(0.5 * length, 0.0, 0.0),
                    },
                    limits: (seg.limit_deg[0].to_radians(), seg.limit_deg[1].to_radians()),
                });
                joints.push(index);
                prev_len = length;
            }
            limbs.push(Limb {
                name: limb.name.clone(),
                joints,
                tip: Vector3::new(prev_len, 0.0, 0.0),
            });
        }
        RobotModel::new(self.name.clone(), mode, base, links, limbs)
    }
}

fn principal_inertia(values: &[f64], what: &str) -> Result<Matrix3<f64>, ModelError> {
    match values {
        [izz] => Ok(Matrix3::from_diagonal_element(*izz)),
        [ixx, iyy, izz] => Ok(Matrix3::from_diagonal(&Vector3::new(*ixx, *iyy, *izz))),
        _ => Err(ModelError::Invalid(format!(
            "{what}: inertia needs 1 (planar Izz) or 3 principal values"
        ))),
    }
}

pub fn load_model(path: &Path) -> Result<RobotModel, ModelError> {
    ModelFile::load(path)?.build()
}
