//! Reaction-aware motion planning for multi-legged robots in microgravity.
//!
//! The crate is organised around the planning pipeline:
//!
//! * [`multibody`] – kinematic-tree model, forward/inverse kinematics,
//!   Jacobians, inertia matrices and system momentum.
//! * [`lrst`] – low-reaction swing trajectories: degree-7 Bezier curves whose
//!   two interior control points are optimised against momentum rate and
//!   step height.
//! * [`distribution`] – whole-body swing momentum distribution under
//!   zero-velocity support constraints.
//! * [`gait`] – crawl-gait and single-step sequencing into a [`gait::MotionPlan`].
//! * [`simdyn`] – free-floating forward dynamics with compliant, detachable
//!   grippers and PD joint tracking.
//! * [`scenario`] – scenario configuration, runs, comparisons and result files.

pub mod distribution;
pub mod error;
pub mod gait;
pub mod linalg;
pub mod lrst;
pub mod model;
pub mod multibody;
pub mod presets;
pub mod scenario;
pub mod simdyn;
pub mod state;

pub use error::{IkError, ModelError, PlanError, SimError};
pub use model::{BaseMode, RobotModel, TaskKind};
pub use state::SystemState;
