//! Low-reaction swing trajectories.
//!
//! A swing is a degree-7 Bezier curve with rest-to-rest boundaries, so only
//! the two middle control points are free. They are chosen by a multi-start
//! simplex search minimising the peak rate of the swing limb's momentum plus
//! penalties on the step height.

mod bezier;
mod objective;
mod optimize;
mod simplex;
mod swing;

pub use bezier::{BezierCurve, CurveSample, DEGREE};
pub use objective::{
    grid_derivative, height_above_chord, limb_coupling, objective, sample_swing, score_series, LrstWeights,
    ObjectiveValue, SwingSeries,
};
pub use optimize::{optimize_swing, LrstSolution, OptimizerSettings, SwingProblem};
pub use simplex::{minimize, SimplexOptions, SimplexResult};
pub use swing::{quintic_blend, SwingCurve, SwingPlan};
