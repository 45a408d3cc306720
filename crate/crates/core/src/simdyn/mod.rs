//! Free-floating forward dynamics with compliant, detachable grippers and PD
//! joint tracking of a motion plan.

mod contact;
mod control;
mod dynamics;
mod run;

pub use contact::{contact_force, contact_moment, detachment_check, tensile_force, ContactParams, ContactPoint, Hold};
pub use control::{expand_joint_values, pd_torques, PdGains};
pub use dynamics::{bias_forces, contact_wrenches, forward_dynamics, step, ContactWrench};
pub use run::{
    max_stable_timestep, run_scenario, ContactChange, ContactEvent, Detachment, Goal, SimConfig, SimLog, SimSample,
    SingularityEvent, Termination,
};
