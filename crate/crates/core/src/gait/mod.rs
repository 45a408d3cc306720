//! Gait sequencing and motion-plan assembly.

mod baseline;
mod plan;
mod schedule;

pub use baseline::{baseline_swing, ViaPointSpline};
pub use plan::{
    assemble_partial, assemble_plan, MotionPlan, PhaseSpan, PlanFailure, PlanMode, PlanPoint, PlanSettings, SwingRecord,
};
pub use schedule::{build_crawl_schedule, build_single_step, CrawlParams, GaitSchedule, Phase};
