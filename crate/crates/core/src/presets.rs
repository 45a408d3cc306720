//! The robot models shipped under `configs/robots`.

use crate::model::{ModelFile, RobotModel};

pub const QUADRUPED_TOML: &str = include_str!("../../../configs/robots/quadruped.toml");
pub const DUAL_ARM_TOML: &str = include_str!("../../../configs/robots/dual_arm.toml");

/// Insect-type quadruped (legs ordered left/right front, left/right hind).
pub fn quadruped() -> RobotModel {
    ModelFile::parse(QUADRUPED_TOML)
        .and_then(|f| f.build().map_err(|e| e.to_string()))
        .expect("shipped quadruped model is valid")
}

/// Planar dual-arm robot (limb 0 left, limb 1 right).
pub fn dual_arm() -> RobotModel {
    ModelFile::parse(DUAL_ARM_TOML)
        .and_then(|f| f.build().map_err(|e| e.to_string()))
        .expect("shipped dual-arm model is valid")
}
