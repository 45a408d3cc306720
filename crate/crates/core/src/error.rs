use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("model/state mismatch: {0}")]
    Incompatible(String),
    #[error("invalid robot model: {0}")]
    Invalid(String),
    #[error("limb index {index} out of range ({count} limbs)")]
    LimbIndex { index: usize, count: usize },
    #[error("failed to read robot model {path}: {message}")]
    Io { path: String, message: String },
    #[error("failed to parse robot model {path}: {message}")]
    Parse { path: String, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IkError {
    /// `sigma_min` is the smallest singular value of the limb Jacobian at
    /// the closest configuration found (zero when the target is beyond full
    /// extension).
    #[error("target unreachable for limb {limb} (residual {residual:.3e} m, sigma_min {sigma_min:.3e})")]
    Unreachable { limb: usize, residual: f64, sigma_min: f64 },
    #[error("joint {joint} at {angle:.4} rad violates limits [{min:.4}, {max:.4}]")]
    JointLimit {
        joint: usize,
        angle: f64,
        min: f64,
        max: f64,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Failures while assembling or distributing a motion plan.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("singularity at t = {time:.4} s: {what} smallest singular value {sigma:.3e} below {threshold:.1e}")]
    Singularity {
        time: f64,
        what: String,
        sigma: f64,
        threshold: f64,
    },
    #[error("inverse kinematics failed at t = {time:.4} s: {source}")]
    Ik { time: f64, source: IkError },
    #[error("no feasible swing trajectory: every optimizer start violated the constraints")]
    NoFeasibleTrajectory,
    #[error("time {t} outside curve window [{t0}, {tf}]")]
    Domain { t: f64, t0: f64, tf: f64 },
    #[error("phase {phase}: {source}")]
    Phase {
        phase: usize,
        #[source]
        source: Box<PlanError>,
    },
    #[error("invalid plan request: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl PlanError {
    /// Unwraps phase annotations down to the underlying cause.
    pub fn root(&self) -> &PlanError {
        match self {
            PlanError::Phase { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_singularity(&self) -> bool {
        matches!(self.root(), PlanError::Singularity { .. })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("non-finite state at t = {time:.6} s ({detail})")]
    NumericalBlowup { time: f64, detail: String },
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
