//! Serial-chain robot model: forward kinematics, geometric Jacobian,
//! tolerance-aware pose residuals, and robot-definition files.
//!
//! Chains use the modified (Craig) Denavit-Hartenberg convention. Joint `i`
//! is reached through `RotX(alpha) * TransX(a)` and then moves by
//! `RotZ(q + theta_offset) * TransZ(d)`. The tool frame follows the last joint
//! through a fixed transform.

mod chain;
mod definition;
mod pose;

use std::path::PathBuf;

use thiserror::Error;

pub use chain::{DhJoint, JointConfig, KinematicChain};
pub use definition::{load_chain, parse_chain, preset, to_definition_json, PRESET_NAMES};
pub use pose::{exp_map, log_map, pose_error, raw_pose_error, Pose, ToleranceSpec};

pub(crate) use chain::max_abs_diff;

#[derive(Debug, Error)]
pub enum KinematicsError {
    #[error("expected {expected} joint values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("cannot read robot definition {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed robot definition: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

/// Forward kinematics as a free function.
pub fn forward_kinematics(chain: &KinematicChain, q: &[f64]) -> Result<Pose, KinematicsError> {
    chain.forward_kinematics(q)
}

/// Geometric Jacobian as a free function.
pub fn jacobian(
    chain: &KinematicChain,
    q: &[f64],
) -> Result<nalgebra::Matrix6xX<f64>, KinematicsError> {
    chain.jacobian(q)
}
