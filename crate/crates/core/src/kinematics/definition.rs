//! JSON robot-definition files.
//!
//! ```json
//! {
//!   "name": "planar3r",
//!   "dof": 3,
//!   "joints": [{"a": 0.0, "alpha": 0.0, "d": 0.0, "theta_offset": 0.0,
//!               "pos_lower": -3.14, "pos_upper": 3.14, "vel_max": 1.0}],
//!   "tool_transform": {"position": [1, 0, 0], "quaternion": [1, 0, 0, 0]},
//!   "tolerance": {"lower": [0, 0, 0, 0, 0, "-inf"], "upper": [0, 0, 0, 0, 0, "inf"]}
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DhJoint, KinematicChain, KinematicsError, Pose, ToleranceSpec};

pub const PRESET_NAMES: [&str; 4] = ["planar3r", "iiwa7", "panda", "panda_angled_tool"];

const PLANAR3R: &str = include_str!("../../robots/planar3r.json");
const IIWA7: &str = include_str!("../../robots/iiwa7.json");
const PANDA: &str = include_str!("../../robots/panda.json");
const PANDA_ANGLED: &str = include_str!("../../robots/panda_angled_tool.json");

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    name: String,
    dof: usize,
    joints: Vec<JointEntry>,
    #[serde(default)]
    tool_transform: Option<ToolEntry>,
    #[serde(default)]
    tolerance: Option<ToleranceEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointEntry {
    a: f64,
    alpha: f64,
    d: f64,
    #[serde(default)]
    theta_offset: f64,
    pos_lower: f64,
    pos_upper: f64,
    vel_max: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToolEntry {
    position: [f64; 3],
    quaternion: [f64; 4],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToleranceEntry {
    lower: [Bound; 6],
    upper: [Bound; 6],
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum Bound {
    Value(f64),
    Named(Infinity),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
enum Infinity {
    #[serde(rename = "inf")]
    Pos,
    #[serde(rename = "-inf")]
    Neg,
}

impl Bound {
    fn value(self) -> f64 {
        match self {
            Bound::Value(v) => v,
            Bound::Named(Infinity::Pos) => f64::INFINITY,
            Bound::Named(Infinity::Neg) => f64::NEG_INFINITY,
        }
    }

    fn from_value(v: f64) -> Self {
        if v == f64::INFINITY {
            Bound::Named(Infinity::Pos)
        } else if v == f64::NEG_INFINITY {
            Bound::Named(Infinity::Neg)
        } else {
            Bound::Value(v)
        }
    }
}

/// Parses and validates a robot definition from JSON text.
pub fn parse_chain(text: &str) -> Result<KinematicChain, KinematicsError> {
    let file: ChainFile = serde_json::from_str(text)?;
    if file.dof != file.joints.len() {
        return Err(KinematicsError::InvalidChain(format!(
            "dof is {} but {} joints are listed",
            file.dof,
            file.joints.len()
        )));
    }
    let joints = file
        .joints
        .iter()
        .map(|j| DhJoint {
            a: j.a,
            alpha: j.alpha,
            d: j.d,
            theta_offset: j.theta_offset,
            pos_lower: j.pos_lower,
            pos_upper: j.pos_upper,
            vel_max: j.vel_max,
        })
        .collect();
    let tool = match &file.tool_transform {
        Some(t) => {
            let [w, x, y, z] = t.quaternion;
            let norm = (w * w + x * x + y * y + z * z).sqrt();
            if !(norm > 1e-9 && norm.is_finite()) {
                return Err(KinematicsError::InvalidChain(
                    "tool quaternion must be non-zero".into(),
                ));
            }
            Pose::from_parts(t.position, t.quaternion)
        }
        None => Pose::identity(),
    };
    let tolerance = match &file.tolerance {
        Some(t) => ToleranceSpec {
            lower: t.lower.map(Bound::value),
            upper: t.upper.map(Bound::value),
        },
        None => ToleranceSpec::exact(),
    };
    KinematicChain::new(file.name, joints, tool, tolerance)
}

/// Loads and validates a robot definition file.
pub fn load_chain(path: impl AsRef<Path>) -> Result<KinematicChain, KinematicsError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| KinematicsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_chain(&text)
}

/// One of the robot definitions shipped with the crate.
pub fn preset(name: &str) -> Result<KinematicChain, KinematicsError> {
    let text = match name {
        "planar3r" => PLANAR3R,
        "iiwa7" => IIWA7,
        "panda" => PANDA,
        "panda_angled_tool" => PANDA_ANGLED,
        other => return Err(KinematicsError::UnknownPreset(other.to_string())),
    };
    parse_chain(text)
}

/// Serializes a chain back into the definition format.
pub fn to_definition_json(chain: &KinematicChain) -> String {
    let tool = chain.tool_transform();
    let tol = chain.tolerance();
    let file = ChainFile {
        name: chain.name().to_string(),
        dof: chain.dof(),
        joints: chain
            .joints()
            .iter()
            .map(|j| JointEntry {
                a: j.a,
                alpha: j.alpha,
                d: j.d,
                theta_offset: j.theta_offset,
                pos_lower: j.pos_lower,
                pos_upper: j.pos_upper,
                vel_max: j.vel_max,
            })
            .collect(),
        tool_transform: Some(ToolEntry {
            position: [tool.position.x, tool.position.y, tool.position.z],
            quaternion: tool.wxyz(),
        }),
        tolerance: Some(ToleranceEntry {
            lower: tol.lower.map(Bound::from_value),
            upper: tol.upper.map(Bound::from_value),
        }),
    };
    serde_json::to_string_pretty(&file).expect("chain definition serializes")
}
