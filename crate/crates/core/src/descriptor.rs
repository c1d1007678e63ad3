//! The trained affordance descriptor and its JSON file format.
//!
//! ```json
//! {"format_version": 1, "name": "place-sphere", "anchor": [x, y, z],
//!  "query_diag": 0.17, "thresholds": {"theta_max": 0.2618, "rho_max": 0.3},
//!  "keypoints": [{"offset": [..], "vector": [..], "weight": 0.002}, ...],
//!  "provenance": {"seed": 0, "params": {..}, "query_file": null,
//!                 "scene_file": null, "pose": {..}}}
//! ```
//!
//! Floats are written in shortest round-trip form, so save → load is exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, RigidPose};
use crate::ibs::IbsParams;
use crate::keypoints::{Keypoint, KeypointParams};

pub const FORMAT_VERSION: u64 = 1;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Per-keypoint match tolerances used at detection time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchThresholds {
    /// Largest accepted angle between estimated and expected provenance vectors (radians).
    pub theta_max: f64,
    /// Largest accepted relative magnitude deviation.
    pub rho_max: f64,
}

impl Default for MatchThresholds {
    fn default() -> Self {
        MatchThresholds {
            theta_max: 0.2618,
            rho_max: 0.3,
        }
    }
}

impl MatchThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_max > 0.0 && self.theta_max.is_finite())
            || !(self.rho_max > 0.0 && self.rho_max.is_finite())
        {
            return Err(Error::InvalidParams("thresholds must be positive".into()));
        }
        Ok(())
    }
}

/// Everything that shaped a descriptor at training time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingParams {
    pub ibs: IbsParams,
    pub keypoints: KeypointParams,
    pub thresholds: MatchThresholds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub seed: u64,
    pub params: TrainingParams,
    pub query_file: Option<String>,
    pub scene_file: Option<String>,
    pub pose: RigidPose,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffordanceDescriptor {
    pub name: String,
    /// Training-frame reference point that keypoint offsets are relative to.
    pub anchor: Point3,
    pub query_diag: f64,
    pub thresholds: MatchThresholds,
    pub keypoints: Vec<Keypoint>,
    pub provenance: Provenance,
}

#[derive(Serialize)]
struct FileOut<'a> {
    format_version: u64,
    #[serde(flatten)]
    descriptor: &'a AffordanceDescriptor,
}

impl AffordanceDescriptor {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedDescriptor(m));
        if self.name.is_empty() {
            return bad("name is empty".into());
        }
        if self.keypoints.is_empty() {
            return bad("no keypoints".into());
        }
        if !self.anchor.is_finite() || !self.query_diag.is_finite() || self.query_diag < 0.0 {
            return bad("anchor or query_diag is not finite".into());
        }
        if self.thresholds.validate().is_err() {
            return bad("thresholds must be positive and finite".into());
        }
        let mut sum = 0.0;
        for (i, k) in self.keypoints.iter().enumerate() {
            if !k.offset.is_finite() || !k.vector.is_finite() || !k.weight.is_finite() {
                return bad(format!("keypoint {i} is not finite"));
            }
            if k.vector.norm() <= 0.0 {
                return bad(format!("keypoint {i} has a zero vector"));
            }
            if k.weight < 0.0 {
                return bad(format!("keypoint {i} has negative weight"));
            }
            sum += k.weight;
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return bad(format!("keypoint weights sum to {sum}, expected 1"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&FileOut {
            format_version: FORMAT_VERSION,
            descriptor: self,
        })
        .expect("descriptor serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::MalformedDescriptor(e.to_string()))?;
        let mut obj = match value {
            serde_json::Value::Object(o) => o,
            _ => return Err(Error::MalformedDescriptor("not a JSON object".into())),
        };
        let version = obj
            .remove("format_version")
            .ok_or_else(|| Error::MalformedDescriptor("missing format_version".into()))?;
        let version = version
            .as_u64()
            .ok_or_else(|| Error::MalformedDescriptor("format_version is not an integer".into()))?;
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let d: AffordanceDescriptor = serde_json::from_value(serde_json::Value::Object(obj))
            .map_err(|e| Error::MalformedDescriptor(e.to_string()))?;
        d.validate()?;
        Ok(d)
    }
}

pub fn save_descriptor(d: &AffordanceDescriptor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, d.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_descriptor(path: impl AsRef<Path>) -> Result<AffordanceDescriptor> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    AffordanceDescriptor::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> AffordanceDescriptor {
        AffordanceDescriptor {
            name: "t".into(),
            anchor: Point3::new(0.1, 0.2, 0.3),
            query_diag: 0.17320508075688773,
            thresholds: MatchThresholds::default(),
            keypoints: vec![
                Keypoint {
                    offset: Point3::new(0.0, 0.0, 0.1),
                    vector: Point3::new(0.0, 0.0, -0.1),
                    weight: 0.1 + 0.2,
                },
                Keypoint {
                    offset: Point3::new(0.01, 0.0, 0.1),
                    vector: Point3::new(0.0, 1e-3, -0.1),
                    weight: 1.0 - (0.1 + 0.2),
                },
            ],
            provenance: Provenance {
                seed: 3,
                params: TrainingParams::default(),
                query_file: Some("q.ply".into()),
                scene_file: None,
                pose: RigidPose::identity(),
            },
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let d = tiny();
        assert_eq!(AffordanceDescriptor::from_json(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn weights_must_sum_to_one() {
        let mut d = tiny();
        d.keypoints[1].weight -= 0.1;
        let err = AffordanceDescriptor::from_json(&d.to_json()).unwrap_err();
        assert!(matches!(err, Error::MalformedDescriptor(_)), "{err}");
    }

    #[test]
    fn version_is_checked() {
        let text = tiny().to_json().replace("\"format_version\": 1", "\"format_version\": 99");
        assert!(matches!(
            AffordanceDescriptor::from_json(&text),
            Err(Error::VersionMismatch { found: 99, .. })
        ));
    }

    #[test]
    fn structural_problems_are_malformed() {
        let text = tiny().to_json();
        for broken in [
            text.replace("\"format_version\": 1,", ""),
            text.replace("\"name\": \"t\"", "\"name\": \"\""),
            text.replace("\"query_diag\"", "\"extra\": 1, \"query_diag\""),
            "[1, 2]".to_string(),
            "{".to_string(),
        ] {
            assert!(matches!(
                AffordanceDescriptor::from_json(&broken),
                Err(Error::MalformedDescriptor(_))
            ));
        }
    }
}
