//! Machine-readable detection output and the visualization export.

use serde::{Deserialize, Serialize};

use super::{Detection, DetectionParams};
use crate::geometry::{Point3, PointCloud, RigidPose, Rgb, Vector3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub descriptor: String,
    pub location: Point3,
    pub yaw: f64,
    pub score: f64,
    pub matched: usize,
    pub total: usize,
}

impl From<&Detection> for DetectionRecord {
    fn from(d: &Detection) -> Self {
        DetectionRecord {
            descriptor: d.descriptor_name.clone(),
            location: d.location,
            yaw: d.yaw,
            score: d.score,
            matched: d.matches.count_ones(),
            total: d.matches.len(),
        }
    }
}

/// Wall-clock measurements in milliseconds. Kept in their own object so that
/// everything else in a report is reproducible byte-for-byte.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub index_build_ms: f64,
    pub scoring_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSummary {
    pub descriptor: String,
    pub file: String,
    pub detections: usize,
}

/// `{scene_file, params, results, timing}`; batch runs add `groups`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionsReport {
    pub scene_file: String,
    pub params: DetectionParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<GroupSummary>>,
    pub results: Vec<DetectionRecord>,
    pub timing: Timing,
}

impl DetectionsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        s.push('\n');
        s
    }
}

const SCENE_GREY: Rgb = [150, 150, 150];
const INSTANCE_GREEN: Rgb = [30, 200, 60];

/// Score ramp from red (0) to green (1).
pub fn score_color(score: f64) -> Rgb {
    let s = score.clamp(0.0, 1.0);
    [(255.0 * (1.0 - s)).round() as u8, (255.0 * s).round() as u8, 0]
}

/// Scene points, every detection location colored by score, and for each
/// detection the query model (points relative to the descriptor anchor)
/// instanced at the detection pose.
pub fn visualization_cloud(
    scene: &PointCloud,
    detections: &[(&Detection, &[Vector3])],
) -> (PointCloud, Vec<Rgb>) {
    let mut points: Vec<Point3> = scene.points().to_vec();
    let mut colors = vec![SCENE_GREY; points.len()];
    for (det, model) in detections {
        let r = RigidPose::from_yaw(det.yaw);
        points.extend(model.iter().map(|v| det.location + r.rotate(v)));
        colors.extend(std::iter::repeat(INSTANCE_GREEN).take(model.len()));
        points.push(det.location);
        colors.push(score_color(det.score));
    }
    let cloud = PointCloud::new(points).expect("instanced points are finite");
    (cloud, colors)
}
