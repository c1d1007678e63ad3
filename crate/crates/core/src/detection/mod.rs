//! Fast detection: approximate the interaction tensor at candidate scene
//! locations by nearest-neighbour probes of each keypoint's expected scene point.
//!
//! All fan-out is over `(descriptor, test point)` pairs with rayon; results
//! are collected in sequential order, so output never depends on scheduling.

mod report;
mod score;

use std::f64::consts::TAU;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptor::AffordanceDescriptor;
use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, SceneIndex};

pub use report::{
    score_color, visualization_cloud, DetectionRecord, DetectionsReport, GroupSummary, Timing,
};
pub use score::{full_tensor_score, keypoint_matches, score_at, weighted_score, MatchMask, Score};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionParams {
    pub n_test_points: usize,
    /// Number of evenly spaced yaw angles in `[0, 2π)`.
    pub n_orientations: usize,
    pub score_threshold: f64,
    pub seed: u64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        DetectionParams {
            n_test_points: 10,
            n_orientations: 8,
            score_threshold: 0.5,
            seed: 0,
        }
    }
}

impl DetectionParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_test_points < 1 {
            return Err(Error::InvalidParams("n_test_points must be at least 1".into()));
        }
        if self.n_orientations < 1 {
            return Err(Error::InvalidParams("n_orientations must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return Err(Error::InvalidParams("score_threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// The `k`-th yaw, `2πk / n`; the first is exactly zero.
    pub fn yaw(&self, k: usize) -> f64 {
        TAU * k as f64 / self.n_orientations as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub descriptor_name: String,
    pub location: Point3,
    pub yaw: f64,
    pub score: f64,
    pub matches: MatchMask,
    /// Position of the location in the test-point list.
    pub test_index: usize,
}

/// Draws `n` scene members uniformly: without replacement when `n ≤ |scene|`,
/// with replacement otherwise.
pub fn sample_test_points(scene: &PointCloud, n: usize, seed: u64) -> Result<Vec<Point3>> {
    if scene.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if n == 0 {
        return Err(Error::InvalidCount(0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = scene.points();
    Ok(if n <= pts.len() {
        index::sample(&mut rng, pts.len(), n)
            .into_iter()
            .map(|i| pts[i])
            .collect()
    } else {
        (0..n).map(|_| pts[rng.gen_range(0..pts.len())]).collect()
    })
}

/// Best yaw at one location; ties keep the smaller yaw.
pub fn best_over_yaws(
    d: &AffordanceDescriptor,
    scene: &SceneIndex,
    test_point: Point3,
    params: &DetectionParams,
) -> (f64, Score) {
    let mut best = (0.0, score_at(d, scene, test_point, 0.0));
    for k in 1..params.n_orientations {
        let yaw = params.yaw(k);
        let s = score_at(d, scene, test_point, yaw);
        if s.score > best.1.score {
            best = (yaw, s);
        }
    }
    best
}

fn detections_for(
    d: &AffordanceDescriptor,
    points: &[Point3],
    params: &DetectionParams,
    evaluated: Vec<(f64, Score)>,
) -> Vec<Detection> {
    let mut out: Vec<Detection> = evaluated
        .into_iter()
        .enumerate()
        .filter(|(_, (_, s))| s.score >= params.score_threshold)
        .map(|(i, (yaw, s))| Detection {
            descriptor_name: d.name.clone(),
            location: points[i],
            yaw,
            score: s.score,
            matches: s.matches,
            test_index: i,
        })
        .collect();
    // Stable: equal scores stay in test-point order.
    out.sort_by(|a, b| b.score.total_cmp(&a.score));
    out
}

/// Scores `d` at each of `points` and keeps the best yaw per point.
pub fn detect_at_points(
    d: &AffordanceDescriptor,
    scene: &SceneIndex,
    points: &[Point3],
    params: &DetectionParams,
) -> Result<Vec<Detection>> {
    params.validate()?;
    let evaluated: Vec<(f64, Score)> = points
        .par_iter()
        .map(|&p| best_over_yaws(d, scene, p, params))
        .collect();
    Ok(detections_for(d, points, params, evaluated))
}

/// Builds the scene index, samples test points and runs [`detect_at_points`].
pub fn detect(
    d: &AffordanceDescriptor,
    scene: &PointCloud,
    params: &DetectionParams,
) -> Result<Vec<Detection>> {
    params.validate()?;
    let index = SceneIndex::build(scene)?;
    let points = sample_test_points(scene, params.n_test_points, params.seed)?;
    detect_at_points(d, &index, &points, params)
}

/// Many descriptors over one shared index and one shared set of test points.
///
/// Returns one group per descriptor, each equal to [`detect_at_points`] for it.
pub fn batch_detect_at_points(
    descriptors: &[AffordanceDescriptor],
    scene: &SceneIndex,
    points: &[Point3],
    params: &DetectionParams,
) -> Result<Vec<Vec<Detection>>> {
    if descriptors.is_empty() {
        return Err(Error::NoDescriptors);
    }
    params.validate()?;
    let pairs: Vec<(usize, usize)> = (0..descriptors.len())
        .flat_map(|di| (0..points.len()).map(move |pi| (di, pi)))
        .collect();
    let mut evaluated: Vec<(f64, Score)> = pairs
        .par_iter()
        .map(|&(di, pi)| best_over_yaws(&descriptors[di], scene, points[pi], params))
        .collect();
    let mut groups = Vec::with_capacity(descriptors.len());
    for d in descriptors.iter().rev() {
        let tail = evaluated.split_off(evaluated.len() - points.len());
        groups.push(detections_for(d, points, params, tail));
    }
    groups.reverse();
    Ok(groups)
}

/// [`detect`] for many descriptors; the concatenation of per-descriptor results.
pub fn batch_detect(
    descriptors: &[AffordanceDescriptor],
    scene: &PointCloud,
    params: &DetectionParams,
) -> Result<Vec<Detection>> {
    if descriptors.is_empty() {
        return Err(Error::NoDescriptors);
    }
    params.validate()?;
    let index = SceneIndex::build(scene)?;
    let points = sample_test_points(scene, params.n_test_points, params.seed)?;
    Ok(batch_detect_at_points(descriptors, &index, &points, params)?
        .into_iter()
        .flatten()
        .collect())
}
