use crate::descriptor::{AffordanceDescriptor, MatchThresholds};
use crate::error::{Error, Result};
use crate::geometry::{Point3, RigidPose, SceneIndex, Vector3};
use crate::tensor::InteractionTensor;

/// Fixed-length bitmask over keypoints.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MatchMask {
    words: Vec<u64>,
    len: usize,
}

impl MatchMask {
    pub fn new(len: usize) -> Self {
        MatchMask {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        assert!(i < self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.get(i))
    }

    /// True when every bit set in `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &MatchMask) -> bool {
        self.len == other.len && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Score {
    pub score: f64,
    pub matches: MatchMask,
}

/// Whether the scene point nearest to the expected provenance endpoint
/// reproduces the keypoint. When several members are nearest within
/// [`TIE_TOLERANCE`](crate::geometry::TIE_TOLERANCE), any one of them reproducing it counts.
///
/// `site` is the rotated bisector location `t + R·offset`, `expected` the
/// rotated provenance vector `R·vector`, `probe` the expected scene point
/// `t + R·(offset + vector)`.
#[inline]
pub fn keypoint_matches(
    scene: &SceneIndex,
    site: Point3,
    probe: Point3,
    expected: Vector3,
    thresholds: &MatchThresholds,
) -> bool {
    nearest_reproduces(scene, site, probe, expected, thresholds, f64::INFINITY, &mut Vec::new())
}

#[inline]
fn nearest_reproduces(
    scene: &SceneIndex,
    site: Point3,
    probe: Point3,
    expected: Vector3,
    thresholds: &MatchThresholds,
    max_d2: f64,
    ties: &mut Vec<(usize, f64)>,
) -> bool {
    scene.nearest_ties_within_squared(&probe, max_d2, ties).is_some()
        && ties
            .iter()
            .any(|&(i, _)| estimate_matches(scene.point(i) - site, expected, thresholds))
}

#[inline]
fn estimate_matches(estimated: Vector3, expected: Vector3, thresholds: &MatchThresholds) -> bool {
    let len = estimated.norm();
    if len == 0.0 {
        return false;
    }
    let want = expected.norm();
    estimated.angle_to(&expected) <= thresholds.theta_max
        && (len - want).abs() <= thresholds.rho_max * want
}

/// Squared radius around the probe outside which no scene point can match.
///
/// A matching estimate differs from the expected vector by at most
/// `|v|·sqrt((1+ρ)² + 1 − 2(1+ρ)cos θ)` (law of cosines at the extreme
/// length and angle). The radius is padded well beyond rounding error, so a
/// search limited to it decides every keypoint exactly as an unlimited one.
fn match_radius_squared(want: f64, thresholds: &MatchThresholds) -> f64 {
    let g = 1.0 + thresholds.rho_max;
    let c = thresholds.theta_max.min(std::f64::consts::PI).cos();
    let r = want * (g * g + 1.0 - 2.0 * g * c).max(0.0).sqrt();
    let r = r * (1.0 + 1e-6) + 1e-9;
    r * r
}

/// `Σ matched weights / Σ all weights`, both summed in keypoint order, so a
/// full match scores exactly 1.
pub fn weighted_score(weights: impl Iterator<Item = f64> + Clone, mask: &MatchMask) -> f64 {
    let total: f64 = weights.clone().sum();
    let matched: f64 = weights
        .enumerate()
        .filter(|(i, _)| mask.get(*i))
        .map(|(_, w)| w)
        .sum();
    if total > 0.0 {
        matched / total
    } else {
        0.0
    }
}

/// Evaluates a descriptor at `test_point` with the query rotated by `yaw` about +Z.
pub fn score_at(d: &AffordanceDescriptor, scene: &SceneIndex, test_point: Point3, yaw: f64) -> Score {
    let r = RigidPose::from_yaw(yaw);
    let mut mask = MatchMask::new(d.keypoints.len());
    let mut ties = Vec::new();
    for (i, k) in d.keypoints.iter().enumerate() {
        let site = test_point + r.rotate(&k.offset);
        let probe = test_point + r.rotate(&(k.offset + k.vector));
        let expected = r.rotate(&k.vector);
        let limit = match_radius_squared(expected.norm(), &d.thresholds);
        if nearest_reproduces(scene, site, probe, expected, &d.thresholds, limit, &mut ties) {
            mask.set(i);
        }
    }
    let score = weighted_score(d.keypoints.iter().map(|k| k.weight), &mask);
    Score { score, matches: mask }
}

/// Dense reference: the same match rule over every tensor entry with uniform weights.
pub fn full_tensor_score(
    tensor: &InteractionTensor,
    anchor: Point3,
    thresholds: &MatchThresholds,
    scene: &SceneIndex,
    test_point: Point3,
    yaw: f64,
) -> Result<Score> {
    if tensor.is_empty() {
        return Err(Error::EmptyTensor);
    }
    let r = RigidPose::from_yaw(yaw);
    let mut mask = MatchMask::new(tensor.len());
    let mut ties = Vec::new();
    for (i, e) in tensor.entries.iter().enumerate() {
        let offset = e.p - anchor;
        let site = test_point + r.rotate(&offset);
        let probe = test_point + r.rotate(&(offset + e.pv_scene));
        let expected = r.rotate(&e.pv_scene);
        if e.pv_scene.norm() > 0.0
            && nearest_reproduces(scene, site, probe, expected, thresholds, f64::INFINITY, &mut ties)
        {
            mask.set(i);
        }
    }
    let w = 1.0 / tensor.len() as f64;
    let score = weighted_score(std::iter::repeat(w).take(tensor.len()), &mask);
    Ok(Score { score, matches: mask })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_bits() {
        let mut m = MatchMask::new(130);
        m.set(0);
        m.set(64);
        m.set(129);
        assert_eq!(m.count_ones(), 3);
        assert_eq!(m.iter_ones().collect::<Vec<_>>(), vec![0, 64, 129]);
        assert!(!m.get(130));
        let mut bigger = m.clone();
        bigger.set(5);
        assert!(m.is_subset_of(&bigger));
        assert!(!bigger.is_subset_of(&m));
    }

    #[test]
    fn full_match_scores_exactly_one() {
        let w = [0.1, 0.2, 0.3, 0.15, 0.25];
        let mut m = MatchMask::new(5);
        (0..5).for_each(|i| m.set(i));
        assert_eq!(weighted_score(w.iter().copied(), &m), 1.0);
        assert_eq!(weighted_score(w.iter().copied(), &MatchMask::new(5)), 0.0);
    }
}
