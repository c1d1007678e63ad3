//! Sparse, weighted sampling of the interaction tensor into affordance keypoints.
//!
//! Each tensor entry gets a raw weight `1 / (|pv_scene| + λ)` with
//! `λ = 1e-3 × query_diag`, so short provenance vectors (contact regions)
//! dominate. Selected keypoints keep tensor order and their weights are
//! renormalized to sum to one.
//!
//! The weighted-random strategy draws a fixed-size sample without replacement
//! whose inclusion probabilities are proportional to the raw weights
//! (`π_i = n·w_i / Σw`, capped at 1 with the excess redistributed), using
//! systematic sampling over a seeded random permutation.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, Vector3};
use crate::tensor::InteractionTensor;

/// Additive regularizer of the inverse-magnitude weights, relative to the query diagonal.
pub const LAMBDA_FRACTION: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingStrategy {
    Uniform,
    WeightedRandom,
    TopWeight,
}

impl std::str::FromStr for SamplingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SamplingStrategy::Uniform),
            "weighted-random" => Ok(SamplingStrategy::WeightedRandom),
            "top-weight" => Ok(SamplingStrategy::TopWeight),
            other => Err(Error::InvalidParams(format!("unknown sampling strategy {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// `1 / (|pv_scene| + λ)`.
    InverseMagnitude,
    /// Every entry weighs the same.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeypointParams {
    pub count: usize,
    pub strategy: SamplingStrategy,
    pub weighting: Weighting,
    pub seed: u64,
}

impl Default for KeypointParams {
    fn default() -> Self {
        KeypointParams {
            count: 512,
            strategy: SamplingStrategy::WeightedRandom,
            weighting: Weighting::InverseMagnitude,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Keypoint {
    /// Bisector point relative to the descriptor anchor.
    pub offset: Vector3,
    /// Scene-side provenance vector.
    pub vector: Vector3,
    pub weight: f64,
}

/// Raw (unnormalized) weights for every tensor entry.
pub fn raw_weights(tensor: &InteractionTensor, query_diag: f64, weighting: Weighting) -> Vec<f64> {
    let lambda = LAMBDA_FRACTION * query_diag;
    tensor
        .entries
        .iter()
        .map(|e| match weighting {
            Weighting::InverseMagnitude => 1.0 / (e.pv_scene.norm() + lambda),
            Weighting::Uniform => 1.0,
        })
        .collect()
}

/// Inclusion probabilities for a size-`n` sample proportional to `weights`,
/// with probabilities above one capped and the remainder redistributed.
pub fn inclusion_probabilities(weights: &[f64], n: usize) -> Vec<f64> {
    let m = weights.len();
    if n >= m {
        return vec![1.0; m];
    }
    let mut pi = vec![0.0; m];
    let mut capped = vec![false; m];
    let mut n_capped = 0;
    loop {
        let rest_n = (n - n_capped) as f64;
        let rest_w: f64 = (0..m).filter(|&i| !capped[i]).map(|i| weights[i]).sum();
        let mut changed = false;
        for i in 0..m {
            if capped[i] {
                continue;
            }
            pi[i] = rest_n * weights[i] / rest_w;
            if pi[i] >= 1.0 {
                pi[i] = 1.0;
                capped[i] = true;
                n_capped += 1;
                changed = true;
            }
        }
        if !changed {
            return pi;
        }
    }
}

/// Picks `min(n, |tensor|)` entries and turns them into keypoints around `anchor`.
pub fn sample_keypoints(
    tensor: &InteractionTensor,
    anchor: Point3,
    query_diag: f64,
    params: &KeypointParams,
) -> Result<Vec<Keypoint>> {
    if tensor.is_empty() {
        return Err(Error::EmptyTensor);
    }
    if params.count == 0 {
        return Err(Error::InvalidCount(params.count));
    }
    // Zero-length provenance vectors carry no direction to match against.
    let usable: Vec<usize> = (0..tensor.len())
        .filter(|&i| tensor.entries[i].pv_scene.norm() > 0.0)
        .collect();
    if usable.is_empty() {
        return Err(Error::EmptyTensor);
    }
    let all = raw_weights(tensor, query_diag, params.weighting);
    let weights: Vec<f64> = usable.iter().map(|&i| all[i]).collect();

    let n = params.count.min(usable.len());
    let mut chosen = if n == usable.len() {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        match params.strategy {
            SamplingStrategy::Uniform => index::sample(&mut rng, usable.len(), n).into_vec(),
            SamplingStrategy::TopWeight => top_weight(&weights, n),
            SamplingStrategy::WeightedRandom => systematic_pps(&weights, n, &mut rng),
        }
    };
    chosen.sort_unstable();

    let total: f64 = chosen.iter().map(|&c| weights[c]).sum();
    Ok(chosen
        .into_iter()
        .map(|c| {
            let e = &tensor.entries[usable[c]];
            Keypoint {
                offset: e.p - anchor,
                vector: e.pv_scene,
                weight: weights[c] / total,
            }
        })
        .collect())
}

fn top_weight(weights: &[f64], n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    order.truncate(n);
    order
}

/// Systematic probability-proportional-to-size sampling without replacement.
fn systematic_pps(weights: &[f64], n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let pi = inclusion_probabilities(weights, n);
    let mut chosen: Vec<usize> = (0..pi.len()).filter(|&i| pi[i] >= 1.0).collect();
    let mut order: Vec<usize> = (0..pi.len()).filter(|&i| pi[i] < 1.0).collect();
    order.shuffle(rng);

    let mut next: f64 = rng.gen();
    let mut cum = 0.0;
    let mut taken = vec![false; pi.len()];
    for &i in &order {
        cum += pi[i];
        if next < cum && chosen.len() < n {
            chosen.push(i);
            taken[i] = true;
            next += 1.0;
        }
    }
    // Rounding can leave the cumulative sum a hair below the last threshold.
    if chosen.len() < n {
        let mut rest: Vec<usize> = order.iter().copied().filter(|&i| !taken[i]).collect();
        rest.sort_by(|&a, &b| pi[b].total_cmp(&pi[a]).then(a.cmp(&b)));
        chosen.extend(rest.into_iter().take(n - chosen.len()));
    }
    chosen
}
