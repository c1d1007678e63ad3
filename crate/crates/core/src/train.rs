use crate::descriptor::{AffordanceDescriptor, Provenance, TrainingParams};
use crate::error::{Error, Result};
use crate::geometry::{PointCloud, RigidPose, SceneIndex};
use crate::ibs::{prune_ibs, sample_ibs_indexed};
use crate::keypoints::sample_keypoints;
use crate::tensor::{compute_provenance_indexed, derive_anchor, InteractionTensor};

/// Counts reported alongside a trained descriptor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainingStats {
    pub ibs_samples: usize,
    pub retained_samples: usize,
    pub eps_ibs: f64,
}

#[derive(Clone, Debug)]
pub struct Trained {
    pub descriptor: AffordanceDescriptor,
    /// The full tensor the keypoints were drawn from, for diagnostics and the
    /// dense scoring path.
    pub tensor: InteractionTensor,
    /// The query cloud in its training pose.
    pub posed_query: PointCloud,
    pub stats: TrainingStats,
}

/// Optional file names recorded in the descriptor provenance.
#[derive(Clone, Debug, Default)]
pub struct SourceFiles {
    pub query: Option<String>,
    pub scene: Option<String>,
}

/// One-shot training: pose the query, sample and prune the bisector, attach
/// provenance, pick the anchor and draw keypoints.
pub fn train_affordance(
    name: &str,
    query: &PointCloud,
    scene: &PointCloud,
    pose: &RigidPose,
    params: &TrainingParams,
    sources: SourceFiles,
) -> Result<Trained> {
    if name.is_empty() {
        return Err(Error::InvalidParams("descriptor name is empty".into()));
    }
    params.ibs.validate()?;
    params.thresholds.validate()?;
    let posed = query.transformed(pose);
    let q_index = SceneIndex::build(&posed)?;
    let s_index = SceneIndex::build(scene)?;

    let bisector = sample_ibs_indexed(&q_index, &s_index, &params.ibs)?;
    let retained = prune_ibs(&bisector.samples, &posed, &params.ibs).map_err(|e| match e {
        Error::AllPruned(n) => Error::DegenerateInteraction(format!(
            "all {n} bisector samples lie farther than prune_delta × query diagonal from the query"
        )),
        other => other,
    })?;
    let tensor = compute_provenance_indexed(&retained, &q_index, &s_index)?;
    let anchor = derive_anchor(&tensor, scene)?;
    let query_diag = posed.bounds().ok_or(Error::EmptyCloud)?.diagonal();
    let keypoints = sample_keypoints(&tensor, anchor, query_diag, &params.keypoints)?;

    let descriptor = AffordanceDescriptor {
        name: name.to_string(),
        anchor,
        query_diag,
        thresholds: params.thresholds,
        keypoints,
        provenance: Provenance {
            seed: params.keypoints.seed,
            params: *params,
            query_file: sources.query,
            scene_file: sources.scene,
            pose: *pose,
        },
    };
    descriptor.validate()?;
    Ok(Trained {
        descriptor,
        tensor,
        posed_query: posed,
        stats: TrainingStats {
            ibs_samples: bisector.samples.len(),
            retained_samples: retained.len(),
            eps_ibs: bisector.eps_ibs,
        },
    })
}
