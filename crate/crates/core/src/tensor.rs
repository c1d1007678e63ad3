//! The Interaction Tensor: bisector samples annotated with provenance vectors.

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, SceneIndex, Vector3};
use crate::ibs::IbsSample;

/// One bisector point with the vectors to its nearest scene and query points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensorEntry {
    pub p: Point3,
    /// Nearest scene point minus `p`.
    pub pv_scene: Vector3,
    /// Nearest query point minus `p`.
    pub pv_query: Vector3,
    /// Source index of the nearest scene point.
    pub scene_index: usize,
    /// Source index of the nearest query point.
    pub query_index: usize,
}

impl TensorEntry {
    /// The scene member this entry's provenance vector points at.
    pub fn scene_point(&self, scene: &PointCloud) -> Point3 {
        scene.points()[self.scene_index]
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct InteractionTensor {
    pub entries: Vec<TensorEntry>,
}

impl InteractionTensor {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Attaches provenance vectors to each bisector sample.
pub fn compute_provenance(
    samples: &[IbsSample],
    query: &PointCloud,
    scene: &PointCloud,
) -> Result<InteractionTensor> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let q = SceneIndex::build(query)?;
    let s = SceneIndex::build(scene)?;
    compute_provenance_indexed(samples, &q, &s)
}

pub fn compute_provenance_indexed(
    samples: &[IbsSample],
    query: &SceneIndex,
    scene: &SceneIndex,
) -> Result<InteractionTensor> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let entries = samples
        .iter()
        .map(|s| {
            let ns = scene.nearest(&s.p);
            let nq = query.nearest(&s.p);
            TensorEntry {
                p: s.p,
                pv_scene: ns.point - s.p,
                pv_query: nq.point - s.p,
                scene_index: ns.index,
                query_index: nq.index,
            }
        })
        .collect();
    Ok(InteractionTensor { entries })
}

/// Index of the entry with the shortest scene provenance vector, first on ties.
pub fn anchor_entry(tensor: &InteractionTensor) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in tensor.entries.iter().enumerate() {
        let m = e.pv_scene.norm();
        if best.map_or(true, |(_, b)| m < b) {
            best = Some((i, m));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::EmptyTensor)
}

/// The training reference point: the scene member closest to the bisector,
/// i.e. the endpoint of the shortest scene provenance vector.
pub fn derive_anchor(tensor: &InteractionTensor, scene: &PointCloud) -> Result<Point3> {
    let i = anchor_entry(tensor)?;
    Ok(tensor.entries[i].scene_point(scene))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(p: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(p.iter().map(|&a| a.into()).collect()).unwrap()
    }

    fn sample(p: [f64; 3]) -> IbsSample {
        IbsSample {
            p: p.into(),
            d_query: 1.0,
            d_scene: 1.0,
        }
    }

    #[test]
    fn provenance_of_midpoint() {
        let t = compute_provenance(
            &[sample([0.0, 0.0, 0.0])],
            &cloud(&[[0.0, 0.0, 1.0]]),
            &cloud(&[[0.0, 0.0, -1.0]]),
        )
        .unwrap();
        assert_eq!(t.entries[0].pv_scene, Point3::new(0.0, 0.0, -1.0));
        assert_eq!(t.entries[0].pv_query, Point3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn empty_samples() {
        let c = cloud(&[[0.0, 0.0, 0.0]]);
        assert!(matches!(compute_provenance(&[], &c, &c), Err(Error::EmptyInput)));
        assert!(matches!(
            derive_anchor(&InteractionTensor::default(), &c),
            Err(Error::EmptyTensor)
        ));
    }

    #[test]
    fn single_entry_anchor_is_its_scene_endpoint() {
        let scene = cloud(&[[0.3, 0.1, -1.0]]);
        let t = compute_provenance(&[sample([0.0, 0.0, 0.0])], &cloud(&[[0.0, 0.0, 1.0]]), &scene).unwrap();
        let e = t.entries[0];
        assert_eq!(derive_anchor(&t, &scene).unwrap(), e.p + e.pv_scene);
    }

    #[test]
    fn anchor_tie_goes_to_first_entry() {
        let scene = cloud(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        let query = cloud(&[[0.0, 0.0, 5.0]]);
        let t = compute_provenance(&[sample([0.5, 0.0, 0.0]), sample([-0.5, 0.0, 0.0])], &query, &scene).unwrap();
        assert_eq!(derive_anchor(&t, &scene).unwrap(), Point3::new(1.0, 0.0, 0.0));
    }
}
