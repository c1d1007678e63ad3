use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};

/// Replaces the occupants of each cubic voxel of side `leaf` by their centroid.
///
/// Voxels are keyed by `floor(p / leaf)` per axis and emitted in
/// lexicographic key order. Normals are not carried over.
pub fn voxel_downsample(cloud: &PointCloud, leaf: f64) -> Result<PointCloud> {
    if !(leaf > 0.0 && leaf.is_finite()) {
        return Err(Error::NonPositiveLeaf(leaf));
    }
    let mut voxels: BTreeMap<[i64; 3], (Point3, usize)> = BTreeMap::new();
    for p in cloud {
        let key = [
            (p.x / leaf).floor() as i64,
            (p.y / leaf).floor() as i64,
            (p.z / leaf).floor() as i64,
        ];
        let slot = voxels.entry(key).or_insert((Point3::ORIGIN, 0));
        slot.0 += *p;
        slot.1 += 1;
    }
    PointCloud::new(
        voxels
            .into_values()
            .map(|(sum, n)| sum / n as f64)
            .collect(),
    )
}
