//! Exact nearest-neighbour search over a fixed point cloud.
//!
//! A median-split kd-tree with small leaf buckets. Queries are exact: the
//! returned member minimizes `(squared distance, source index)`
//! lexicographically, so equidistant members resolve to the one listed first
//! in the source cloud. A subtree is skipped only when its cell is strictly
//! farther than the current best, which keeps the tie-break exact.

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};

const LEAF_SIZE: usize = 8;
const LEAF: u8 = 3;

/// Members whose distance exceeds the nearest by at most this many meters
/// count as tied with it in [`SceneIndex::nearest_ties_within_squared`].
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Result of a nearest-neighbour query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    /// Index of the member in the source cloud.
    pub index: usize,
    pub point: Point3,
    pub distance: f64,
}

#[derive(Clone, Copy, Debug)]
struct Node {
    split: f64,
    dim: u8,
    // Leaves: [start, end) into the permuted arrays. Inner nodes: child ids.
    a: u32,
    b: u32,
}

/// Immutable spatial index over a scene cloud.
///
/// `SceneIndex` is `Send + Sync`; any number of threads may query it at once.
#[derive(Clone, Debug)]
pub struct SceneIndex {
    source: Vec<Point3>,
    coords: Vec<[f64; 3]>,
    ids: Vec<u32>,
    nodes: Vec<Node>,
}

impl SceneIndex {
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if cloud.len() > u32::MAX as usize {
            return Err(Error::InvalidCount(cloud.len()));
        }
        let source = cloud.points().to_vec();
        let mut perm: Vec<u32> = (0..source.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * source.len() / LEAF_SIZE + 1);
        build_node(&source, &mut perm, 0, &mut nodes);
        let coords = perm.iter().map(|&i| source[i as usize].to_array()).collect();
        Ok(SceneIndex {
            source,
            coords,
            ids: perm,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    /// Points of the source cloud, in their original order.
    pub fn points(&self) -> &[Point3] {
        &self.source
    }

    pub fn point(&self, index: usize) -> Point3 {
        self.source[index]
    }

    pub fn nearest(&self, q: &Point3) -> Neighbor {
        let (index, d2) = self.nearest_squared(q);
        Neighbor {
            index,
            point: self.source[index],
            distance: d2.sqrt(),
        }
    }

    /// Source index and squared distance of the nearest member.
    #[inline]
    pub fn nearest_squared(&self, q: &Point3) -> (usize, f64) {
        self.nearest_within_squared(q, f64::INFINITY)
            .expect("index is nonempty")
    }

    /// The exact nearest member if its squared distance is at most `max_d2`.
    ///
    /// Identical to [`nearest_squared`](Self::nearest_squared) whenever it
    /// returns `Some`; regions beyond `max_d2` are never visited.
    #[inline]
    pub fn nearest_within_squared(&self, q: &Point3, max_d2: f64) -> Option<(usize, f64)> {
        let q = q.to_array();
        let mut best = Best {
            d2: max_d2,
            id: u32::MAX,
        };
        let mut off = [0.0; 3];
        self.search(0, &q, &mut off, &mut best);
        (best.id != u32::MAX).then_some((best.id as usize, best.d2))
    }

    /// Every member within [`TIE_TOLERANCE`] of the nearest distance, written
    /// to `out` as `(source index, squared distance)` in index order, when the
    /// nearest lies within `max_d2`. Returns the nearest squared distance.
    ///
    /// The set is stable under rounding-level perturbations of the query,
    /// which a single tie-broken nearest member is not on regular lattices.
    pub fn nearest_ties_within_squared(
        &self,
        q: &Point3,
        max_d2: f64,
        out: &mut Vec<(usize, f64)>,
    ) -> Option<f64> {
        out.clear();
        let q = q.to_array();
        let mut ties = Ties {
            best: f64::INFINITY,
            limit: max_d2,
            found: out,
        };
        let mut off = [0.0; 3];
        self.search_ties(0, &q, &mut off, &mut ties);
        let (best, limit) = (ties.best, ties.limit);
        if best == f64::INFINITY {
            return None;
        }
        out.retain(|&(_, d2)| d2 <= limit);
        out.sort_unstable_by_key(|&(i, _)| i);
        Some(best)
    }

    fn search_ties(&self, node: usize, q: &[f64; 3], off: &mut [f64; 3], t: &mut Ties) {
        let n = self.nodes[node];
        if n.dim == LEAF {
            for slot in n.a as usize..n.b as usize {
                let p = &self.coords[slot];
                let dx = p[0] - q[0];
                let dy = p[1] - q[1];
                let dz = p[2] - q[2];
                let d2 = dx * dx + dy * dy + dz * dz;
                if d2 <= t.limit {
                    t.found.push((self.ids[slot] as usize, d2));
                    if d2 < t.best {
                        t.best = d2;
                        let reach = d2.sqrt() + TIE_TOLERANCE;
                        t.limit = t.limit.min(reach * reach);
                    }
                }
            }
            return;
        }
        let d = n.dim as usize;
        let diff = q[d] - n.split;
        let (near, far) = if diff < 0.0 { (n.a, n.b) } else { (n.b, n.a) };
        self.search_ties(near as usize, q, off, t);
        let old = off[d];
        off[d] = diff.abs();
        let cell = off[0] * off[0] + off[1] * off[1] + off[2] * off[2];
        if cell <= t.limit {
            self.search_ties(far as usize, q, off, t);
        }
        off[d] = old;
    }

    // `off[d]` is the distance from `q` to the current cell along axis `d`.
    // Each is a rounded |q - split| and never exceeds the rounded per-axis
    // distance of any member of the cell, so the cell bound below is a true
    // lower bound of every member's computed squared distance.
    fn search(&self, node: usize, q: &[f64; 3], off: &mut [f64; 3], best: &mut Best) {
        let n = self.nodes[node];
        if n.dim == LEAF {
            for slot in n.a as usize..n.b as usize {
                let p = &self.coords[slot];
                let dx = p[0] - q[0];
                let dy = p[1] - q[1];
                let dz = p[2] - q[2];
                let d2 = dx * dx + dy * dy + dz * dz;
                if d2 < best.d2 || (d2 == best.d2 && self.ids[slot] < best.id) {
                    best.d2 = d2;
                    best.id = self.ids[slot];
                }
            }
            return;
        }
        let d = n.dim as usize;
        let diff = q[d] - n.split;
        let (near, far) = if diff < 0.0 { (n.a, n.b) } else { (n.b, n.a) };
        self.search(near as usize, q, off, best);
        let old = off[d];
        off[d] = diff.abs();
        let cell = off[0] * off[0] + off[1] * off[1] + off[2] * off[2];
        if cell <= best.d2 {
            self.search(far as usize, q, off, best);
        }
        off[d] = old;
    }
}

struct Best {
    d2: f64,
    id: u32,
}

struct Ties<'a> {
    best: f64,
    limit: f64,
    found: &'a mut Vec<(usize, f64)>,
}

/// Builds the subtree over `perm` (a window of the permutation starting at
/// `offset`) and returns its node id.
fn build_node(source: &[Point3], perm: &mut [u32], offset: usize, nodes: &mut Vec<Node>) -> u32 {
    let id = nodes.len() as u32;
    if perm.len() <= LEAF_SIZE {
        nodes.push(Node {
            split: 0.0,
            dim: LEAF,
            a: offset as u32,
            b: (offset + perm.len()) as u32,
        });
        return id;
    }
    let dim = widest_axis(source, perm);
    let mid = perm.len() / 2;
    perm.select_nth_unstable_by(mid, |&i, &j| {
        let (a, b) = (source[i as usize].component(dim), source[j as usize].component(dim));
        a.total_cmp(&b).then(i.cmp(&j))
    });
    let split = source[perm[mid] as usize].component(dim);
    nodes.push(Node {
        split,
        dim: dim as u8,
        a: 0,
        b: 0,
    });
    let (left, right) = perm.split_at_mut(mid);
    let l = build_node(source, left, offset, nodes);
    let r = build_node(source, right, offset + mid, nodes);
    nodes[id as usize].a = l;
    nodes[id as usize].b = r;
    id
}

fn widest_axis(source: &[Point3], perm: &[u32]) -> usize {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in perm {
        let p = source[i as usize].to_array();
        for d in 0..3 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let spread = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    let mut best = 0;
    for d in 1..3 {
        if spread[d] > spread[best] {
            best = d;
        }
    }
    best
}

pub fn build_index(cloud: &PointCloud) -> Result<SceneIndex> {
    SceneIndex::build(cloud)
}
