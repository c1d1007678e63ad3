//! Point-sampled Interaction Bisector Surface.
//!
//! The bisector between a query cloud `Q` and a scene cloud `S` is the zero
//! set of `f(p) = d(p, Q) − d(p, S)`. We evaluate `f` on the nodes of a
//! regular grid around the query, locate sign changes along grid edges and
//! refine each one by bisection, keeping it when `|f| ≤ eps_ibs`. `f` is continuous
//! (difference of two 1-Lipschitz functions), so every sign change brackets
//! a root.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point3, PointCloud, SceneIndex, Vector3};

/// Numerical parameters of bisector sampling and pruning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IbsParams {
    /// Grid nodes per axis.
    pub grid_resolution: usize,
    /// Scale applied to the query's half-extents to obtain the sampling box.
    pub bbox_expand: f64,
    /// Equidistance tolerance in meters; `None` means 1e-4 × the sampling
    /// box diagonal.
    pub eps_ibs: Option<f64>,
    pub bisection_iters: u32,
    /// Samples farther than `prune_delta × query diagonal` from the query are
    /// discarded by [`prune_ibs`].
    pub prune_delta: f64,
}

impl Default for IbsParams {
    fn default() -> Self {
        IbsParams {
            grid_resolution: 64,
            bbox_expand: 2.0,
            eps_ibs: None,
            bisection_iters: 30,
            prune_delta: 0.5,
        }
    }
}

/// Relative default for `eps_ibs`.
pub const DEFAULT_EPS_FRACTION: f64 = 1e-4;

impl IbsParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.grid_resolution < 8 {
            return bad("grid_resolution must be at least 8");
        }
        if !(self.bbox_expand >= 1.0 && self.bbox_expand.is_finite()) {
            return bad("bbox_expand must be at least 1");
        }
        if let Some(eps) = self.eps_ibs {
            if !(eps > 0.0 && eps.is_finite()) {
                return bad("eps_ibs must be positive");
            }
        }
        if self.bisection_iters < 1 {
            return bad("bisection_iters must be at least 1");
        }
        if !(self.prune_delta > 0.0) || self.prune_delta.is_nan() {
            return bad("prune_delta must be positive");
        }
        Ok(())
    }
}

/// A point on the bisector with its distances to both clouds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IbsSample {
    pub p: Point3,
    pub d_query: f64,
    pub d_scene: f64,
}

/// The regular grid the bisector is sampled on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingGrid {
    pub origin: Point3,
    pub step: Vector3,
    pub resolution: usize,
}

impl SamplingGrid {
    /// Grid over the query's bounding box with half-extents scaled by
    /// `bbox_expand`. Each half-extent is at least `bbox_expand × gap`, where
    /// `gap` is the closest query-to-scene distance, so that degenerate
    /// (flat or single-point) queries still enclose the bisector.
    pub fn around_query(query_bounds: &Aabb, gap: f64, params: &IbsParams) -> SamplingGrid {
        let center = query_bounds.center();
        let half = query_bounds.extent() * 0.5;
        let h = |v: f64| params.bbox_expand * v.max(gap);
        let half = Point3::new(h(half.x), h(half.y), h(half.z));
        let cells = (params.grid_resolution - 1) as f64;
        SamplingGrid {
            origin: center - half,
            step: half * (2.0 / cells),
            resolution: params.grid_resolution,
        }
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize, k: usize) -> Point3 {
        Point3::new(
            self.origin.x + self.step.x * i as f64,
            self.origin.y + self.step.y * j as f64,
            self.origin.z + self.step.z * k as f64,
        )
    }

    pub fn diagonal(&self) -> f64 {
        (self.step * (self.resolution - 1) as f64).norm()
    }
}

/// Output of [`sample_ibs`]: the samples plus the tolerance and grid used.
#[derive(Clone, Debug)]
pub struct Bisector {
    pub samples: Vec<IbsSample>,
    pub eps_ibs: f64,
    pub grid: SamplingGrid,
}

/// Samples the bisector between `query` (already in its interaction pose) and
/// `scene`.
///
/// Samples come out in grid-edge order (node `(i, j, k)` then axis), with
/// points closer than `eps_ibs` to an earlier sample dropped.
pub fn sample_ibs(query: &PointCloud, scene: &PointCloud, params: &IbsParams) -> Result<Bisector> {
    params.validate()?;
    let q_index = SceneIndex::build(query)?;
    let s_index = SceneIndex::build(scene)?;
    sample_ibs_indexed(&q_index, &s_index, params)
}

/// [`sample_ibs`] over prebuilt indices.
pub fn sample_ibs_indexed(
    query: &SceneIndex,
    scene: &SceneIndex,
    params: &IbsParams,
) -> Result<Bisector> {
    params.validate()?;
    let bounds = Aabb::from_points(query.points()).ok_or(Error::EmptyCloud)?;
    let gap = query
        .points()
        .par_iter()
        .map(|p| scene.nearest_squared(p).1)
        .reduce(|| f64::INFINITY, f64::min)
        .sqrt();
    let grid = SamplingGrid::around_query(&bounds, gap, params);
    let eps = params
        .eps_ibs
        .unwrap_or(DEFAULT_EPS_FRACTION * grid.diagonal());
    if !(eps > 0.0) {
        return Err(Error::DegenerateInteraction(
            "sampling box has zero extent".into(),
        ));
    }

    let field = |p: &Point3| -> f64 {
        let dq = query.nearest_squared(p).1.sqrt();
        let ds = scene.nearest_squared(p).1.sqrt();
        dq - ds
    };

    let n = grid.resolution;
    let values: Vec<f64> = (0..n * n * n)
        .into_par_iter()
        .map(|lin| {
            let (i, j, k) = (lin / (n * n), (lin / n) % n, lin % n);
            field(&grid.node(i, j, k))
        })
        .collect();

    let mut edges = Vec::new();
    for lin in 0..n * n * n {
        let (i, j, k) = (lin / (n * n), (lin / n) % n, lin % n);
        let here = values[lin] < 0.0;
        let neighbours = [
            (i + 1 < n).then(|| lin + n * n),
            (j + 1 < n).then(|| lin + n),
            (k + 1 < n).then(|| lin + 1),
        ];
        for other in neighbours.into_iter().flatten() {
            if (values[other] < 0.0) != here {
                edges.push((lin, other));
            }
        }
    }

    let node_of = |lin: usize| grid.node(lin / (n * n), (lin / n) % n, lin % n);
    let refined: Vec<Option<Point3>> = edges
        .par_iter()
        .map(|&(a, b)| {
            bisect(
                node_of(a),
                values[a],
                node_of(b),
                &field,
                eps,
                params.bisection_iters,
            )
        })
        .collect();

    let mut kept = DedupGrid::new(eps);
    let mut samples = Vec::new();
    for p in refined.into_iter().flatten() {
        if kept.insert_if_isolated(p) {
            let dq = query.nearest_squared(&p).1.sqrt();
            let ds = scene.nearest_squared(&p).1.sqrt();
            samples.push(IbsSample {
                p,
                d_query: dq,
                d_scene: ds,
            });
        }
    }
    if samples.is_empty() {
        return Err(Error::DegenerateInteraction(
            "no sign change of d(p, query) - d(p, scene) on the sampling grid".into(),
        ));
    }
    Ok(Bisector {
        samples,
        eps_ibs: eps,
        grid,
    })
}

/// Bisection on the segment `[a, b]`, where `f(a)` and `f(b)` differ in sign.
///
/// Runs all `iters` halvings (stopping only on an exact zero) and returns the
/// probe with the smallest `|f|`, or `None` when even that exceeds `eps`.
fn bisect(
    a: Point3,
    fa: f64,
    b: Point3,
    f: &impl Fn(&Point3) -> f64,
    eps: f64,
    iters: u32,
) -> Option<Point3> {
    let (mut lo, mut hi) = (a, b);
    let lo_negative = fa < 0.0;
    let mut best: Option<(f64, Point3)> = None;
    for _ in 0..iters {
        let mid = lo + (hi - lo) * 0.5;
        let fm = f(&mid);
        if best.map_or(true, |(bf, _)| fm.abs() < bf) {
            best = Some((fm.abs(), mid));
        }
        if fm == 0.0 {
            break;
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best.filter(|(bf, _)| *bf <= eps).map(|(_, p)| p)
}

/// Spatial hash used to drop samples within `radius` of an earlier one.
struct DedupGrid {
    radius: f64,
    cells: HashMap<[i64; 3], Vec<Point3>>,
}

impl DedupGrid {
    fn new(radius: f64) -> Self {
        DedupGrid {
            radius,
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: &Point3) -> [i64; 3] {
        [
            (p.x / self.radius).floor() as i64,
            (p.y / self.radius).floor() as i64,
            (p.z / self.radius).floor() as i64,
        ]
    }

    fn insert_if_isolated(&mut self, p: Point3) -> bool {
        let k = self.key(&p);
        let r2 = self.radius * self.radius;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let nk = [k[0] + dx, k[1] + dy, k[2] + dz];
                    if let Some(cell) = self.cells.get(&nk) {
                        if cell.iter().any(|q| q.distance_squared(&p) <= r2) {
                            return false;
                        }
                    }
                }
            }
        }
        self.cells.entry(k).or_default().push(p);
        true
    }
}

/// Keeps the samples with `d_query ≤ prune_delta × diag(query bounds)`, in order.
pub fn prune_ibs(
    samples: &[IbsSample],
    query: &PointCloud,
    params: &IbsParams,
) -> Result<Vec<IbsSample>> {
    let diag = query.bounds().ok_or(Error::EmptyCloud)?.diagonal();
    let limit = params.prune_delta * diag;
    let kept: Vec<IbsSample> = samples
        .iter()
        .filter(|s| s.d_query <= limit)
        .copied()
        .collect();
    if kept.is_empty() {
        return Err(Error::AllPruned(samples.len()));
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(p: [f64; 3]) -> PointCloud {
        PointCloud::new(vec![p.into()]).unwrap()
    }

    #[test]
    fn two_points_bisect_on_midplane() {
        let b = sample_ibs(&single([0.0, 0.0, 1.0]), &single([0.0, 0.0, -1.0]), &IbsParams::default()).unwrap();
        assert!(!b.samples.is_empty());
        for s in &b.samples {
            assert!(s.p.z.abs() <= b.eps_ibs, "{:?}", s);
            assert!((s.d_query - s.d_scene).abs() <= b.eps_ibs);
        }
    }

    #[test]
    fn points_on_x_axis_bisect_on_yz_plane() {
        let b = sample_ibs(&single([1.0, 0.0, 0.0]), &single([-1.0, 0.0, 0.0]), &IbsParams::default()).unwrap();
        assert!(b.samples.iter().all(|s| s.p.x.abs() <= b.eps_ibs));
    }

    #[test]
    fn coincident_clouds_are_degenerate() {
        let c = single([0.0, 0.0, 0.0]);
        let err = sample_ibs(&c, &c, &IbsParams::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateInteraction(_)));
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let c = single([0.0, 0.0, 0.0]);
        assert!(matches!(
            sample_ibs(&PointCloud::default(), &c, &IbsParams::default()),
            Err(Error::EmptyCloud)
        ));
    }

    #[test]
    fn invalid_params_are_rejected() {
        let c = single([0.0, 0.0, 0.0]);
        let d = single([0.0, 0.0, 1.0]);
        for p in [
            IbsParams { grid_resolution: 7, ..Default::default() },
            IbsParams { bbox_expand: 0.5, ..Default::default() },
            IbsParams { eps_ibs: Some(0.0), ..Default::default() },
            IbsParams { bisection_iters: 0, ..Default::default() },
            IbsParams { prune_delta: 0.0, ..Default::default() },
        ] {
            assert!(matches!(sample_ibs(&c, &d, &p), Err(Error::InvalidParams(_))));
        }
    }

    #[test]
    fn prune_keeps_everything_with_huge_delta() {
        let q = PointCloud::new(vec![Point3::new(0.0, 0.0, 1.0), Point3::new(0.1, 0.0, 1.0)]).unwrap();
        let s = single([0.0, 0.0, -1.0]);
        let b = sample_ibs(&q, &s, &IbsParams::default()).unwrap();
        let params = IbsParams { prune_delta: 1e6, ..Default::default() };
        assert_eq!(prune_ibs(&b.samples, &q, &params).unwrap(), b.samples);
    }

    #[test]
    fn prune_reports_all_pruned() {
        let q = PointCloud::new(vec![Point3::new(0.0, 0.0, 1.0), Point3::new(0.1, 0.0, 1.0)]).unwrap();
        let s = single([0.0, 0.0, -1.0]);
        let b = sample_ibs(&q, &s, &IbsParams::default()).unwrap();
        // Every sample is ~1 m from the query, the query diagonal is 0.1 m.
        let params = IbsParams { prune_delta: 0.5, ..Default::default() };
        assert!(matches!(prune_ibs(&b.samples, &q, &params), Err(Error::AllPruned(_))));
    }
}
