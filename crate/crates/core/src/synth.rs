//! Deterministic synthetic geometry: primitives, a labeled table scene and the
//! place / hang / fill training pairs.
//!
//! Labels and normals come from the generator's own equations, never from
//! estimation on the produced cloud.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, RigidPose, Vector3};

/// Surface primitives; dimensions in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Primitive {
    /// Centered at the origin.
    Sphere { radius: f64 },
    /// Closed box centered at the origin.
    Box { size: [f64; 3] },
    /// Regular grid in the `z = 0` plane centered at the origin.
    PlaneGrid { width: f64, depth: f64 },
    /// Closed cylinder along +Z, centered at the origin.
    Cylinder { radius: f64, height: f64 },
}

/// Samples a primitive's surface at roughly `density` points per meter.
///
/// Planes and boxes use a regular grid with `round(extent × density) + 1`
/// nodes per axis; spheres and cylinders a stratified angular grid whose
/// per-ring phase is drawn from `seed`.
pub fn make_primitive(shape: &Primitive, density: f64, seed: u64) -> Result<PointCloud> {
    if !(density > 0.0 && density.is_finite()) {
        return Err(Error::InvalidDims(format!("density must be positive, got {density}")));
    }
    let positive = |vals: &[f64]| vals.iter().all(|v| *v > 0.0 && v.is_finite());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (points, normals) = match *shape {
        Primitive::Sphere { radius } if positive(&[radius]) => {
            sphere_surface(Point3::ORIGIN, radius, density, &mut rng)
        }
        Primitive::Box { size } if positive(&size) => box_surface(size, density, true),
        Primitive::PlaneGrid { width, depth } if positive(&[width, depth]) => {
            let xs = axis_nodes(width, density);
            let ys = axis_nodes(depth, density);
            let pts: Vec<Point3> = xs
                .iter()
                .flat_map(|&x| ys.iter().map(move |&y| Point3::new(x, y, 0.0)))
                .collect();
            let n = vec![Point3::new(0.0, 0.0, 1.0); pts.len()];
            (pts, n)
        }
        Primitive::Cylinder { radius, height } if positive(&[radius, height]) => {
            let phase = rng.gen::<f64>();
            cylinder_surface(radius, height, density, (true, true), phase)
        }
        _ => return Err(Error::InvalidDims(format!("{shape:?}"))),
    };
    PointCloud::with_normals(points, normals)
}

/// `round(extent × density) + 1` evenly spaced nodes on `[-extent/2, extent/2]`.
fn axis_nodes(extent: f64, density: f64) -> Vec<f64> {
    let n = ((extent * density).round() as usize).max(1) + 1;
    (0..n)
        .map(|i| -extent / 2.0 + extent * i as f64 / (n - 1) as f64)
        .collect()
}

fn sphere_surface(
    center: Point3,
    r: f64,
    density: f64,
    rng: &mut impl Rng,
) -> (Vec<Point3>, Vec<Vector3>) {
    let rings = ((PI * r * density).ceil() as usize).max(2);
    let mut pts = Vec::new();
    let mut normals = Vec::new();
    for i in 0..=rings {
        if i == 0 || i == rings {
            let n = Point3::new(0.0, 0.0, if i == 0 { 1.0 } else { -1.0 });
            pts.push(center + n * r);
            normals.push(n);
            continue;
        }
        let theta = PI * i as f64 / rings as f64;
        let (st, ct) = theta.sin_cos();
        let count = ((TAU * r * st * density).ceil() as usize).max(3);
        let phase = rng.gen::<f64>();
        for j in 0..count {
            let phi = TAU * (j as f64 + phase) / count as f64;
            let (sp, cp) = phi.sin_cos();
            let n = Point3::new(st * cp, st * sp, ct);
            pts.push(center + n * r);
            normals.push(n);
        }
    }
    (pts, normals)
}

/// Lattice nodes of an axis-aligned box surface centered at the origin.
/// With `top == false` the `+Z` face is left open.
fn box_surface(size: [f64; 3], density: f64, top: bool) -> (Vec<Point3>, Vec<Vector3>) {
    let xs = axis_nodes(size[0], density);
    let ys = axis_nodes(size[1], density);
    let zs = axis_nodes(size[2], density);
    let mut pts = Vec::new();
    let mut normals = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            for (k, &z) in zs.iter().enumerate() {
                let on_x = i == 0 || i == xs.len() - 1;
                let on_y = j == 0 || j == ys.len() - 1;
                let on_z_bottom = k == 0;
                let on_z_top = k == zs.len() - 1;
                let normal = if on_x {
                    Point3::new(if i == 0 { -1.0 } else { 1.0 }, 0.0, 0.0)
                } else if on_y {
                    Point3::new(0.0, if j == 0 { -1.0 } else { 1.0 }, 0.0)
                } else if on_z_bottom {
                    Point3::new(0.0, 0.0, -1.0)
                } else if on_z_top && top {
                    Point3::new(0.0, 0.0, 1.0)
                } else {
                    continue;
                };
                pts.push(Point3::new(x, y, z));
                normals.push(normal);
            }
        }
    }
    (pts, normals)
}

/// Cylinder along +Z centered at the origin; `caps = (bottom, top)`.
fn cylinder_surface(
    r: f64,
    h: f64,
    density: f64,
    caps: (bool, bool),
    phase: f64,
) -> (Vec<Point3>, Vec<Vector3>) {
    let around = ((TAU * r * density).ceil() as usize).max(3);
    let zs = axis_nodes(h, density);
    let mut pts = Vec::new();
    let mut normals = Vec::new();
    for &z in &zs {
        for j in 0..around {
            let phi = TAU * (j as f64 + phase) / around as f64;
            let (s, c) = phi.sin_cos();
            pts.push(Point3::new(r * c, r * s, z));
            normals.push(Point3::new(c, s, 0.0));
        }
    }
    let rings = ((r * density).round() as usize).max(1);
    for (enabled, z, nz) in [(caps.0, -h / 2.0, -1.0), (caps.1, h / 2.0, 1.0)] {
        if !enabled {
            continue;
        }
        pts.push(Point3::new(0.0, 0.0, z));
        normals.push(Point3::new(0.0, 0.0, nz));
        for ring in 1..rings {
            let rho = r * ring as f64 / rings as f64;
            let count = ((TAU * rho * density).ceil() as usize).max(3);
            for j in 0..count {
                let phi = TAU * (j as f64 + phase) / count as f64;
                let (s, c) = phi.sin_cos();
                pts.push(Point3::new(rho * c, rho * s, z));
                normals.push(Point3::new(0.0, 0.0, nz));
            }
        }
    }
    (pts, normals)
}

/// Torus around +Z centered at the origin.
fn torus_surface(major: f64, minor: f64, density: f64) -> (Vec<Point3>, Vec<Vector3>) {
    let nu = ((TAU * major * density).ceil() as usize).max(3);
    let nv = ((TAU * minor * density).ceil() as usize).max(3);
    let mut pts = Vec::with_capacity(nu * nv);
    let mut normals = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let (su, cu) = (TAU * i as f64 / nu as f64).sin_cos();
        for j in 0..nv {
            let (sv, cv) = (TAU * j as f64 / nv as f64).sin_cos();
            let n = Point3::new(cv * cu, cv * su, sv);
            let ring = Point3::new(major * cu, major * su, 0.0);
            pts.push(ring + n * minor);
            normals.push(n);
        }
    }
    (pts, normals)
}

/// Region tags of the labeled table scene.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionLabel {
    /// Horizontal, upward-facing support surface.
    FlatSupport,
    /// Surface with a horizontal normal.
    Vertical,
    /// Table border band and rim.
    Edge,
    /// Small objects resting on the table.
    Clutter,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 4] = [
        RegionLabel::FlatSupport,
        RegionLabel::Vertical,
        RegionLabel::Edge,
        RegionLabel::Clutter,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TableParams {
    /// Tabletop extent along x and y.
    pub top_width: f64,
    pub top_depth: f64,
    /// Height of the tabletop surface above the floor plane `z = 0`.
    pub height: f64,
    pub thickness: f64,
    pub leg_size: f64,
    pub leg_inset: f64,
    pub wall: bool,
    /// Distance from the tabletop's back border to the wall.
    pub wall_gap: f64,
    pub wall_height: f64,
    /// Tabletop points closer than this to the border are labeled edge.
    /// Rows lying on the band boundary up to rounding count as flat.
    pub edge_band: f64,
    pub clutter_count: usize,
    pub clutter_min: f64,
    pub clutter_max: f64,
    /// Surface samples per meter.
    pub density: f64,
    /// Uniform jitter amplitude per coordinate; 0 disables it.
    pub jitter: f64,
}

impl Default for TableParams {
    fn default() -> Self {
        TableParams {
            top_width: 1.2,
            top_depth: 0.8,
            height: 0.75,
            thickness: 0.04,
            leg_size: 0.05,
            leg_inset: 0.06,
            wall: true,
            wall_gap: 0.15,
            wall_height: 1.5,
            edge_band: 0.01,
            clutter_count: 3,
            clutter_min: 0.03,
            clutter_max: 0.06,
            density: 100.0,
            jitter: 0.0,
        }
    }
}

impl TableParams {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.top_width,
            self.top_depth,
            self.height,
            self.thickness,
            self.leg_size,
            self.wall_height,
            self.clutter_min,
            self.clutter_max,
            self.density,
        ];
        if dims.iter().any(|v| !(*v > 0.0 && v.is_finite()))
            || !(self.leg_inset >= 0.0)
            || !(self.wall_gap >= 0.0)
            || !(self.edge_band >= 0.0)
            || !(self.jitter >= 0.0)
            || self.clutter_min > self.clutter_max
            || self.thickness >= self.height
        {
            return Err(Error::InvalidDims(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneMetadata {
    pub kind: String,
    pub seed: u64,
    pub params: TableParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledScene {
    pub cloud: PointCloud,
    pub labels: Vec<RegionLabel>,
    pub metadata: SceneMetadata,
}

impl LabeledScene {
    pub fn indices_with(&self, label: RegionLabel) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == label).collect()
    }

    pub fn count(&self, label: RegionLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Sidecar document: `{kind, seed, params, counts, labels}`.
    pub fn labels_json(&self) -> String {
        let counts: serde_json::Map<String, serde_json::Value> = RegionLabel::ALL
            .iter()
            .map(|l| {
                (
                    serde_json::to_value(l).unwrap().as_str().unwrap().to_string(),
                    self.count(*l).into(),
                )
            })
            .collect();
        let doc = serde_json::json!({
            "kind": self.metadata.kind,
            "seed": self.metadata.seed,
            "params": self.metadata.params,
            "counts": counts,
            "labels": self.labels,
        });
        let mut s = serde_json::to_string_pretty(&doc).unwrap();
        s.push('\n');
        s
    }
}

#[derive(Default)]
struct Builder {
    pts: Vec<Point3>,
    normals: Vec<Vector3>,
    labels: Vec<RegionLabel>,
}

impl Builder {
    fn push(&mut self, p: Point3, n: Vector3, l: RegionLabel) {
        self.pts.push(p);
        self.normals.push(n);
        self.labels.push(l);
    }

    /// Axis-aligned rectangle; `u` and `v` index the two in-plane axes.
    fn rect(
        &mut self,
        us: &[f64],
        vs: &[f64],
        at: impl Fn(f64, f64) -> Point3,
        n: Vector3,
        l: RegionLabel,
    ) {
        for &u in us {
            for &v in vs {
                self.push(at(u, v), n, l);
            }
        }
    }
}

fn nodes(lo: f64, hi: f64, density: f64) -> Vec<f64> {
    axis_nodes(hi - lo, density)
        .into_iter()
        .map(|v| v + (lo + hi) / 2.0)
        .collect()
}

/// Table with legs, a back wall and a few boxes on top.
///
/// The tabletop is the plane `z = height` centered on the z axis; the wall is
/// the plane `y = -top_depth/2 - wall_gap`.
pub fn make_table_scene(params: &TableParams, seed: u64) -> Result<LabeledScene> {
    params.validate()?;
    let p = params;
    let d = p.density;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (hw, hd) = (p.top_width / 2.0, p.top_depth / 2.0);
    let up = Point3::new(0.0, 0.0, 1.0);
    let mut b = Builder::default();

    // Clutter footprints first so the tabletop can leave them out.
    let mut boxes: Vec<([f64; 2], [f64; 3])> = Vec::new();
    let margin = p.edge_band + p.clutter_max;
    let mut attempts = 0;
    while boxes.len() < p.clutter_count && attempts < 1000 {
        attempts += 1;
        let size = [
            rng.gen_range(p.clutter_min..=p.clutter_max),
            rng.gen_range(p.clutter_min..=p.clutter_max),
            rng.gen_range(p.clutter_min..=p.clutter_max),
        ];
        if hw <= margin || hd <= margin {
            break;
        }
        let c = [rng.gen_range(-hw + margin..hw - margin), rng.gen_range(-hd + margin..hd - margin)];
        let clear = boxes.iter().all(|(o, os)| {
            (c[0] - o[0]).abs() > (size[0] + os[0]) / 2.0 + 0.02
                || (c[1] - o[1]).abs() > (size[1] + os[1]) / 2.0 + 0.02
        });
        if clear {
            boxes.push((c, size));
        }
    }
    let under_box = |x: f64, y: f64| {
        boxes.iter().any(|(c, s)| {
            (x - c[0]).abs() <= s[0] / 2.0 && (y - c[1]).abs() <= s[1] / 2.0
        })
    };

    let xs = nodes(-hw, hw, d);
    let ys = nodes(-hd, hd, d);
    for &x in &xs {
        for &y in &ys {
            if under_box(x, y) {
                continue;
            }
            let border = (hw - x.abs()).min(hd - y.abs());
            let label = if border < p.edge_band - 1e-9 {
                RegionLabel::Edge
            } else {
                RegionLabel::FlatSupport
            };
            b.push(Point3::new(x, y, p.height), up, label);
        }
    }

    // Rim below the top row.
    let rim_z: Vec<f64> = nodes(p.height - p.thickness, p.height, d)
        .into_iter()
        .rev()
        .skip(1)
        .collect();
    for (y, ny) in [(-hd, -1.0), (hd, 1.0)] {
        b.rect(&xs, &rim_z, |x, z| Point3::new(x, y, z), Point3::new(0.0, ny, 0.0), RegionLabel::Edge);
    }
    for (x, nx) in [(-hw, -1.0), (hw, 1.0)] {
        b.rect(&ys, &rim_z, |y, z| Point3::new(x, y, z), Point3::new(nx, 0.0, 0.0), RegionLabel::Edge);
    }

    // Legs: four vertical faces each.
    let leg_top = p.height - p.thickness;
    let zs = nodes(0.0, leg_top, d);
    let hl = p.leg_size / 2.0;
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            let cx = sx * (hw - p.leg_inset);
            let cy = sy * (hd - p.leg_inset);
            let lx = nodes(cx - hl, cx + hl, d);
            let ly = nodes(cy - hl, cy + hl, d);
            let inner_x = &lx[1..lx.len() - 1];
            for (y, ny) in [(cy - hl, -1.0), (cy + hl, 1.0)] {
                b.rect(inner_x, &zs, |x, z| Point3::new(x, y, z), Point3::new(0.0, ny, 0.0), RegionLabel::Vertical);
            }
            for (x, nx) in [(cx - hl, -1.0), (cx + hl, 1.0)] {
                b.rect(&ly, &zs, |y, z| Point3::new(x, y, z), Point3::new(nx, 0.0, 0.0), RegionLabel::Vertical);
            }
        }
    }

    if p.wall {
        let y = -hd - p.wall_gap;
        let wx = nodes(-hw - 0.2, hw + 0.2, d);
        let wz = nodes(0.0, p.wall_height, d);
        b.rect(&wx, &wz, |x, z| Point3::new(x, y, z), Point3::new(0.0, 1.0, 0.0), RegionLabel::Vertical);
    }

    for (c, s) in &boxes {
        let (pts, normals) = box_surface(*s, d, true);
        let lift = Point3::new(c[0], c[1], p.height + s[2] / 2.0);
        for (q, n) in pts.into_iter().zip(normals) {
            if n.z < 0.0 {
                continue;
            }
            b.push(q + lift, n, RegionLabel::Clutter);
        }
    }

    if p.jitter > 0.0 {
        for q in &mut b.pts {
            q.x += rng.gen_range(-p.jitter..=p.jitter);
            q.y += rng.gen_range(-p.jitter..=p.jitter);
            q.z += rng.gen_range(-p.jitter..=p.jitter);
        }
    }

    Ok(LabeledScene {
        cloud: PointCloud::with_normals(b.pts, b.normals)?,
        labels: b.labels,
        metadata: SceneMetadata {
            kind: "table".into(),
            seed,
            params: *p,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Archetype {
    Place,
    Hang,
    Fill,
}

impl Archetype {
    pub const ALL: [Archetype; 3] = [Archetype::Place, Archetype::Hang, Archetype::Fill];

    pub fn descriptor_name(&self) -> &'static str {
        match self {
            Archetype::Place => "place-sphere",
            Archetype::Hang => "hang-ring",
            Archetype::Fill => "fill-box",
        }
    }
}

impl std::str::FromStr for Archetype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "place" => Ok(Archetype::Place),
            "hang" => Ok(Archetype::Hang),
            "fill" => Ok(Archetype::Fill),
            other => Err(Error::UnknownArchetype(other.to_string())),
        }
    }
}

/// Query in its own frame, scene, and the pose placing the query in the scene.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPair {
    pub query: PointCloud,
    pub scene: PointCloud,
    pub pose: RigidPose,
}

pub const PLACE_SPHERE_RADIUS: f64 = 0.05;
pub const PLACE_GAP: f64 = 0.001;
/// Scene density shared by the place patch and the default table.
pub const PLACE_PLANE_DENSITY: f64 = 100.0;
pub const HANG_RING_MAJOR: f64 = 0.04;
pub const HANG_RING_MINOR: f64 = 0.008;
pub const HANG_ROD_RADIUS: f64 = 0.01;
pub const HANG_GAP: f64 = 0.001;

/// Rotation taking +Z to +X.
const Z_TO_X: [[f64; 3]; 3] = [[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]];

/// place: sphere 1 mm above a plane patch; hang: ring around a horizontal rod;
/// fill: open box above an open cup.
pub fn make_training_pair(archetype: Archetype, seed: u64) -> Result<TrainingPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let along_x = RigidPose::new(Z_TO_X, Point3::ORIGIN)?;
    let pair = match archetype {
        Archetype::Place => {
            let (q, qn) = sphere_surface(Point3::ORIGIN, PLACE_SPHERE_RADIUS, 200.0, &mut rng);
            TrainingPair {
                query: PointCloud::with_normals(q, qn)?,
                scene: make_primitive(
                    &Primitive::PlaneGrid { width: 0.4, depth: 0.4 },
                    PLACE_PLANE_DENSITY,
                    seed,
                )?,
                pose: RigidPose::from_translation(Point3::new(
                    0.0,
                    0.0,
                    PLACE_SPHERE_RADIUS + PLACE_GAP,
                )),
            }
        }
        Archetype::Hang => {
            let (q, qn) = torus_surface(HANG_RING_MAJOR, HANG_RING_MINOR, 250.0);
            let ring = PointCloud::with_normals(q, qn)?.transformed(&along_x);
            let phase = rng.gen::<f64>();
            let (s, sn) = cylinder_surface(HANG_ROD_RADIUS, 0.3, 250.0, (true, true), phase);
            let rod = PointCloud::with_normals(s, sn)?.transformed(&along_x);
            // Ring's inner top rests 1 mm above the rod's top.
            let center_z = HANG_ROD_RADIUS + HANG_GAP - (HANG_RING_MAJOR - HANG_RING_MINOR);
            TrainingPair {
                query: ring,
                scene: rod,
                pose: RigidPose::from_translation(Point3::new(0.0, 0.0, center_z)),
            }
        }
        Archetype::Fill => {
            let (q, qn) = box_surface([0.06, 0.06, 0.04], 200.0, false);
            let phase = rng.gen::<f64>();
            let (s, sn) = cylinder_surface(0.04, 0.1, 200.0, (true, false), phase);
            let cup = PointCloud::with_normals(s, sn)?
                .transformed(&RigidPose::from_translation(Point3::new(0.0, 0.0, 0.05)));
            TrainingPair {
                query: PointCloud::with_normals(q, qn)?,
                scene: cup,
                // Box bottom 5 mm above the cup rim.
                pose: RigidPose::from_translation(Point3::new(0.0, 0.0, 0.1 + 0.005 + 0.02)),
            }
        }
    };
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_grid_count() {
        let c = make_primitive(&Primitive::PlaneGrid { width: 1.0, depth: 1.0 }, 100.0, 0).unwrap();
        assert_eq!(c.len(), 101 * 101);
    }

    #[test]
    fn sphere_points_lie_on_sphere() {
        let r = 0.1;
        let c = make_primitive(&Primitive::Sphere { radius: r }, 80.0, 5).unwrap();
        assert!(c.iter().all(|p| (p.norm() - r).abs() <= 1e-9));
    }

    #[test]
    fn box_points_lie_on_faces() {
        let c = make_primitive(&Primitive::Box { size: [0.2, 0.2, 0.2] }, 50.0, 0).unwrap();
        let on = |v: f64| (v.abs() - 0.1).abs() < 1e-12;
        assert!(c.iter().all(|p| on(p.x) || on(p.y) || on(p.z)));
        assert!(c.iter().all(|p| p.x.abs() <= 0.1 + 1e-12 && p.y.abs() <= 0.1 + 1e-12 && p.z.abs() <= 0.1 + 1e-12));
    }

    #[test]
    fn invalid_dims() {
        assert!(matches!(
            make_primitive(&Primitive::Sphere { radius: -1.0 }, 10.0, 0),
            Err(Error::InvalidDims(_))
        ));
        assert!(matches!(
            make_primitive(&Primitive::PlaneGrid { width: 1.0, depth: 1.0 }, 0.0, 0),
            Err(Error::InvalidDims(_))
        ));
    }

    #[test]
    fn unknown_archetype() {
        assert!(matches!("sit".parse::<Archetype>(), Err(Error::UnknownArchetype(_))));
    }
}
