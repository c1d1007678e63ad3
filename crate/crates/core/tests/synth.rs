use afford::geometry::{write_ply, PlyFormat, Point3, PointCloud};
use afford::synth::{
    make_primitive, make_table_scene, make_training_pair, Archetype, Primitive, RegionLabel,
    TableParams, HANG_RING_MAJOR, HANG_RING_MINOR, HANG_ROD_RADIUS, PLACE_GAP,
};
use afford::Error;

fn ply_bytes(c: &PointCloud) -> Vec<u8> {
    let mut out = Vec::new();
    write_ply(&mut out, c, PlyFormat::BinaryLittleEndian, None).unwrap();
    out
}

#[test]
fn plane_grid_count() {
    let c = make_primitive(&Primitive::PlaneGrid { width: 1.0, depth: 1.0 }, 100.0, 0).unwrap();
    assert_eq!(c.len(), 10_201);
    assert!(c.points().iter().all(|p| p.z == 0.0 && p.x.abs() <= 0.5 && p.y.abs() <= 0.5));
}

#[test]
fn sphere_points_lie_on_the_sphere() {
    for (r, seed) in [(0.05, 0), (0.3, 9), (1.7, 4)] {
        let c = make_primitive(&Primitive::Sphere { radius: r }, 80.0, seed).unwrap();
        assert!(c.len() > 10);
        assert!(c.points().iter().all(|p| (p.norm() - r).abs() <= 1e-9));
        let normals = c.normals().unwrap();
        assert!(c.points().iter().zip(normals).all(|(p, n)| (*p - *n * r).norm() <= 1e-9));
    }
}

#[test]
fn box_points_lie_on_the_faces() {
    let c = make_primitive(&Primitive::Box { size: [0.2, 0.2, 0.2] }, 100.0, 0).unwrap();
    let h = 0.1;
    let on = |v: f64| (v.abs() - h).abs() <= 1e-12;
    let inside = |v: f64| v.abs() <= h + 1e-12;
    for p in c.points() {
        assert!(on(p.x) || on(p.y) || on(p.z), "{p:?} is on no face");
        assert!(inside(p.x) && inside(p.y) && inside(p.z));
    }
    // 21³ lattice minus the 19³ interior.
    assert_eq!(c.len(), 21 * 21 * 21 - 19 * 19 * 19);
}

#[test]
fn cylinder_points_lie_on_the_surface() {
    let (r, h) = (0.1, 0.3);
    let c = make_primitive(&Primitive::Cylinder { radius: r, height: h }, 100.0, 2).unwrap();
    for p in c.points() {
        let rho = p.x.hypot(p.y);
        let side = (rho - r).abs() <= 1e-9 && p.z.abs() <= h / 2.0 + 1e-12;
        let cap = (p.z.abs() - h / 2.0).abs() <= 1e-12 && rho <= r + 1e-9;
        assert!(side || cap, "{p:?}");
    }
}

#[test]
fn invalid_dimensions() {
    for shape in [
        Primitive::Sphere { radius: 0.0 },
        Primitive::Box { size: [0.1, -0.1, 0.1] },
        Primitive::PlaneGrid { width: f64::NAN, depth: 1.0 },
        Primitive::Cylinder { radius: 0.1, height: 0.0 },
    ] {
        assert!(matches!(make_primitive(&shape, 100.0, 0), Err(Error::InvalidDims(_))));
    }
    let plane = Primitive::PlaneGrid { width: 1.0, depth: 1.0 };
    assert!(matches!(make_primitive(&plane, 0.0, 0), Err(Error::InvalidDims(_))));
    let bad = TableParams { thickness: 1.0, ..Default::default() };
    assert!(matches!(make_table_scene(&bad, 0), Err(Error::InvalidDims(_))));
}

#[test]
fn table_has_every_label() {
    let t = make_table_scene(&TableParams::default(), 0).unwrap();
    assert_eq!(t.labels.len(), t.cloud.len());
    for l in RegionLabel::ALL {
        assert!(t.count(l) > 0, "{l:?}");
    }
    let doc: serde_json::Value = serde_json::from_str(&t.labels_json()).unwrap();
    assert_eq!(doc["labels"].as_array().unwrap().len(), t.cloud.len());
    assert_eq!(doc["counts"]["flat-support"], t.count(RegionLabel::FlatSupport));
    assert_eq!(doc["seed"], 0);
}

#[test]
fn generators_are_deterministic() {
    for seed in [0, 7] {
        let a = make_table_scene(&TableParams::default(), seed).unwrap();
        let b = make_table_scene(&TableParams::default(), seed).unwrap();
        assert_eq!(a, b);
        assert_eq!(ply_bytes(&a.cloud), ply_bytes(&b.cloud));
        assert_eq!(a.labels_json(), b.labels_json());
        for arch in Archetype::ALL {
            let p = make_training_pair(arch, seed).unwrap();
            let q = make_training_pair(arch, seed).unwrap();
            assert_eq!(ply_bytes(&p.query), ply_bytes(&q.query));
            assert_eq!(ply_bytes(&p.scene), ply_bytes(&q.scene));
            assert_eq!(p.pose, q.pose);
        }
    }
    let jittered = TableParams { jitter: 0.002, ..Default::default() };
    assert_eq!(make_table_scene(&jittered, 3).unwrap(), make_table_scene(&jittered, 3).unwrap());
    assert_ne!(make_table_scene(&jittered, 3).unwrap(), make_table_scene(&jittered, 4).unwrap());
}

#[test]
fn flat_support_normals_point_up() {
    let t = make_table_scene(&TableParams::default(), 1).unwrap();
    let normals = t.cloud.normals().unwrap();
    let limit = 1f64.to_radians();
    for i in t.indices_with(RegionLabel::FlatSupport) {
        assert!(normals[i].angle_to(&Point3::new(0.0, 0.0, 1.0)) <= limit);
    }
}

/// Flat points lie on the tabletop plane inside the edge band; vertical points
/// on one of the leg faces or the wall plane, with a horizontal normal.
#[test]
fn labels_agree_with_the_generating_geometry() {
    let p = TableParams::default();
    let t = make_table_scene(&p, 2).unwrap();
    let normals = t.cloud.normals().unwrap();
    let (hw, hd) = (p.top_width / 2.0, p.top_depth / 2.0);
    let near = |a: f64, b: f64| (a - b).abs() <= 1e-9;
    let wall_y = -hd - p.wall_gap;
    let leg_faces_x: Vec<f64> = [-1.0, 1.0]
        .iter()
        .flat_map(|s: &f64| [s * (hw - p.leg_inset) - p.leg_size / 2.0, s * (hw - p.leg_inset) + p.leg_size / 2.0])
        .collect();
    let leg_faces_y: Vec<f64> = [-1.0, 1.0]
        .iter()
        .flat_map(|s: &f64| [s * (hd - p.leg_inset) - p.leg_size / 2.0, s * (hd - p.leg_inset) + p.leg_size / 2.0])
        .collect();

    for (i, (q, l)) in t.cloud.points().iter().zip(&t.labels).enumerate() {
        let n = normals[i];
        match l {
            RegionLabel::FlatSupport => {
                assert_eq!(q.z, p.height);
                assert_eq!(n, Point3::new(0.0, 0.0, 1.0));
                let border = (hw - q.x.abs()).min(hd - q.y.abs());
                assert!(border >= p.edge_band - 1e-9, "{q:?}");
            }
            RegionLabel::Vertical => {
                assert_eq!(n.z, 0.0);
                assert!((n.norm() - 1.0).abs() <= 1e-12);
                let on_wall = near(q.y, wall_y) && (0.0..=p.wall_height + 1e-9).contains(&q.z);
                let on_leg = q.z <= p.height - p.thickness + 1e-9
                    && (leg_faces_x.iter().any(|&x| near(q.x, x)) || leg_faces_y.iter().any(|&y| near(q.y, y)));
                assert!(on_wall || on_leg, "{q:?}");
                if on_wall {
                    assert_eq!(n, Point3::new(0.0, 1.0, 0.0));
                }
            }
            RegionLabel::Edge => {
                let border = (hw - q.x.abs()).min(hd - q.y.abs());
                assert!(border.abs() < p.edge_band, "{q:?}");
                assert!(q.z <= p.height && q.z >= p.height - p.thickness - 1e-9);
            }
            RegionLabel::Clutter => {
                assert!(q.z >= p.height && q.z <= p.height + p.clutter_max + 1e-9);
                assert!(n.z >= 0.0);
            }
        }
    }
}

fn min_distance(a: &PointCloud, b: &PointCloud) -> f64 {
    a.points()
        .iter()
        .flat_map(|p| b.points().iter().map(move |q| p.distance(q)))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn place_gap_is_one_millimeter() {
    for seed in [0, 1, 2] {
        let pair = make_training_pair(Archetype::Place, seed).unwrap();
        let gap = min_distance(&pair.query.transformed(&pair.pose), &pair.scene);
        assert!((gap - PLACE_GAP).abs() <= 1e-6, "{gap}");
    }
}

#[test]
fn hang_rod_passes_through_the_ring() {
    let pair = make_training_pair(Archetype::Hang, 0).unwrap();
    let ring = pair.query.transformed(&pair.pose);
    let n = ring.len() as f64;
    let c = ring.points().iter().fold(Point3::ORIGIN, |acc, p| acc + *p * (1.0 / n));
    // The ring spans a plane with normal +X; the rod runs along X at y = z = 0.
    assert!(ring.points().iter().all(|p| (p.x - c.x).abs() <= HANG_RING_MINOR + 1e-9));
    let axis_offset = c.y.hypot(c.z);
    assert!(axis_offset + HANG_ROD_RADIUS < HANG_RING_MAJOR - HANG_RING_MINOR, "{axis_offset}");
    assert!(pair.scene.points().iter().all(|p| p.y.hypot(p.z) <= HANG_ROD_RADIUS + 1e-9));
    assert!(min_distance(&ring, &pair.scene) > 0.0);
}

#[test]
fn fill_box_sits_above_the_cup() {
    let pair = make_training_pair(Archetype::Fill, 0).unwrap();
    let q = pair.query.transformed(&pair.pose).bounds().unwrap();
    let s = pair.scene.bounds().unwrap();
    assert!(q.min.z > s.min.z);
    assert!(min_distance(&pair.query.transformed(&pair.pose), &pair.scene) > 0.0);
}

#[test]
fn unknown_archetype() {
    assert!(matches!("sit".parse::<Archetype>(), Err(Error::UnknownArchetype(s)) if s == "sit"));
    for a in Archetype::ALL {
        let name = format!("{a:?}").to_lowercase();
        assert_eq!(name.parse::<Archetype>().unwrap(), a);
    }
}
