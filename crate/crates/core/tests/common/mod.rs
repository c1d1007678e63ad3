//! Fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use afford::geometry::{Point3, PointCloud};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` points uniform in the cube `[-half, half]³`.
pub fn random_cloud(n: usize, seed: u64, half: f64) -> PointCloud {
    PointCloud::new(random_points(n, seed, half)).unwrap()
}

pub fn random_points(n: usize, seed: u64, half: f64) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Point3::new(
                rng.gen_range(-half..half),
                rng.gen_range(-half..half),
                rng.gen_range(-half..half),
            )
        })
        .collect()
}

/// Exhaustive nearest member: minimal squared distance, lowest index on ties.
pub fn brute_nearest(points: &[Point3], q: &Point3) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d2 = p.distance_squared(q);
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    best
}

pub fn brute_distance(points: &[Point3], q: &Point3) -> f64 {
    brute_nearest(points, q).1.sqrt()
}

/// `n` points spread evenly over a sphere (golden-angle spiral).
pub fn fibonacci_sphere(n: usize, radius: f64, center: Point3) -> PointCloud {
    let golden = PI * (3.0 - 5f64.sqrt());
    let pts = (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            center + Point3::new(r * t.cos(), r * t.sin(), z) * radius
        })
        .collect();
    PointCloud::new(pts).unwrap()
}

/// Square grid of `nodes × nodes` points with side `side`, centered on the z axis at height `z`.
pub fn plane_grid(side: f64, nodes: usize, z: f64) -> PointCloud {
    let step = side / (nodes - 1) as f64;
    let pts = (0..nodes)
        .flat_map(|i| {
            (0..nodes).map(move |j| {
                Point3::new(-side / 2.0 + i as f64 * step, -side / 2.0 + j as f64 * step, z)
            })
        })
        .collect();
    PointCloud::new(pts).unwrap()
}

/// 500-point sphere of radius 0.1 centered at (0, 0, 0.25) over a 0.5 × 0.5 m
/// plane grid at z = 0. Returns (query, scene).
pub fn sphere_over_plane() -> (PointCloud, PointCloud) {
    (
        fibonacci_sphere(500, 0.1, Point3::new(0.0, 0.0, 0.25)),
        plane_grid(0.5, 51, 0.0),
    )
}

pub fn max_abs_delta(a: &[Point3], b: &[Point3]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(p, q)| {
            (p.x - q.x)
                .abs()
                .max((p.y - q.y).abs())
                .max((p.z - q.z).abs())
        })
        .fold(0.0, f64::max)
}
