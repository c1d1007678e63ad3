use crate::error::{Error, Result};
use crate::geometry::{Point3, RigidPose, Vector3};

const NORMAL_TOLERANCE: f64 = 1e-6;

/// An ordered list of finite 3D points with optional unit normals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    normals: Option<Vec<Vector3>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFiniteData(format!("point {i}")));
        }
        Ok(PointCloud {
            points,
            normals: None,
        })
    }

    pub fn with_normals(points: Vec<Point3>, normals: Vec<Vector3>) -> Result<Self> {
        if normals.len() != points.len() {
            return Err(Error::NormalCountMismatch {
                normals: normals.len(),
                points: points.len(),
            });
        }
        let mut cloud = PointCloud::new(points)?;
        for (i, n) in normals.iter().enumerate() {
            if !n.is_finite() {
                return Err(Error::NonFiniteData(format!("normal {i}")));
            }
            if (n.norm() - 1.0).abs() > NORMAL_TOLERANCE {
                return Err(Error::NonUnitNormal(i));
            }
        }
        cloud.normals = Some(normals);
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn normals(&self) -> Option<&[Vector3]> {
        self.normals.as_deref()
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point3> {
        self.points.iter()
    }

    /// Axis-aligned bounds, or `None` when the cloud is empty.
    pub fn bounds(&self) -> Option<Aabb> {
        Aabb::from_points(&self.points)
    }

    /// Applies `R·p + t` to every point; normals are rotated only.
    pub fn transformed(&self, pose: &RigidPose) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| pose.apply(p)).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| ns.iter().map(|n| pose.rotate(n)).collect()),
        }
    }

    /// Concatenates clouds; normals are kept only if every part has them.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a PointCloud>) -> PointCloud {
        let parts: Vec<&PointCloud> = parts.into_iter().collect();
        let points = parts.iter().flat_map(|c| c.points.iter().copied()).collect();
        let normals = parts
            .iter()
            .all(|c| c.normals.is_some())
            .then(|| {
                parts
                    .iter()
                    .flat_map(|c| c.normals.as_ref().unwrap().iter().copied())
                    .collect()
            });
        PointCloud { points, normals }
    }
}

impl<'a> IntoIterator for &'a PointCloud {
    type Item = &'a Point3;
    type IntoIter = std::slice::Iter<'a, Point3>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// Applies a rigid pose to a cloud.
pub fn transform(cloud: &PointCloud, pose: &RigidPose) -> PointCloud {
    cloud.transformed(pose)
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn from_points(points: &[Point3]) -> Option<Aabb> {
        let first = *points.first()?;
        let (min, max) = points.iter().fold((first, first), |(lo, hi), p| {
            (lo.min_by_component(p), hi.max_by_component(p))
        });
        Some(Aabb { min, max })
    }

    pub fn center(&self) -> Point3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> Vector3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_points() {
        let err = PointCloud::new(vec![Point3::new(0.0, f64::NAN, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteData(_)));
    }

    #[test]
    fn rejects_non_unit_normals() {
        let pts = vec![Point3::ORIGIN, Point3::new(1.0, 0.0, 0.0)];
        let ok = vec![Point3::new(0.0, 0.0, 1.0), Point3::new(1.0, 0.0, 0.0)];
        assert!(PointCloud::with_normals(pts.clone(), ok).is_ok());
        let bad = vec![Point3::new(0.0, 0.0, 1.0), Point3::new(1.1, 0.0, 0.0)];
        assert!(matches!(
            PointCloud::with_normals(pts.clone(), bad),
            Err(Error::NonUnitNormal(1))
        ));
        assert!(matches!(
            PointCloud::with_normals(pts, vec![]),
            Err(Error::NormalCountMismatch { .. })
        ));
    }

    #[test]
    fn bounds_and_diagonal() {
        let c = PointCloud::new(vec![Point3::new(-1.0, 0.0, 2.0), Point3::new(1.0, 2.0, 0.0)]).unwrap();
        let b = c.bounds().unwrap();
        assert_eq!(b.min, Point3::new(-1.0, 0.0, 0.0));
        assert_eq!(b.max, Point3::new(1.0, 2.0, 2.0));
        assert_eq!(b.diagonal(), 12.0f64.sqrt());
        assert!(PointCloud::default().bounds().is_none());
    }
}
