use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, Vector3};

const ORTHONORMAL_TOLERANCE: f64 = 1e-6;

pub type Matrix3 = [[f64; 3]; 3];

const IDENTITY: Matrix3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// A proper rigid motion `p ↦ R·p + t`.
///
/// The rotation is row-major and validated on construction: every entry of
/// `RᵀR − I` is within 1e-6 of zero and `det R = 1 ± 1e-6`. The JSON form is
/// `{"rotation": [[..], [..], [..]], "translation": [x, y, z]}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPose", into = "RawPose")]
pub struct RigidPose {
    rotation: Matrix3,
    translation: Point3,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPose {
    rotation: Matrix3,
    translation: Point3,
}

impl TryFrom<RawPose> for RigidPose {
    type Error = Error;

    fn try_from(raw: RawPose) -> Result<Self> {
        RigidPose::new(raw.rotation, raw.translation)
    }
}

impl From<RigidPose> for RawPose {
    fn from(p: RigidPose) -> Self {
        RawPose {
            rotation: p.rotation,
            translation: p.translation,
        }
    }
}

impl Default for RigidPose {
    fn default() -> Self {
        RigidPose::identity()
    }
}

impl RigidPose {
    pub fn new(rotation: Matrix3, translation: Point3) -> Result<Self> {
        if rotation.iter().flatten().any(|v| !v.is_finite()) || !translation.is_finite() {
            return Err(Error::InvalidPose("non-finite entry".into()));
        }
        for i in 0..3 {
            for j in 0..3 {
                let rtr: f64 = (0..3).map(|k| rotation[k][i] * rotation[k][j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                if (rtr - expected).abs() > ORTHONORMAL_TOLERANCE {
                    return Err(Error::InvalidPose(format!(
                        "rotation is not orthonormal (RᵀR[{i}][{j}] = {rtr})"
                    )));
                }
            }
        }
        let det = determinant(&rotation);
        if (det - 1.0).abs() > ORTHONORMAL_TOLERANCE {
            return Err(Error::InvalidPose(format!("det(R) = {det}, expected +1")));
        }
        Ok(RigidPose {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        RigidPose {
            rotation: IDENTITY,
            translation: Point3::ORIGIN,
        }
    }

    pub fn from_translation(t: Vector3) -> Self {
        RigidPose {
            rotation: IDENTITY,
            translation: t,
        }
    }

    /// Rotation by `yaw` radians about +Z through the origin.
    ///
    /// `yaw == 0.0` yields the exact identity matrix.
    pub fn from_yaw(yaw: f64) -> Self {
        let (s, c) = yaw.sin_cos();
        RigidPose {
            rotation: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
            translation: Point3::ORIGIN,
        }
    }

    /// Rotation by `yaw` about the vertical axis passing through `pivot`.
    pub fn yaw_about(yaw: f64, pivot: Point3) -> Self {
        let r = RigidPose::from_yaw(yaw);
        RigidPose {
            rotation: r.rotation,
            translation: pivot - r.rotate(&pivot),
        }
    }

    pub fn rotation(&self) -> &Matrix3 {
        &self.rotation
    }

    pub fn translation(&self) -> Point3 {
        self.translation
    }

    #[inline]
    pub fn rotate(&self, v: &Vector3) -> Vector3 {
        let r = &self.rotation;
        Point3::new(
            r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
            r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
            r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z,
        )
    }

    #[inline]
    pub fn apply(&self, p: &Point3) -> Point3 {
        self.rotate(p) + self.translation
    }

    pub fn inverse(&self) -> RigidPose {
        let r = &self.rotation;
        let rt = [
            [r[0][0], r[1][0], r[2][0]],
            [r[0][1], r[1][1], r[2][1]],
            [r[0][2], r[1][2], r[2][2]],
        ];
        let inv = RigidPose {
            rotation: rt,
            translation: Point3::ORIGIN,
        };
        RigidPose {
            rotation: rt,
            translation: -inv.rotate(&self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidPose) -> RigidPose {
        let a = &self.rotation;
        let b = &other.rotation;
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        RigidPose {
            rotation: m,
            translation: self.apply(&other.translation),
        }
    }
}

fn determinant(m: &Matrix3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}
