use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use super::{Point3, PointCloud, ROTATION_TOLERANCE};
use crate::error::{Error, Result};

/// Proper rigid motion `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTransform", into = "RawTransform")]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidTransform {
    /// Validates orthonormality and `det(R) = 1` to within 1e-9.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidRotation("non-finite entry".into()));
        }
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).norm();
        if ortho > ROTATION_TOLERANCE {
            return Err(Error::InvalidRotation(format!(
                "|R^T R - I|_F = {ortho:e}"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(Error::InvalidRotation(format!("det(R) = {det}")));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_rotation(rotation: Rotation3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation: *rotation.matrix(),
            translation,
        }
    }

    /// Rotation of `angle_deg` degrees about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vector3<f64>, angle_deg: f64, translation: Vector3<f64>) -> Self {
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle_deg.to_radians());
        Self::from_rotation(rot, translation)
    }

    /// Euler angles in degrees, applied about x, then y, then z.
    pub fn from_euler_deg(rx: f64, ry: f64, rz: f64, translation: Vector3<f64>) -> Self {
        let rot = Rotation3::from_euler_angles(rx.to_radians(), ry.to_radians(), rz.to_radians());
        Self::from_rotation(rot, translation)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn apply_point(&self, p: &Point3) -> Point3 {
        self.rotation * p + self.translation
    }

    /// `(R^T, -R^T t)`.
    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Geodesic rotation angle in degrees.
    pub fn rotation_angle_deg(&self) -> f64 {
        rotation_angle(&self.rotation).to_degrees()
    }

    /// Row-major rotation entries.
    pub fn rotation_row_major(&self) -> [f64; 9] {
        let r = &self.rotation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)],
            r[(1, 0)], r[(1, 1)], r[(1, 2)],
            r[(2, 0)], r[(2, 1)], r[(2, 2)],
        ]
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

/// Angle of a rotation matrix in radians: `arccos((tr R − 1)/2)` evaluated as
/// `atan2(sin, cos)` so angles near zero keep full precision.
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let skew = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    (skew.norm() / 2.0).atan2(cos)
}

/// Maps every point through `t`; order and count are preserved.
pub fn apply_transform(t: &RigidTransform, cloud: &PointCloud) -> PointCloud {
    let points = cloud.points().iter().map(|p| t.apply_point(p)).collect();
    let mut out = PointCloud::new(points).expect("rigid motion of finite points is finite");
    out.id = cloud.id.clone();
    out
}

#[derive(Serialize, Deserialize)]
struct RawTransform {
    rotation: [f64; 9],
    translation: [f64; 3],
}

impl TryFrom<RawTransform> for RigidTransform {
    type Error = Error;

    fn try_from(raw: RawTransform) -> Result<Self> {
        let rotation = Matrix3::from_row_slice(&raw.rotation);
        RigidTransform::new(rotation, Vector3::from(raw.translation))
    }
}

impl From<RigidTransform> for RawTransform {
    fn from(t: RigidTransform) -> Self {
        RawTransform {
            rotation: t.rotation_row_major(),
            translation: [t.translation.x, t.translation.y, t.translation.z],
        }
    }
}
