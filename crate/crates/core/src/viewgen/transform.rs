use nalgebra::{Matrix3, Rotation3};

use crate::error::{Error, Result};
use crate::geometry::mesh::{TriangleMesh, Vec3};

/// Proper rigid motion `x ↦ R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Validates the rotation block before building.
    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        let t = RigidTransform { rotation, translation };
        if !t.is_valid(1e-10) {
            return Err(Error::InvalidInput("rotation is not a proper orthonormal matrix".into()));
        }
        Ok(t)
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        let r = &self.rotation;
        r.iter().chain(self.translation.iter()).all(|v| v.is_finite())
            && (r.transpose() * r - Matrix3::identity()).abs().max() <= tol
            && (r.determinant() - 1.0).abs() <= tol
    }

    pub fn from_translation(t: Vec3) -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Rotation by `angle` radians about `axis` through `center`.
    pub fn about_axis(axis: &Vec3, angle: f64, center: &Vec3) -> Self {
        let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle).into_inner();
        RigidTransform {
            rotation: r,
            translation: center - r * center,
        }
    }

    /// Camera-frame yaw (about +y) followed by pitch (about +x), both about
    /// `center`. Angles in degrees.
    pub fn yaw_pitch(yaw_deg: f64, pitch_deg: f64, center: &Vec3) -> Self {
        let r = rot_x(pitch_deg) * rot_y(yaw_deg);
        RigidTransform {
            rotation: r,
            translation: center - r * center,
        }
    }

    pub fn apply_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// Rotation angle in degrees.
    pub fn rotation_angle_deg(&self) -> f64 {
        let c = ((self.rotation.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        c.acos().to_degrees()
    }

    /// Row-major rotation followed by translation.
    pub fn to_row(&self) -> [f64; 12] {
        let r = &self.rotation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)],
            r[(1, 0)], r[(1, 1)], r[(1, 2)],
            r[(2, 0)], r[(2, 1)], r[(2, 2)],
            self.translation.x, self.translation.y, self.translation.z,
        ]
    }

    pub fn from_row(row: &[f64]) -> Result<Self> {
        if row.len() != 12 {
            return Err(Error::format("transform", format!("expected 12 numbers, got {}", row.len())));
        }
        let rotation = Matrix3::from_row_slice(&row[..9]);
        let translation = Vec3::new(row[9], row[10], row[11]);
        let t = RigidTransform { rotation, translation };
        if !t.is_valid(1e-8) {
            return Err(Error::format("transform", "rotation block is not a proper rotation"));
        }
        Ok(t)
    }
}

/// Rotation matrix about +x by `deg` degrees (exact at multiples of 90°).
pub fn rot_x(deg: f64) -> Matrix3<f64> {
    let (s, c) = sin_cos_deg(deg);
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Rotation matrix about +y by `deg` degrees (exact at multiples of 90°).
pub fn rot_y(deg: f64) -> Matrix3<f64> {
    let (s, c) = sin_cos_deg(deg);
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// `(sin, cos)` of an angle in degrees, exact at multiples of 90°.
pub fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let r = deg.rem_euclid(360.0);
    if r == 0.0 {
        (0.0, 1.0)
    } else if r == 90.0 {
        (1.0, 0.0)
    } else if r == 180.0 {
        (0.0, -1.0)
    } else if r == 270.0 {
        (-1.0, 0.0)
    } else {
        deg.to_radians().sin_cos()
    }
}

/// `a ∘ b`: apply `b` first, then `a`.
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    RigidTransform {
        rotation: a.rotation * b.rotation,
        translation: a.rotation * b.translation + a.translation,
    }
}

pub fn inverse(t: &RigidTransform) -> RigidTransform {
    let rt = t.rotation.transpose();
    RigidTransform {
        rotation: rt,
        translation: -(rt * t.translation),
    }
}

/// Moves every vertex; connectivity, colours, texture coordinates and
/// landmarks are carried over unchanged.
pub fn apply_transform(mesh: &TriangleMesh, t: &RigidTransform) -> TriangleMesh {
    let mut out = mesh.clone();
    if *t == RigidTransform::identity() {
        return out;
    }
    for v in &mut out.vertices {
        *v = t.apply_point(v);
    }
    out
}
