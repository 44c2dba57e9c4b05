//! Camera pose algebra, view frusta, benchmark trajectories and pose parsing.
//!
//! Conventions: poses are world-to-camera rigid transforms in a right-handed
//! frame with `+x` right, `+y` down and the camera looking along `+z`. The
//! world vertical axis is `y`; positive yaw turns the camera to the right.

mod frustum;
mod re10k;
mod trajectory;

pub use frustum::{Frustum, Plane};
pub use re10k::{parse_re10k, serialize_re10k, Re10kError, Re10kRecord};
pub use trajectory::{yaw_between_deg, Trajectory, TrajectoryKind};

use core::fmt;

use nalgebra::{Matrix3, Vector3};

use crate::math;

/// Largest allowed `‖RᵀR − I‖∞` (and `|det R − 1|`) when validating an
/// externally supplied rotation.
pub const ROTATION_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CameraError {
    /// The supplied matrix is not a proper rotation (non-orthonormal or a
    /// reflection).
    NotARotation,
    /// Frustum clip planes must satisfy `0 < near < far`.
    BadClipPlanes,
    /// Field of view must lie in (0°, 180°) and aspect must be positive.
    BadIntrinsics,
}

impl fmt::Display for CameraError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CameraError::NotARotation => write!(f, "matrix is not a proper rotation"),
            CameraError::BadClipPlanes => write!(f, "clip planes must satisfy 0 < near < far"),
            CameraError::BadIntrinsics => {
                write!(f, "fov must be in (0, 180) degrees and aspect positive")
            }
        }
    }
}

impl core::error::Error for CameraError {}

/// A world-to-camera rigid transform: `x_cam = R x_world + t`.
///
/// Validated at construction; the matrix is stored exactly as supplied, so
/// `flatten`/`from_flat` round-trips are bit-exact.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl CameraPose {
    /// Builds a pose from a rotation matrix and translation vector.
    ///
    /// Rejects matrices whose orthonormality error exceeds [`ROTATION_TOL`]
    /// or whose determinant is not close to +1 (reflections included).
    pub fn from_rt(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, CameraError> {
        if !rotation.iter().all(|v| v.is_finite()) || !translation.iter().all(|v| v.is_finite()) {
            return Err(CameraError::NotARotation);
        }
        let gram = rotation.transpose() * rotation - Matrix3::identity();
        if gram.amax() > ROTATION_TOL {
            return Err(CameraError::NotARotation);
        }
        if math::abs(rotation.determinant() - 1.0) > ROTATION_TOL {
            return Err(CameraError::NotARotation);
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

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Camera center in world coordinates, `-Rᵀ t`.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// Viewing direction (`+z` of the camera frame) in world coordinates.
    pub fn forward(&self) -> Vector3<f64> {
        self.rotation.transpose() * Vector3::new(0.0, 0.0, 1.0)
    }

    /// Row-major flattening of the 3×4 matrix `[R|t]`:
    /// `out[4i + j] = R[i][j]` for `j < 3` and `out[4i + 3] = t[i]`.
    pub fn flatten(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for i in 0..3 {
            for j in 0..3 {
                out[4 * i + j] = self.rotation[(i, j)];
            }
            out[4 * i + 3] = self.translation[i];
        }
        out
    }

    /// Inverse of [`CameraPose::flatten`]; validates the rotation block.
    pub fn from_flat(flat: &[f64; 12]) -> Result<Self, CameraError> {
        let mut rotation = Matrix3::zeros();
        let mut translation = Vector3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                rotation[(i, j)] = flat[4 * i + j];
            }
            translation[i] = flat[4 * i + 3];
        }
        Self::from_rt(rotation, translation)
    }

    /// Rotation matrix for a yaw of `angle_rad` about the world vertical
    /// axis; positive angles turn a camera to the right.
    pub fn yaw_matrix(angle_rad: f64) -> Matrix3<f64> {
        let (s, c) = (math::sin(angle_rad), math::cos(angle_rad));
        Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
    }

    /// The pose obtained by yawing this camera in place (about the vertical
    /// axis through its center); the center is preserved exactly.
    pub fn yawed(&self, angle_rad: f64) -> Self {
        // x_cam = R Ry(-θ)ᵀ ... with the body rotated in world frame:
        // R' = R·Ry(-θ), t' chosen so the center -R'ᵀt' equals the old one.
        let rotation = self.rotation * Self::yaw_matrix(-angle_rad);
        let translation = -(rotation * self.center());
        Self {
            rotation,
            translation,
        }
    }

    /// Re-expresses the pose after the world is moved by the rigid map
    /// `y = Q x + s`.
    pub fn apply_world_transform(&self, q: &Matrix3<f64>, s: &Vector3<f64>) -> Self {
        let rotation = self.rotation * q.transpose();
        let translation = self.translation - rotation * s;
        Self {
            rotation,
            translation,
        }
    }
}

/// Pinhole intrinsics reduced to what frustum geometry needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intrinsics {
    fov_h_deg: f64,
    aspect: f64,
    /// Normalized pinhole parameters when parsed from a pose file.
    pub file_params: Option<FileIntrinsics>,
}

/// Normalized (resolution-independent) intrinsics as found in pose files.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FileIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(fov_h_deg: f64, aspect: f64) -> Result<Self, CameraError> {
        if !(fov_h_deg.is_finite() && fov_h_deg > 0.0 && fov_h_deg < 180.0)
            || !(aspect.is_finite() && aspect > 0.0)
        {
            return Err(CameraError::BadIntrinsics);
        }
        Ok(Self {
            fov_h_deg,
            aspect,
            file_params: None,
        })
    }

    pub fn fov_h_deg(&self) -> f64 {
        self.fov_h_deg
    }

    pub fn aspect(&self) -> f64 {
        self.aspect
    }

    /// tan of the horizontal half field of view.
    pub fn tan_half_h(&self) -> f64 {
        math::tan(self.fov_h_deg.to_radians() / 2.0)
    }

    /// tan of the vertical half field of view (horizontal extent / aspect).
    pub fn tan_half_v(&self) -> f64 {
        self.tan_half_h() / self.aspect
    }
}

impl Default for Intrinsics {
    /// 90° horizontal FOV at a 640×352 frame.
    fn default() -> Self {
        Self {
            fov_h_deg: 90.0,
            aspect: 640.0 / 352.0,
            file_params: None,
        }
    }
}
