//! View frustum construction and point membership tests.

use nalgebra::Vector3;

use super::{CameraError, CameraPose, Intrinsics};

/// Distance slack for plane membership; boundary points count as inside.
pub const PLANE_EPS: f64 = 1e-9;

/// A half-space `normal · p ≥ offset` with a unit, inward-pointing normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plane {
    pub normal: Vector3<f64>,
    pub offset: f64,
}

impl Plane {
    /// Signed distance; non-negative inside.
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// The truncated pyramid visible to a pinhole camera between its clip planes.
#[derive(Clone, Debug, PartialEq)]
pub struct Frustum {
    apex: Vector3<f64>,
    planes: [Plane; 6],
    corners: [Vector3<f64>; 8],
    near: f64,
    far: f64,
}

impl Frustum {
    /// Builds the frustum of `pose` with the given intrinsics and clip
    /// planes. Fails with [`CameraError::BadClipPlanes`] unless
    /// `0 < near < far`.
    pub fn new(
        pose: &CameraPose,
        intr: &Intrinsics,
        near: f64,
        far: f64,
    ) -> Result<Self, CameraError> {
        if !(near.is_finite() && far.is_finite() && near > 0.0 && near < far) {
            return Err(CameraError::BadClipPlanes);
        }
        let th = intr.tan_half_h();
        let tv = intr.tan_half_v();
        let r = pose.rotation();
        let t = pose.translation();
        let apex = pose.center();

        // Camera-frame half-space (n_cam, d): n_cam · p_cam ≥ d. In world
        // coordinates that becomes (Rᵀ n_cam) · p ≥ d − n_cam · t.
        let world_plane = |n_cam: Vector3<f64>, d: f64| {
            let scale = n_cam.norm();
            let n_cam = n_cam / scale;
            let d = d / scale;
            Plane {
                normal: r.transpose() * n_cam,
                offset: d - n_cam.dot(t),
            }
        };

        let planes = [
            world_plane(Vector3::new(0.0, 0.0, 1.0), near), // near: z ≥ near
            world_plane(Vector3::new(0.0, 0.0, -1.0), -far), // far: z ≤ far
            world_plane(Vector3::new(1.0, 0.0, th), 0.0),   // left: x ≥ −z·th
            world_plane(Vector3::new(-1.0, 0.0, th), 0.0),  // right: x ≤ z·th
            world_plane(Vector3::new(0.0, 1.0, tv), 0.0),   // top: y ≥ −z·tv
            world_plane(Vector3::new(0.0, -1.0, tv), 0.0),  // bottom: y ≤ z·tv
        ];

        let mut corners = [Vector3::zeros(); 8];
        let mut idx = 0;
        for &z in &[near, far] {
            for &sy in &[-1.0, 1.0] {
                for &sx in &[-1.0, 1.0] {
                    let p_cam = Vector3::new(sx * z * th, sy * z * tv, z);
                    corners[idx] = r.transpose() * (p_cam - t);
                    idx += 1;
                }
            }
        }

        Ok(Self {
            apex,
            planes,
            corners,
            near,
            far,
        })
    }

    /// True iff the point satisfies all six plane inequalities; points on a
    /// bounding plane (within [`PLANE_EPS`]) count as visible.
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        self.planes
            .iter()
            .all(|pl| pl.signed_distance(p) >= -PLANE_EPS)
    }

    pub fn apex(&self) -> &Vector3<f64> {
        &self.apex
    }

    pub fn planes(&self) -> &[Plane; 6] {
        &self.planes
    }

    /// The eight corner points, near plane first, each in `(−x,−y) (+x,−y)
    /// (−x,+y) (+x,+y)` order.
    pub fn corners(&self) -> &[Vector3<f64>; 8] {
        &self.corners
    }

    pub fn near(&self) -> f64 {
        self.near
    }

    pub fn far(&self) -> f64 {
        self.far
    }
}
