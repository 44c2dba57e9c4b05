//! A deterministic procedural 3D environment: a cylindrical room whose wall
//! and cap cells carry distinct palette colors, rendered by per-pixel ray
//! casting. Supplies ground-truth images for any pose and an occlusion-aware
//! surface co-visibility measure.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;

use nalgebra::Vector3;

use crate::camera::{CameraPose, Intrinsics};
use crate::covis::CameraView;
use crate::math;

/// Sentinel id for rays that miss the scene (cannot happen from inside the
/// closed room, but kept for robustness).
pub const MISS: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WorldError {
    /// Rendering requires the camera center strictly inside the cylinder.
    CameraOutsideScene,
}

impl fmt::Display for WorldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorldError::CameraOutsideScene => {
                write!(f, "camera center must be strictly inside the scene")
            }
        }
    }
}

impl core::error::Error for WorldError {}

/// A cylindrical room centered on the origin with its axis vertical: a wall
/// at radius `radius` spanning `height` vertically, closed by two caps. Wall
/// cells form an `n_azimuth × n_height` grid, each cap an
/// `n_rings × n_sectors` grid, and every cell gets a distinct palette color.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SceneSpec {
    pub radius: f64,
    pub height: f64,
    pub n_azimuth: u32,
    pub n_height: u32,
    pub n_rings: u32,
    pub n_sectors: u32,
    pub palette_seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            radius: 5.0,
            height: 3.0,
            n_azimuth: 64,
            n_height: 16,
            n_rings: 8,
            n_sectors: 32,
            palette_seed: 42,
        }
    }
}

impl SceneSpec {
    pub fn wall_cell_count(&self) -> u32 {
        self.n_azimuth * self.n_height
    }

    pub fn cap_cell_count(&self) -> u32 {
        self.n_rings * self.n_sectors
    }

    /// Total number of cells: wall plus two caps.
    pub fn cell_count(&self) -> u32 {
        self.wall_cell_count() + 2 * self.cap_cell_count()
    }

    pub fn contains_camera(&self, center: &Vector3<f64>) -> bool {
        center.x * center.x + center.z * center.z < self.radius * self.radius
            && math::abs(center.y) < self.height / 2.0
    }

    /// Distinct RGB color for a cell, via a seeded 24-bit permutation; the
    /// palette is injective for any cell count up to 2²⁴.
    pub fn palette_color(&self, cell_id: u32) -> [u8; 3] {
        let v = feistel24(cell_id & 0x00FF_FFFF, self.palette_seed);
        [(v >> 16) as u8, (v >> 8) as u8, v as u8]
    }

    fn azimuth_index(&self, x: f64, z: f64, n: u32) -> u32 {
        let mut phi = math::atan2(x, z);
        if phi < 0.0 {
            phi += TAU;
        }
        (math::floor(phi / TAU * n as f64) as i64).clamp(0, n as i64 - 1) as u32
    }

    fn wall_cell(&self, hit: &Vector3<f64>) -> u32 {
        let az = self.azimuth_index(hit.x, hit.z, self.n_azimuth);
        let rel = (hit.y + self.height / 2.0) / self.height;
        let hy = (math::floor(rel * self.n_height as f64) as i64)
            .clamp(0, self.n_height as i64 - 1) as u32;
        az * self.n_height + hy
    }

    fn cap_cell(&self, hit: &Vector3<f64>, top: bool) -> u32 {
        let r = math::sqrt(hit.x * hit.x + hit.z * hit.z);
        let ring = (math::floor(r / self.radius * self.n_rings as f64) as i64)
            .clamp(0, self.n_rings as i64 - 1) as u32;
        let sector = self.azimuth_index(hit.x, hit.z, self.n_sectors);
        let base = if top {
            self.wall_cell_count()
        } else {
            self.wall_cell_count() + self.cap_cell_count()
        };
        base + ring * self.n_sectors + sector
    }
}

/// Bijective 4-round Feistel permutation of the 24-bit space.
fn feistel24(v: u32, seed: u64) -> u32 {
    let mut left = (v >> 12) & 0xFFF;
    let mut right = v & 0xFFF;
    for round in 0..4 {
        let key = math::mix_seed(seed ^ (round as u64).wrapping_mul(0x9E37_79B9));
        let f = (math::mix_seed(right as u64 ^ key) & 0xFFF) as u32;
        let new_right = left ^ f;
        left = right;
        right = new_right;
    }
    (left << 12) | right
}

/// 8-bit RGB image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl Image {
    /// Builds an image from raw RGB bytes; `data` must hold exactly
    /// `width·height·3` bytes.
    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Option<Self> {
        (data.len() == width as usize * height as usize * 3).then_some(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..width as usize * height as usize {
            data.extend_from_slice(&rgb);
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Per-pixel visible cell ids ([`MISS`] where no surface was hit).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdBuffer {
    width: u32,
    height: u32,
    ids: Vec<u32>,
}

impl IdBuffer {
    pub fn from_raw(width: u32, height: u32, ids: Vec<u32>) -> Option<Self> {
        (ids.len() == width as usize * height as usize).then_some(Self { width, height, ids })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn id(&self, x: u32, y: u32) -> u32 {
        self.ids[y as usize * self.width as usize + x as usize]
    }

    /// Marks each cell id present in the buffer in a `cell_count`-sized mask.
    pub fn visible_mask(&self, cell_count: u32) -> Vec<bool> {
        let mut mask = vec![false; cell_count as usize];
        for &id in &self.ids {
            if id != MISS {
                mask[id as usize] = true;
            }
        }
        mask
    }
}

/// Casts one primary ray per pixel center and returns the visible cell ids.
pub fn render_ids(
    scene: &SceneSpec,
    pose: &CameraPose,
    intr: &Intrinsics,
    width: u32,
    height: u32,
) -> Result<IdBuffer, WorldError> {
    let origin = pose.center();
    if !scene.contains_camera(&origin) {
        return Err(WorldError::CameraOutsideScene);
    }
    let rot_t = pose.rotation().transpose();
    let th = intr.tan_half_h();
    let tv = intr.tan_half_v();

    let render_row = |y: u32| -> Vec<u32> {
        let ny = (2.0 * (y as f64 + 0.5) / height as f64 - 1.0) * tv;
        let mut row = Vec::with_capacity(width as usize);
        for x in 0..width {
            let nx = (2.0 * (x as f64 + 0.5) / width as f64 - 1.0) * th;
            let dir = rot_t * Vector3::new(nx, ny, 1.0);
            row.push(cast_ray(scene, &origin, &dir));
        }
        row
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<u32>> = {
        use rayon::prelude::*;
        (0..height).into_par_iter().map(render_row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<u32>> = (0..height).map(render_row).collect();

    let mut ids = Vec::with_capacity(width as usize * height as usize);
    for row in rows {
        ids.extend_from_slice(&row);
    }
    Ok(IdBuffer { width, height, ids })
}

/// Renders the scene in palette colors: `render_ids` followed by the cell
/// palette, so images and id buffers are always consistent.
pub fn render(
    scene: &SceneSpec,
    pose: &CameraPose,
    intr: &Intrinsics,
    width: u32,
    height: u32,
) -> Result<Image, WorldError> {
    let ids = render_ids(scene, pose, intr, width, height)?;
    Ok(palette_map(scene, &ids))
}

/// Maps an id buffer through the scene palette ([`MISS`] renders black).
pub fn palette_map(scene: &SceneSpec, ids: &IdBuffer) -> Image {
    let mut data = Vec::with_capacity(ids.ids.len() * 3);
    for &id in &ids.ids {
        let rgb = if id == MISS {
            [0, 0, 0]
        } else {
            scene.palette_color(id)
        };
        data.extend_from_slice(&rgb);
    }
    Image {
        width: ids.width,
        height: ids.height,
        data,
    }
}

/// Nearest surface hit from an interior origin; ties on the hit parameter
/// resolve to the smaller cell id.
fn cast_ray(scene: &SceneSpec, origin: &Vector3<f64>, dir: &Vector3<f64>) -> u32 {
    let mut best_t = f64::INFINITY;
    let mut best_id = MISS;
    let mut consider = |t: f64, id: u32| {
        if t < best_t || (t == best_t && id < best_id) {
            best_t = t;
            best_id = id;
        }
    };

    let half_h = scene.height / 2.0;

    // Wall: exit root of the quadratic in the horizontal plane.
    let a = dir.x * dir.x + dir.z * dir.z;
    if a > 0.0 {
        let b = 2.0 * (origin.x * dir.x + origin.z * dir.z);
        let c = origin.x * origin.x + origin.z * origin.z - scene.radius * scene.radius;
        let disc = b * b - 4.0 * a * c;
        if disc > 0.0 {
            let t = (-b + math::sqrt(disc)) / (2.0 * a);
            if t > 0.0 {
                let hit = origin + dir * t;
                if math::abs(hit.y) <= half_h {
                    consider(t, scene.wall_cell(&hit));
                }
            }
        }
    }

    // Caps.
    if dir.y != 0.0 {
        for (cap_y, top) in [(half_h, true), (-half_h, false)] {
            let t = (cap_y - origin.y) / dir.y;
            if t > 0.0 {
                let hit = origin + dir * t;
                if hit.x * hit.x + hit.z * hit.z <= scene.radius * scene.radius {
                    consider(t, scene.cap_cell(&hit, top));
                }
            }
        }
    }

    best_id
}

/// Occlusion-aware co-visibility: the IoU of the sets of distinct cells
/// visible in `resolution × resolution` renders of the two cameras.
pub fn surface_covisibility(
    scene: &SceneSpec,
    c1: &CameraView,
    c2: &CameraView,
    resolution: u32,
) -> Result<f64, WorldError> {
    let ids1 = render_ids(scene, &c1.pose, &c1.intr, resolution, resolution)?;
    let ids2 = render_ids(scene, &c2.pose, &c2.intr, resolution, resolution)?;
    let mask1 = ids1.visible_mask(scene.cell_count());
    let mask2 = ids2.visible_mask(scene.cell_count());
    let mut union = 0u32;
    let mut inter = 0u32;
    for (a, b) in mask1.iter().zip(mask2.iter()) {
        union += (*a || *b) as u32;
        inter += (*a && *b) as u32;
    }
    Ok(if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    })
}
