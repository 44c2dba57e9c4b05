//! Co-visibility between camera pairs as the IoU of their visible point
//! sets, estimated by Monte Carlo sampling and validated against a dense
//! lattice oracle.
//!
//! Both estimators draw points from the axis-aligned bounding box of the two
//! frusta's corners. IoU conditions on the union of the frusta, so any
//! domain covering that union gives an unbiased estimate; the tight box
//! maximises the effective sample count. One shared sample set is evaluated
//! against both cameras, which makes the result exactly symmetric in the
//! pair.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::camera::{CameraError, CameraPose, Frustum, Intrinsics};
use crate::math;

/// A camera pose together with its intrinsics.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraView {
    pub pose: CameraPose,
    pub intr: Intrinsics,
}

impl CameraView {
    pub fn new(pose: CameraPose, intr: Intrinsics) -> Self {
        Self { pose, intr }
    }

    pub fn frustum(&self, near: f64, far: f64) -> Result<Frustum, CameraError> {
        Frustum::new(&self.pose, &self.intr, near, far)
    }
}

/// Monte Carlo estimation parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovisConfig {
    pub n_samples: u32,
    pub near: f64,
    pub far: f64,
    pub seed: u64,
}

impl Default for CovisConfig {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            near: 0.1,
            far: 20.0,
            seed: 0,
        }
    }
}

/// The IoU estimate plus sample diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovisResult {
    /// Intersection over union in [0, 1]; zero when no sample hit either
    /// frustum.
    pub iou: f64,
    /// Samples visible to at least one camera.
    pub n_union: u32,
    /// Samples visible to both cameras.
    pub n_intersection: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CovisError {
    /// Propagated from frustum construction.
    BadClipPlanes,
    /// `pairwise_matrix` requires non-empty camera lists.
    EmptyInput,
}

impl fmt::Display for CovisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovisError::BadClipPlanes => write!(f, "clip planes must satisfy 0 < near < far"),
            CovisError::EmptyInput => write!(f, "camera lists must be non-empty"),
        }
    }
}

impl core::error::Error for CovisError {}

impl From<CameraError> for CovisError {
    fn from(_: CameraError) -> Self {
        CovisError::BadClipPlanes
    }
}

fn union_aabb(a: &Frustum, b: &Frustum) -> (Vector3<f64>, Vector3<f64>) {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for c in a.corners().iter().chain(b.corners().iter()) {
        for k in 0..3 {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    (lo, hi)
}

/// Monte Carlo co-visibility of two cameras: the fraction of sampled points
/// visible to both among those visible to either. Deterministic given
/// `cfg.seed`, and exactly symmetric in `(c1, c2)` because both cameras see
/// the same sample set.
pub fn covisibility(
    c1: &CameraView,
    c2: &CameraView,
    cfg: &CovisConfig,
) -> Result<CovisResult, CovisError> {
    let f1 = c1.frustum(cfg.near, cfg.far)?;
    let f2 = c2.frustum(cfg.near, cfg.far)?;
    let (lo, hi) = union_aabb(&f1, &f2);
    let ext = hi - lo;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut n_union = 0u32;
    let mut n_intersection = 0u32;
    for _ in 0..cfg.n_samples {
        let p = Vector3::new(
            lo.x + rng.random::<f64>() * ext.x,
            lo.y + rng.random::<f64>() * ext.y,
            lo.z + rng.random::<f64>() * ext.z,
        );
        let in1 = f1.contains(&p);
        let in2 = f2.contains(&p);
        n_union += (in1 || in2) as u32;
        n_intersection += (in1 && in2) as u32;
    }
    Ok(CovisResult {
        iou: ratio(n_intersection, n_union),
        n_union,
        n_intersection,
    })
}

/// Dense-grid reference for [`covisibility`]: the same IoU computed on a
/// deterministic `resolution³` lattice of cell centers over the same
/// bounding box. No randomness; serves as brute-force ground truth.
pub fn covisibility_oracle(
    c1: &CameraView,
    c2: &CameraView,
    cfg: &CovisConfig,
    resolution: u32,
) -> Result<f64, CovisError> {
    assert!(resolution >= 16, "oracle resolution must be >= 16");
    let f1 = c1.frustum(cfg.near, cfg.far)?;
    let f2 = c2.frustum(cfg.near, cfg.far)?;
    let (lo, hi) = union_aabb(&f1, &f2);
    let step = (hi - lo) / resolution as f64;

    let count_slab = |i: u32| {
        let x = lo.x + (i as f64 + 0.5) * step.x;
        let mut n_union = 0u64;
        let mut n_intersection = 0u64;
        for j in 0..resolution {
            let y = lo.y + (j as f64 + 0.5) * step.y;
            for k in 0..resolution {
                let z = lo.z + (k as f64 + 0.5) * step.z;
                let p = Vector3::new(x, y, z);
                let in1 = f1.contains(&p);
                let in2 = f2.contains(&p);
                n_union += (in1 || in2) as u64;
                n_intersection += (in1 && in2) as u64;
            }
        }
        (n_union, n_intersection)
    };

    #[cfg(feature = "parallel")]
    let slabs: Vec<(u64, u64)> = {
        use rayon::prelude::*;
        (0..resolution).into_par_iter().map(count_slab).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let slabs: Vec<(u64, u64)> = (0..resolution).map(count_slab).collect();

    let n_union: u64 = slabs.iter().map(|s| s.0).sum();
    let n_intersection: u64 = slabs.iter().map(|s| s.1).sum();
    Ok(if n_union == 0 {
        0.0
    } else {
        n_intersection as f64 / n_union as f64
    })
}

fn ratio(num: u32, den: u32) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// A dense `|pred| × |hist|` score matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Seed for the `(i, j)` entry of a pairwise matrix. Symmetric in `(i, j)`
/// so that a matrix over identical lists is exactly symmetric; entries are
/// otherwise independent and reproducible regardless of evaluation order.
pub fn pair_seed(base: u64, i: usize, j: usize) -> u64 {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    math::derive_seed(base, a as u64, b as u64)
}

/// Scores every predicted camera against every historical camera. Entry
/// `(i, j)` equals `covisibility(pred[i], hist[j])` run with a seed derived
/// from `(cfg.seed, i, j)`, so results do not depend on evaluation order or
/// thread count.
pub fn pairwise_matrix(
    pred: &[CameraView],
    hist: &[CameraView],
    cfg: &CovisConfig,
) -> Result<ScoreMatrix, CovisError> {
    if pred.is_empty() || hist.is_empty() {
        return Err(CovisError::EmptyInput);
    }
    let cols = hist.len();
    let row_of = |i: usize| -> Result<Vec<f64>, CovisError> {
        let mut row = Vec::with_capacity(cols);
        for (j, h) in hist.iter().enumerate() {
            let entry_cfg = CovisConfig {
                seed: pair_seed(cfg.seed, i, j),
                ..*cfg
            };
            row.push(covisibility(&pred[i], h, &entry_cfg)?.iou);
        }
        Ok(row)
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..pred.len())
            .into_par_iter()
            .map(row_of)
            .collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<f64>> = (0..pred.len()).map(row_of).collect::<Result<_, _>>()?;

    let mut data = Vec::with_capacity(pred.len() * cols);
    for row in rows {
        data.extend_from_slice(&row);
    }
    Ok(ScoreMatrix {
        rows: pred.len(),
        cols,
        data,
    })
}
