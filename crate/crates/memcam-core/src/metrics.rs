//! PSNR/SSIM image metrics and the reversed-sequence round-trip protocol.
//!
//! A round-trip trajectory of length `L = 1 + 2·apex` pairs frame `i` with
//! frame `L−1−i` for `i < apex`; the apex frame would pair with itself and
//! is excluded. On a perfect memory model the paired frames are identical,
//! so PSNR hits its cap and SSIM is exactly 1.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::camera::TrajectoryKind;
use crate::math;
use crate::world::Image;

/// Reported PSNR for identical images (and upper cap otherwise).
pub const PSNR_CAP_DB: f64 = 99.0;

/// SSIM constants: 11×11 Gaussian window, σ = 1.5, K1/K2 from the standard
/// formulation, 8-bit dynamic range.
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const DYNAMIC_RANGE: f64 = 255.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricsError {
    /// Images must share dimensions.
    DimensionMismatch,
    /// SSIM needs both dimensions at least the window size.
    TooSmall,
    /// Frame count does not match the declared benchmark.
    FrameCountMismatch { expected: usize, found: usize },
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::DimensionMismatch => write!(f, "image dimensions differ"),
            MetricsError::TooSmall => {
                write!(f, "images must be at least {SSIM_WINDOW} pixels on each side")
            }
            MetricsError::FrameCountMismatch { expected, found } => {
                write!(f, "expected {expected} frames, found {found}")
            }
        }
    }
}

impl core::error::Error for MetricsError {}

/// Peak signal-to-noise ratio in dB over all RGB channels, capped at
/// [`PSNR_CAP_DB`] (identical images have zero MSE).
pub fn psnr(a: &Image, b: &Image) -> Result<f64, MetricsError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(MetricsError::DimensionMismatch);
    }
    let mut sum_sq = 0.0f64;
    for (&x, &y) in a.data().iter().zip(b.data().iter()) {
        let d = x as f64 - y as f64;
        sum_sq += d * d;
    }
    let mse = sum_sq / a.data().len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    let value = 10.0 * math::log10(DYNAMIC_RANGE * DYNAMIC_RANGE / mse);
    Ok(value.min(PSNR_CAP_DB))
}

/// ITU-R BT.601 luma on the 0..255 scale.
fn luma_plane(img: &Image) -> Vec<f64> {
    img.data()
        .chunks_exact(3)
        .map(|px| 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64)
        .collect()
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = math::exp(-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable Gaussian filtering restricted to fully interior windows.
/// Returns a `(h − 10) × (w − 10)` map.
fn gaussian_filter_valid(plane: &[f64], w: usize, h: usize, kernel: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let out_w = w - (SSIM_WINDOW - 1);
    let out_h = h - (SSIM_WINDOW - 1);
    // Horizontal pass: h rows × out_w columns.
    let mut horiz = vec![0.0; h * out_w];
    for y in 0..h {
        for x in 0..out_w {
            let mut acc = 0.0;
            for (k, coeff) in kernel.iter().enumerate() {
                acc += coeff * plane[y * w + x + k];
            }
            horiz[y * out_w + x] = acc;
        }
    }
    // Vertical pass.
    let mut out = vec![0.0; out_h * out_w];
    for y in 0..out_h {
        for x in 0..out_w {
            let mut acc = 0.0;
            for (k, coeff) in kernel.iter().enumerate() {
                acc += coeff * horiz[(y + k) * out_w + x];
            }
            out[y * out_w + x] = acc;
        }
    }
    out
}

/// Mean local SSIM between two images: Gaussian-weighted moments over every
/// fully interior 11×11 window of the luma planes, averaged over window
/// centers.
pub fn ssim(a: &Image, b: &Image) -> Result<f64, MetricsError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(MetricsError::DimensionMismatch);
    }
    let (w, h) = (a.width() as usize, a.height() as usize);
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(MetricsError::TooSmall);
    }
    let la = luma_plane(a);
    let lb = luma_plane(b);
    let sq_a: Vec<f64> = la.iter().map(|v| v * v).collect();
    let sq_b: Vec<f64> = lb.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = la.iter().zip(lb.iter()).map(|(x, y)| x * y).collect();

    let kernel = gaussian_kernel();
    let mu_a = gaussian_filter_valid(&la, w, h, &kernel);
    let mu_b = gaussian_filter_valid(&lb, w, h, &kernel);
    let m_aa = gaussian_filter_valid(&sq_a, w, h, &kernel);
    let m_bb = gaussian_filter_valid(&sq_b, w, h, &kernel);
    let m_ab = gaussian_filter_valid(&ab, w, h, &kernel);

    let c1 = (SSIM_K1 * DYNAMIC_RANGE) * (SSIM_K1 * DYNAMIC_RANGE);
    let c2 = (SSIM_K2 * DYNAMIC_RANGE) * (SSIM_K2 * DYNAMIC_RANGE);
    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = m_aa[i] - ma * ma;
        let var_b = m_bb[i] - mb * mb;
        let cov = m_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
            / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
    }
    Ok(total / mu_a.len() as f64)
}

/// PSNR/SSIM of one mirrored frame pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairScore {
    pub frame_a: usize,
    pub frame_b: usize,
    pub psnr: f64,
    pub ssim: f64,
}

/// Round-trip consistency scores for a full trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundTripReport {
    pub benchmark: TrajectoryKind,
    pub segment_len: usize,
    pub pairs: Vec<PairScore>,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
}

impl RoundTripReport {
    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn from_pairs(
        benchmark: TrajectoryKind,
        segment_len: usize,
        pairs: Vec<PairScore>,
    ) -> Self {
        let n = pairs.len().max(1) as f64;
        let mean_psnr = pairs.iter().map(|p| p.psnr).sum::<f64>() / n;
        let mean_ssim = pairs.iter().map(|p| p.ssim).sum::<f64>() / n;
        Self {
            benchmark,
            segment_len,
            pairs,
            mean_psnr,
            mean_ssim,
        }
    }
}

/// The mirrored index pairs `(i, L−1−i)` for a round-trip benchmark, apex
/// excluded.
pub fn roundtrip_pairs(benchmark: TrajectoryKind, segment_len: usize) -> Vec<(usize, usize)> {
    let apex = benchmark.steps_to_apex(segment_len);
    let total = benchmark.frame_count(segment_len);
    (0..apex).map(|i| (i, total - 1 - i)).collect()
}

/// Validates a frame count against the benchmark's expected length.
pub fn check_frame_count(
    benchmark: TrajectoryKind,
    segment_len: usize,
    found: usize,
) -> Result<(), MetricsError> {
    let expected = benchmark.frame_count(segment_len);
    if found != expected {
        return Err(MetricsError::FrameCountMismatch { expected, found });
    }
    Ok(())
}

/// Scores an in-memory frame sequence under the round-trip protocol.
pub fn roundtrip_metrics(
    frames: &[Image],
    benchmark: TrajectoryKind,
    segment_len: usize,
) -> Result<RoundTripReport, MetricsError> {
    check_frame_count(benchmark, segment_len, frames.len())?;
    let pair_indices = roundtrip_pairs(benchmark, segment_len);
    let score_pair = |&(ia, ib): &(usize, usize)| -> Result<PairScore, MetricsError> {
        Ok(PairScore {
            frame_a: ia,
            frame_b: ib,
            psnr: psnr(&frames[ia], &frames[ib])?,
            ssim: ssim(&frames[ia], &frames[ib])?,
        })
    };

    #[cfg(feature = "parallel")]
    let pairs: Vec<PairScore> = {
        use rayon::prelude::*;
        pair_indices
            .par_iter()
            .map(score_pair)
            .collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let pairs: Vec<PairScore> = pair_indices
        .iter()
        .map(score_pair)
        .collect::<Result<_, _>>()?;

    Ok(RoundTripReport::from_pairs(benchmark, segment_len, pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, w: u32, h: u32, max: u8) -> Image {
        let data = (0..w as usize * h as usize * 3)
            .map(|_| rng.random_range(0..=max))
            .collect();
        Image::from_raw(w, h, data).unwrap()
    }

    #[test]
    fn psnr_identical_hits_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let img = random_image(&mut rng, 16, 12, 255);
        assert_eq!(psnr(&img, &img).unwrap(), PSNR_CAP_DB);
    }

    #[test]
    fn psnr_black_vs_white_is_zero() {
        let a = Image::filled(8, 8, [0, 0, 0]);
        let b = Image::filled(8, 8, [255, 255, 255]);
        assert_eq!(psnr(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn psnr_matches_naive_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_image(&mut rng, 20, 14, 255);
        let b = random_image(&mut rng, 20, 14, 255);
        let mut sum = 0.0;
        for y in 0..14 {
            for x in 0..20 {
                let pa = a.pixel(x, y);
                let pb = b.pixel(x, y);
                for ch in 0..3 {
                    let d = pa[ch] as f64 - pb[ch] as f64;
                    sum += d * d;
                }
            }
        }
        let mse = sum / (20.0 * 14.0 * 3.0);
        let expect = 10.0 * math::log10(255.0 * 255.0 / mse);
        assert!((psnr(&a, &b).unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn psnr_dimension_mismatch() {
        let a = Image::filled(8, 8, [0, 0, 0]);
        let b = Image::filled(8, 9, [0, 0, 0]);
        assert_eq!(psnr(&a, &b).unwrap_err(), MetricsError::DimensionMismatch);
    }

    #[test]
    fn ssim_identical_is_exactly_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let img = random_image(&mut rng, 24, 16, 255);
        assert_eq!(ssim(&img, &img).unwrap(), 1.0);
    }

    #[test]
    fn ssim_uniform_offset_below_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // Keep values ≤ 155 so the +100 offset does not clamp.
        let a = random_image(&mut rng, 24, 16, 155);
        let data: alloc::vec::Vec<u8> = a.data().iter().map(|&v| v + 100).collect();
        let b = Image::from_raw(24, 16, data).unwrap();
        let s = ssim(&a, &b).unwrap();
        assert!(s < 1.0, "ssim {s}");
        assert!(s > -1.0);
    }

    #[test]
    fn ssim_matches_naive_window_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_image(&mut rng, 20, 15, 255);
        let b = random_image(&mut rng, 20, 15, 255);

        // Direct 11×11 weighted-window reference.
        let la = luma_plane(&a);
        let lb = luma_plane(&b);
        let k1d = gaussian_kernel();
        let mut weights = [[0.0f64; SSIM_WINDOW]; SSIM_WINDOW];
        for (i, row) in weights.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = k1d[i] * k1d[j];
            }
        }
        let (w, h) = (20usize, 15usize);
        let c1 = (SSIM_K1 * 255.0) * (SSIM_K1 * 255.0);
        let c2 = (SSIM_K2 * 255.0) * (SSIM_K2 * 255.0);
        let mut total = 0.0;
        let mut count = 0;
        for cy in 0..h - SSIM_WINDOW + 1 {
            for cx in 0..w - SSIM_WINDOW + 1 {
                let (mut ma, mut mb, mut maa, mut mbb, mut mab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for i in 0..SSIM_WINDOW {
                    for j in 0..SSIM_WINDOW {
                        let va = la[(cy + i) * w + cx + j];
                        let vb = lb[(cy + i) * w + cx + j];
                        let wt = weights[i][j];
                        ma += wt * va;
                        mb += wt * vb;
                        maa += wt * va * va;
                        mbb += wt * vb * vb;
                        mab += wt * va * vb;
                    }
                }
                let (va, vb, cov) = (maa - ma * ma, mbb - mb * mb, mab - ma * mb);
                total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                    / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        let reference = total / count as f64;
        assert!((ssim(&a, &b).unwrap() - reference).abs() < 1e-6);
    }

    #[test]
    fn ssim_too_small_rejected() {
        let a = Image::filled(10, 20, [0, 0, 0]);
        assert_eq!(ssim(&a, &a).unwrap_err(), MetricsError::TooSmall);
    }

    #[test]
    fn roundtrip_pairing_shape() {
        let pairs = roundtrip_pairs(TrajectoryKind::Deg90, 76);
        assert_eq!(pairs.len(), 76);
        assert_eq!(pairs[0], (0, 152));
        assert_eq!(pairs[75], (75, 77));
        let pairs = roundtrip_pairs(TrajectoryKind::Deg360, 76);
        assert_eq!(pairs.len(), 304);
        assert_eq!(pairs[0], (0, 608));
    }

    #[test]
    fn roundtrip_frame_count_mismatch() {
        let frames: alloc::vec::Vec<Image> =
            (0..152).map(|_| Image::filled(12, 12, [1, 2, 3])).collect();
        assert_eq!(
            roundtrip_metrics(&frames, TrajectoryKind::Deg90, 76).unwrap_err(),
            MetricsError::FrameCountMismatch {
                expected: 153,
                found: 152
            }
        );
    }

    #[test]
    fn mirror_symmetric_frames_score_perfectly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let seg = 3;
        let half: alloc::vec::Vec<Image> =
            (0..=seg).map(|_| random_image(&mut rng, 16, 12, 255)).collect();
        let mut frames = half.clone();
        for i in (0..seg).rev() {
            frames.push(half[i].clone());
        }
        let report = roundtrip_metrics(&frames, TrajectoryKind::Deg90, seg).unwrap();
        assert_eq!(report.pair_count(), seg);
        for p in &report.pairs {
            assert_eq!(p.psnr, PSNR_CAP_DB);
            assert_eq!(p.ssim, 1.0);
        }
        assert_eq!(report.mean_psnr, PSNR_CAP_DB);
        assert_eq!(report.mean_ssim, 1.0);
    }

    #[test]
    fn corrupted_second_half_scores_low() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let seg = 3;
        let mut frames: alloc::vec::Vec<Image> = Vec::new();
        for _ in 0..=seg {
            frames.push(random_image(&mut rng, 16, 12, 255));
        }
        for _ in 0..seg {
            frames.push(Image::filled(16, 12, [128, 128, 128]));
        }
        let report = roundtrip_metrics(&frames, TrajectoryKind::Deg90, seg).unwrap();
        for p in &report.pairs {
            assert!(p.psnr < PSNR_CAP_DB);
            assert!(p.ssim < 0.5, "ssim {}", p.ssim);
        }
    }

    #[test]
    fn pairing_is_involutive_under_reversal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let seg = 4;
        let frames: alloc::vec::Vec<Image> =
            (0..1 + 2 * seg).map(|_| random_image(&mut rng, 14, 12, 255)).collect();
        let mut reversed = frames.clone();
        reversed.reverse();
        let a = roundtrip_metrics(&frames, TrajectoryKind::Deg90, seg).unwrap();
        let b = roundtrip_metrics(&reversed, TrajectoryKind::Deg90, seg).unwrap();
        let key = |r: &RoundTripReport| -> alloc::vec::Vec<(u64, u64)> {
            r.pairs
                .iter()
                .map(|p| (p.psnr.to_bits(), p.ssim.to_bits()))
                .collect()
        };
        assert_eq!(key(&a), key(&b));
    }
}
