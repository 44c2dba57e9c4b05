//! Toy-scale numerics for the context compression path: patchify
//! tokenisation, the strided context compressor with its
//! patchify-extension initialisation, pooled rotary positions, and the
//! additive camera-conditioning op.
//!
//! Prediction latents are tokenised by `patchify` (p×p spatial patches);
//! context latents go through `compress_context`, whose 2p×2p stride yields
//! one quarter of the patchify token count while leaving the temporal
//! dimension untouched. Initialising the compressor from patchify weights
//! guarantees that block-constant inputs produce exactly the tokens the
//! pre-trained patchify would see on a 2× downsampled latent.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompressError {
    /// Input dimensions do not match the operation's requirements.
    ShapeMismatch,
    /// Rotary rotation needs an even channel count per axis group.
    OddChannels,
}

impl fmt::Display for CompressError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompressError::ShapeMismatch => write!(f, "input shape mismatch"),
            CompressError::OddChannels => write!(f, "channel count must be even"),
        }
    }
}

impl core::error::Error for CompressError {}

/// Whether a latent grid belongs to the prediction sequence or the context.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenOrigin {
    Prediction,
    Context,
}

/// A `(T, H, W, C)` latent grid of finite reals.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenGrid {
    pub t: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub values: Vec<f64>,
    pub origin: TokenOrigin,
}

impl TokenGrid {
    pub fn new(
        t: usize,
        h: usize,
        w: usize,
        c: usize,
        values: Vec<f64>,
        origin: TokenOrigin,
    ) -> Result<Self, CompressError> {
        if t == 0 || h == 0 || w == 0 || c == 0 || values.len() != t * h * w * c {
            return Err(CompressError::ShapeMismatch);
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(CompressError::ShapeMismatch);
        }
        Ok(Self {
            t,
            h,
            w,
            c,
            values,
            origin,
        })
    }

    pub fn zeros(t: usize, h: usize, w: usize, c: usize, origin: TokenOrigin) -> Self {
        Self {
            t,
            h,
            w,
            c,
            values: vec![0.0; t * h * w * c],
            origin,
        }
    }

    #[inline]
    pub fn get(&self, ti: usize, y: usize, x: usize, ch: usize) -> f64 {
        self.values[((ti * self.h + y) * self.w + x) * self.c + ch]
    }

    #[inline]
    pub fn set(&mut self, ti: usize, y: usize, x: usize, ch: usize, v: f64) {
        self.values[((ti * self.h + y) * self.w + x) * self.c + ch] = v;
    }
}

/// Real-valued rotary position of one token.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RopePos {
    pub t: f64,
    pub h: f64,
    pub w: f64,
}

/// A flat token sequence with per-token positions.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenSequence {
    pub n: usize,
    pub c: usize,
    pub values: Vec<f64>,
    pub positions: Vec<RopePos>,
}

impl TokenSequence {
    #[inline]
    pub fn token(&self, i: usize) -> &[f64] {
        &self.values[i * self.c..(i + 1) * self.c]
    }
}

/// Patchify weights: a linear map over p×p spatial patches (temporal extent
/// one), `kernel[c_out][c_in][i][j]` stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchifyWeights {
    pub c_out: usize,
    pub c_in: usize,
    pub p: usize,
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
}

impl PatchifyWeights {
    pub fn new(
        c_out: usize,
        c_in: usize,
        p: usize,
        kernel: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self, CompressError> {
        if p == 0
            || c_out == 0
            || c_in == 0
            || kernel.len() != c_out * c_in * p * p
            || bias.len() != c_out
            || !kernel.iter().chain(bias.iter()).all(|v| v.is_finite())
        {
            return Err(CompressError::ShapeMismatch);
        }
        Ok(Self {
            c_out,
            c_in,
            p,
            kernel,
            bias,
        })
    }

    #[inline]
    fn k(&self, co: usize, ci: usize, i: usize, j: usize) -> f64 {
        self.kernel[((co * self.c_in + ci) * self.p + i) * self.p + j]
    }
}

/// Context compressor weights: one strided convolution with a 2p×2p kernel,
/// stride (1, 2p, 2p); the temporal dimension is left uncompressed.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressorWeights {
    pub c_out: usize,
    pub c_in: usize,
    /// Base patch size; the kernel support and stride are `2p`.
    pub p: usize,
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
}

impl CompressorWeights {
    pub fn new(
        c_out: usize,
        c_in: usize,
        p: usize,
        kernel: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self, CompressError> {
        if p == 0
            || c_out == 0
            || c_in == 0
            || kernel.len() != c_out * c_in * 4 * p * p
            || bias.len() != c_out
            || !kernel.iter().chain(bias.iter()).all(|v| v.is_finite())
        {
            return Err(CompressError::ShapeMismatch);
        }
        Ok(Self {
            c_out,
            c_in,
            p,
            kernel,
            bias,
        })
    }

    #[inline]
    fn k(&self, co: usize, ci: usize, i: usize, j: usize) -> f64 {
        let s = 2 * self.p;
        self.kernel[((co * self.c_in + ci) * s + i) * s + j]
    }
}

/// Single-layer camera encoder: a C×12 linear map plus bias.
#[derive(Clone, Debug, PartialEq)]
pub struct CamEncoderWeights {
    pub c: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl CamEncoderWeights {
    pub fn new(c: usize, weight: Vec<f64>, bias: Vec<f64>) -> Result<Self, CompressError> {
        if c == 0
            || weight.len() != c * 12
            || bias.len() != c
            || !weight.iter().chain(bias.iter()).all(|v| v.is_finite())
        {
            return Err(CompressError::ShapeMismatch);
        }
        Ok(Self { c, weight, bias })
    }

    /// `w · cam + b`.
    pub fn encode(&self, cam: &[f64; 12]) -> Vec<f64> {
        (0..self.c)
            .map(|co| {
                let mut acc = self.bias[co];
                for (j, &v) in cam.iter().enumerate() {
                    acc += self.weight[co * 12 + j] * v;
                }
                acc
            })
            .collect()
    }
}

/// Tokenises a latent grid into non-overlapping p×p spatial patches per
/// frame. Token positions are the integer `(t, patch_row, patch_col)`
/// lattice. Requires `H` and `W` divisible by `p` and matching channels.
pub fn patchify(grid: &TokenGrid, w: &PatchifyWeights) -> Result<TokenSequence, CompressError> {
    if grid.c != w.c_in || grid.h % w.p != 0 || grid.w % w.p != 0 {
        return Err(CompressError::ShapeMismatch);
    }
    let (ph, pw) = (grid.h / w.p, grid.w / w.p);
    let n = grid.t * ph * pw;
    let mut values = Vec::with_capacity(n * w.c_out);
    let mut positions = Vec::with_capacity(n);
    for ti in 0..grid.t {
        for by in 0..ph {
            for bx in 0..pw {
                for co in 0..w.c_out {
                    let mut acc = w.bias[co];
                    for ci in 0..w.c_in {
                        for i in 0..w.p {
                            for j in 0..w.p {
                                acc += w.k(co, ci, i, j)
                                    * grid.get(ti, by * w.p + i, bx * w.p + j, ci);
                            }
                        }
                    }
                    values.push(acc);
                }
                positions.push(RopePos {
                    t: ti as f64,
                    h: by as f64,
                    w: bx as f64,
                });
            }
        }
    }
    Ok(TokenSequence {
        n,
        c: w.c_out,
        values,
        positions,
    })
}

/// Compresses a context grid with the strided 2p×2p convolution, producing
/// one quarter of the patchify token count. Spatial positions are the
/// average of each 2×2 group of patchify lattice positions; temporal
/// positions are shifted by `time_offset` to keep context tokens disjoint
/// from the prediction range.
pub fn compress_context(
    grid: &TokenGrid,
    w: &CompressorWeights,
    time_offset: f64,
) -> Result<TokenSequence, CompressError> {
    if grid.origin != TokenOrigin::Context {
        return Err(CompressError::ShapeMismatch);
    }
    let s = 2 * w.p;
    if grid.c != w.c_in || grid.h % s != 0 || grid.w % s != 0 {
        return Err(CompressError::ShapeMismatch);
    }
    let (gh, gw) = (grid.h / s, grid.w / s);
    let n = grid.t * gh * gw;
    let mut values = Vec::with_capacity(n * w.c_out);
    let mut positions = Vec::with_capacity(n);
    for ti in 0..grid.t {
        for by in 0..gh {
            for bx in 0..gw {
                for co in 0..w.c_out {
                    let mut acc = w.bias[co];
                    for ci in 0..w.c_in {
                        for i in 0..s {
                            for j in 0..s {
                                acc +=
                                    w.k(co, ci, i, j) * grid.get(ti, by * s + i, bx * s + j, ci);
                            }
                        }
                    }
                    values.push(acc);
                }
                // Mean of patchify positions {2b, 2b+1} along each axis.
                positions.push(RopePos {
                    t: time_offset + ti as f64,
                    h: 2.0 * by as f64 + 0.5,
                    w: 2.0 * bx as f64 + 0.5,
                });
            }
        }
    }
    Ok(TokenSequence {
        n,
        c: w.c_out,
        values,
        positions,
    })
}

/// Extends patchify weights to compressor weights by tiling the p×p kernel
/// over the 2p×2p support, each tile scaled by 1/4, with the bias copied.
///
/// Guarantee: for any context grid that is constant over every 2p×2p
/// spatial block, `compress_context` with these weights reproduces
/// `patchify` applied to the 2×2 average-pooled grid, token for token. On
/// general inputs the two paths differ.
pub fn init_from_patchify(w: &PatchifyWeights) -> CompressorWeights {
    let s = 2 * w.p;
    let mut kernel = vec![0.0; w.c_out * w.c_in * s * s];
    for co in 0..w.c_out {
        for ci in 0..w.c_in {
            for i in 0..s {
                for j in 0..s {
                    kernel[((co * w.c_in + ci) * s + i) * s + j] =
                        w.k(co, ci, i % w.p, j % w.p) / 4.0;
                }
            }
        }
    }
    CompressorWeights {
        c_out: w.c_out,
        c_in: w.c_in,
        p: w.p,
        kernel,
        bias: w.bias.clone(),
    }
}

/// How token channels are split into rotary pairs across the (t, h, w) axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RopeLayout {
    pub pairs_t: usize,
    pub pairs_h: usize,
    pub pairs_w: usize,
}

impl RopeLayout {
    pub fn new(pairs_t: usize, pairs_h: usize, pairs_w: usize) -> Self {
        Self {
            pairs_t,
            pairs_h,
            pairs_w,
        }
    }

    /// Splits `c` channels into pairs with the spatial axes taking
    /// `⌊(c/2)/3⌋` pairs each and the temporal axis the remainder.
    pub fn split_evenly(c: usize) -> Result<Self, CompressError> {
        if c == 0 || c % 2 != 0 {
            return Err(CompressError::OddChannels);
        }
        let pairs = c / 2;
        let spatial = pairs / 3;
        Ok(Self {
            pairs_t: pairs - 2 * spatial,
            pairs_h: spatial,
            pairs_w: spatial,
        })
    }

    pub fn channels(&self) -> usize {
        2 * (self.pairs_t + self.pairs_h + self.pairs_w)
    }
}

/// Applies rotary rotation per axis group: pair `i` of an axis with `d`
/// channels rotates by `position · base^(−2i/d)`. Norm-preserving per pair;
/// inner products of rotated queries and keys depend only on position
/// differences.
pub fn rope_rotate(
    seq: &TokenSequence,
    layout: &RopeLayout,
    base: f64,
) -> Result<TokenSequence, CompressError> {
    if seq.c % 2 != 0 {
        return Err(CompressError::OddChannels);
    }
    if layout.channels() != seq.c {
        return Err(CompressError::ShapeMismatch);
    }
    let mut out = seq.values.clone();
    for tok in 0..seq.n {
        let pos = seq.positions[tok];
        let base_idx = tok * seq.c;
        let mut ch = 0;
        for (pairs, coord) in [
            (layout.pairs_t, pos.t),
            (layout.pairs_h, pos.h),
            (layout.pairs_w, pos.w),
        ] {
            let d_axis = 2 * pairs;
            for i in 0..pairs {
                let freq = math::powf(base, -2.0 * i as f64 / d_axis as f64);
                let angle = coord * freq;
                let (sin, cos) = (math::sin(angle), math::cos(angle));
                let x = out[base_idx + ch];
                let y = out[base_idx + ch + 1];
                out[base_idx + ch] = x * cos - y * sin;
                out[base_idx + ch + 1] = x * sin + y * cos;
                ch += 2;
            }
        }
    }
    Ok(TokenSequence {
        n: seq.n,
        c: seq.c,
        values: out,
        positions: seq.positions.clone(),
    })
}

/// Adds the encoded per-frame camera vector to every token of that frame
/// (`F_out = F_in + encoder(cam)`, the encoding broadcast over the frame's
/// tokens). `seq` must hold `frames` equal-sized groups of tokens in frame
/// order, and the encoder output width must match the token channels.
pub fn camera_condition(
    seq: &TokenSequence,
    frames: usize,
    cams: &[[f64; 12]],
    w: &CamEncoderWeights,
) -> Result<TokenSequence, CompressError> {
    if frames == 0 || cams.len() != frames || seq.n % frames != 0 || w.c != seq.c {
        return Err(CompressError::ShapeMismatch);
    }
    let per_frame = seq.n / frames;
    let mut values = seq.values.clone();
    for (f, cam) in cams.iter().enumerate() {
        let enc = w.encode(cam);
        for tok in f * per_frame..(f + 1) * per_frame {
            for (ch, e) in enc.iter().enumerate() {
                values[tok * seq.c + ch] += e;
            }
        }
    }
    Ok(TokenSequence {
        n: seq.n,
        c: seq.c,
        values,
        positions: seq.positions.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(
        rng: &mut ChaCha8Rng,
        t: usize,
        h: usize,
        w: usize,
        c: usize,
        origin: TokenOrigin,
    ) -> TokenGrid {
        let values = (0..t * h * w * c).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        TokenGrid::new(t, h, w, c, values, origin).unwrap()
    }

    fn random_patchify(rng: &mut ChaCha8Rng, c_out: usize, c_in: usize, p: usize) -> PatchifyWeights {
        let kernel = (0..c_out * c_in * p * p)
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        let bias = (0..c_out).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        PatchifyWeights::new(c_out, c_in, p, kernel, bias).unwrap()
    }

    /// Plain 2×2 average pooling of adjacent pixels (the spatial downsample
    /// the compressor is meant to shadow).
    fn downsample2(grid: &TokenGrid) -> TokenGrid {
        let mut out = TokenGrid::zeros(grid.t, grid.h / 2, grid.w / 2, grid.c, grid.origin);
        for ti in 0..grid.t {
            for y in 0..grid.h / 2 {
                for x in 0..grid.w / 2 {
                    for ch in 0..grid.c {
                        let acc = grid.get(ti, 2 * y, 2 * x, ch)
                            + grid.get(ti, 2 * y, 2 * x + 1, ch)
                            + grid.get(ti, 2 * y + 1, 2 * x, ch)
                            + grid.get(ti, 2 * y + 1, 2 * x + 1, ch);
                        out.set(ti, y, x, ch, acc / 4.0);
                    }
                }
            }
        }
        out
    }

    /// A grid that is constant over every 2p×2p spatial block.
    fn block_constant_grid(
        rng: &mut ChaCha8Rng,
        t: usize,
        h: usize,
        w: usize,
        c: usize,
        p: usize,
    ) -> TokenGrid {
        let s = 2 * p;
        let mut grid = TokenGrid::zeros(t, h, w, c, TokenOrigin::Context);
        for ti in 0..t {
            for by in 0..h / s {
                for bx in 0..w / s {
                    for ch in 0..c {
                        let v = rng.random::<f64>() * 2.0 - 1.0;
                        for i in 0..s {
                            for j in 0..s {
                                grid.set(ti, by * s + i, bx * s + j, ch, v);
                            }
                        }
                    }
                }
            }
        }
        grid
    }

    #[test]
    fn patchify_token_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let grid = random_grid(&mut rng, 1, 8, 8, 4, TokenOrigin::Prediction);
        let w = random_patchify(&mut rng, 6, 4, 2);
        let seq = patchify(&grid, &w).unwrap();
        assert_eq!(seq.n, 16);
        assert_eq!(seq.c, 6);
        assert_eq!(seq.positions[0], RopePos { t: 0.0, h: 0.0, w: 0.0 });
        assert_eq!(seq.positions[5], RopePos { t: 0.0, h: 1.0, w: 1.0 });
    }

    #[test]
    fn patchify_zero_kernel_yields_bias() {
        let grid = TokenGrid::new(
            1,
            4,
            4,
            2,
            (0..32).map(|i| i as f64).collect(),
            TokenOrigin::Prediction,
        )
        .unwrap();
        let w = PatchifyWeights::new(3, 2, 2, vec![0.0; 3 * 2 * 4], vec![1.5, -2.0, 0.25]).unwrap();
        let seq = patchify(&grid, &w).unwrap();
        for tok in 0..seq.n {
            assert_eq!(seq.token(tok), &[1.5, -2.0, 0.25]);
        }
    }

    #[test]
    fn patchify_matches_naive_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let grid = random_grid(&mut rng, 2, 6, 4, 3, TokenOrigin::Prediction);
        let w = random_patchify(&mut rng, 5, 3, 2);
        let seq = patchify(&grid, &w).unwrap();
        // Independent index arithmetic for one scattered sample of tokens.
        let (ph, pw) = (3, 2);
        for &(ti, by, bx) in &[(0, 0, 0), (1, 2, 1), (0, 1, 1), (1, 0, 0)] {
            let tok = (ti * ph + by) * pw + bx;
            for co in 0..5 {
                let mut acc = w.bias[co];
                for ci in 0..3 {
                    for i in 0..2 {
                        for j in 0..2 {
                            acc += w.k(co, ci, i, j) * grid.get(ti, by * 2 + i, bx * 2 + j, ci);
                        }
                    }
                }
                assert!((seq.token(tok)[co] - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn patchify_shape_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grid = random_grid(&mut rng, 1, 6, 6, 4, TokenOrigin::Prediction);
        let w = random_patchify(&mut rng, 2, 4, 4); // 6 % 4 != 0
        assert_eq!(patchify(&grid, &w).unwrap_err(), CompressError::ShapeMismatch);
    }

    #[test]
    fn compressor_quarters_token_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random_patchify(&mut rng, 6, 4, 2);
        let cw = init_from_patchify(&w);
        for t in [1usize, 3] {
            let grid = random_grid(&mut rng, t, 8, 8, 4, TokenOrigin::Context);
            let compressed = compress_context(&grid, &cw, 100.0).unwrap();
            let full = patchify(
                &TokenGrid {
                    origin: TokenOrigin::Prediction,
                    ..grid.clone()
                },
                &w,
            )
            .unwrap();
            assert_eq!(compressed.n * 4, full.n);
            assert_eq!(compressed.n, t * 4);
            // Temporal count unchanged: distinct t coordinates.
            let mut ts: Vec<i64> = compressed.positions.iter().map(|p| p.t as i64).collect();
            ts.sort_unstable();
            ts.dedup();
            assert_eq!(ts.len(), t);
        }
    }

    #[test]
    fn compressed_positions_are_pooled_lattice_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_patchify(&mut rng, 4, 4, 2);
        let cw = init_from_patchify(&w);
        let grid = random_grid(&mut rng, 1, 8, 8, 4, TokenOrigin::Context);
        let seq = compress_context(&grid, &cw, 20.0).unwrap();
        let hs: Vec<f64> = seq.positions.iter().map(|p| p.h).collect();
        let ws: Vec<f64> = seq.positions.iter().map(|p| p.w).collect();
        for v in hs.iter().chain(ws.iter()) {
            assert!(*v == 0.5 || *v == 2.5, "coord {v}");
        }
        assert!(seq.positions.iter().all(|p| p.t == 20.0));
    }

    #[test]
    fn compress_requires_context_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = random_patchify(&mut rng, 4, 4, 2);
        let cw = init_from_patchify(&w);
        let grid = random_grid(&mut rng, 1, 8, 8, 4, TokenOrigin::Prediction);
        assert_eq!(
            compress_context(&grid, &cw, 0.0).unwrap_err(),
            CompressError::ShapeMismatch
        );
    }

    #[test]
    fn init_equivalence_on_constant_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = random_patchify(&mut rng, 5, 3, 2);
        let cw = init_from_patchify(&w);
        let grid = TokenGrid::new(
            1,
            8,
            8,
            3,
            vec![0.7; 8 * 8 * 3],
            TokenOrigin::Context,
        )
        .unwrap();
        let compressed = compress_context(&grid, &cw, 0.0).unwrap();
        let down = TokenGrid {
            origin: TokenOrigin::Prediction,
            ..downsample2(&grid)
        };
        let reference = patchify(&down, &w).unwrap();
        for (a, b) in compressed.values.iter().zip(reference.values.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn init_equivalence_on_block_constant_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let w = random_patchify(&mut rng, 6, 4, 2);
            let cw = init_from_patchify(&w);
            let grid = block_constant_grid(&mut rng, 2, 8, 12, 4, 2);
            let compressed = compress_context(&grid, &cw, 0.0).unwrap();
            let down = TokenGrid {
                origin: TokenOrigin::Prediction,
                ..downsample2(&grid)
            };
            let reference = patchify(&down, &w).unwrap();
            assert_eq!(compressed.n, reference.n);
            for (a, b) in compressed.values.iter().zip(reference.values.iter()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn init_equivalence_fails_on_general_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = random_patchify(&mut rng, 6, 4, 2);
        let cw = init_from_patchify(&w);
        let grid = random_grid(&mut rng, 1, 8, 8, 4, TokenOrigin::Context);
        let compressed = compress_context(&grid, &cw, 0.0).unwrap();
        let down = TokenGrid {
            origin: TokenOrigin::Prediction,
            ..downsample2(&grid)
        };
        let reference = patchify(&down, &w).unwrap();
        let max_diff = compressed
            .values
            .iter()
            .zip(reference.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_diff > 1e-9, "paths unexpectedly equal");
    }

    #[test]
    fn rope_identity_at_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let values: Vec<f64> = (0..12).map(|_| rng.random::<f64>()).collect();
        let seq = TokenSequence {
            n: 1,
            c: 12,
            values: values.clone(),
            positions: vec![RopePos { t: 0.0, h: 0.0, w: 0.0 }],
        };
        let layout = RopeLayout::split_evenly(12).unwrap();
        let out = rope_rotate(&seq, &layout, 10_000.0).unwrap();
        assert_eq!(out.values, values);
    }

    #[test]
    fn rope_preserves_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = 16;
        let layout = RopeLayout::split_evenly(c).unwrap();
        for _ in 0..20 {
            let values: Vec<f64> = (0..c).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let pos = RopePos {
                t: rng.random::<f64>() * 50.0,
                h: rng.random::<f64>() * 50.0,
                w: rng.random::<f64>() * 50.0,
            };
            let seq = TokenSequence {
                n: 1,
                c,
                values: values.clone(),
                positions: vec![pos],
            };
            let out = rope_rotate(&seq, &layout, 10_000.0).unwrap();
            let n_in: f64 = values.iter().map(|v| v * v).sum::<f64>();
            let n_out: f64 = out.values.iter().map(|v| v * v).sum::<f64>();
            assert!((math::sqrt(n_in) - math::sqrt(n_out)).abs() < 1e-9);
        }
    }

    #[test]
    fn rope_inner_product_depends_on_relative_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let c = 12;
        let layout = RopeLayout::split_evenly(c).unwrap();
        let rotate_at = |values: &Vec<f64>, pos: RopePos| {
            rope_rotate(
                &TokenSequence {
                    n: 1,
                    c,
                    values: values.clone(),
                    positions: vec![pos],
                },
                &layout,
                10_000.0,
            )
            .unwrap()
            .values
        };
        for _ in 0..25 {
            let q: Vec<f64> = (0..c).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let k: Vec<f64> = (0..c).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let a = RopePos {
                t: rng.random::<f64>() * 20.0,
                h: rng.random::<f64>() * 20.0,
                w: rng.random::<f64>() * 20.0,
            };
            let b = RopePos {
                t: rng.random::<f64>() * 20.0,
                h: rng.random::<f64>() * 20.0,
                w: rng.random::<f64>() * 20.0,
            };
            let s = RopePos {
                t: rng.random::<f64>() * 20.0 - 10.0,
                h: rng.random::<f64>() * 20.0 - 10.0,
                w: rng.random::<f64>() * 20.0 - 10.0,
            };
            let dot = |x: &[f64], y: &[f64]| -> f64 {
                x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
            };
            let base_dot = dot(&rotate_at(&q, a), &rotate_at(&k, b));
            let shifted_dot = dot(
                &rotate_at(&q, RopePos { t: a.t + s.t, h: a.h + s.h, w: a.w + s.w }),
                &rotate_at(&k, RopePos { t: b.t + s.t, h: b.h + s.h, w: b.w + s.w }),
            );
            assert!((base_dot - shifted_dot).abs() < 1e-6);
        }
    }

    #[test]
    fn rope_odd_channels_rejected() {
        assert_eq!(
            RopeLayout::split_evenly(7).unwrap_err(),
            CompressError::OddChannels
        );
    }

    #[test]
    fn camera_condition_zero_encoder_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let grid = random_grid(&mut rng, 3, 4, 4, 4, TokenOrigin::Prediction);
        let pw = random_patchify(&mut rng, 6, 4, 2);
        let seq = patchify(&grid, &pw).unwrap();
        let w = CamEncoderWeights::new(6, vec![0.0; 6 * 12], vec![0.0; 6]).unwrap();
        let cams = [[0.5; 12], [1.0; 12], [-2.0; 12]];
        let out = camera_condition(&seq, 3, &cams, &w).unwrap();
        assert_eq!(out.values, seq.values);
    }

    #[test]
    fn camera_condition_broadcasts_per_frame() {
        let c = 4;
        let seq = TokenSequence {
            n: 6,
            c,
            values: vec![0.0; 6 * c],
            positions: vec![RopePos { t: 0.0, h: 0.0, w: 0.0 }; 6],
        };
        // weight row co picks cam[co].
        let mut weight = vec![0.0; c * 12];
        for co in 0..c {
            weight[co * 12 + co] = 1.0;
        }
        let w = CamEncoderWeights::new(c, weight, vec![0.0; c]).unwrap();
        let mut cam0 = [0.0; 12];
        let mut cam1 = [0.0; 12];
        for i in 0..12 {
            cam0[i] = i as f64;
            cam1[i] = -(i as f64);
        }
        let out = camera_condition(&seq, 2, &[cam0, cam1], &w).unwrap();
        for tok in 0..3 {
            assert_eq!(out.token(tok), &[0.0, 1.0, 2.0, 3.0]);
        }
        for tok in 3..6 {
            assert_eq!(out.token(tok), &[0.0, -1.0, -2.0, -3.0]);
        }
    }

    #[test]
    fn camera_condition_matches_naive_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let grid = random_grid(&mut rng, 2, 4, 4, 3, TokenOrigin::Prediction);
        let pw = random_patchify(&mut rng, 8, 3, 2);
        let seq = patchify(&grid, &pw).unwrap();
        let weight: Vec<f64> = (0..8 * 12).map(|_| rng.random::<f64>() - 0.5).collect();
        let bias: Vec<f64> = (0..8).map(|_| rng.random::<f64>() - 0.5).collect();
        let w = CamEncoderWeights::new(8, weight.clone(), bias.clone()).unwrap();
        let cams: Vec<[f64; 12]> = (0..2)
            .map(|_| core::array::from_fn(|_| rng.random::<f64>() - 0.5))
            .collect();
        let out = camera_condition(&seq, 2, &cams, &w).unwrap();
        let per_frame = seq.n / 2;
        for tok in 0..seq.n {
            let f = tok / per_frame;
            for ch in 0..8 {
                let mut enc = bias[ch];
                for j in 0..12 {
                    enc += weight[ch * 12 + j] * cams[f][j];
                }
                let expect = seq.token(tok)[ch] + enc;
                assert!((out.token(tok)[ch] - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn linearity_of_encoder_shift() {
        // Adding a constant vector to every cam shifts all tokens equally.
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let seq = TokenSequence {
            n: 4,
            c: 4,
            values: (0..16).map(|_| rng.random::<f64>()).collect(),
            positions: vec![RopePos { t: 0.0, h: 0.0, w: 0.0 }; 4],
        };
        let weight: Vec<f64> = (0..4 * 12).map(|_| rng.random::<f64>() - 0.5).collect();
        let w = CamEncoderWeights::new(4, weight.clone(), vec![0.0; 4]).unwrap();
        let cams: Vec<[f64; 12]> = (0..2)
            .map(|_| core::array::from_fn(|_| rng.random::<f64>()))
            .collect();
        let delta: [f64; 12] = core::array::from_fn(|_| rng.random::<f64>());
        let shifted: Vec<[f64; 12]> = cams
            .iter()
            .map(|c| core::array::from_fn(|i| c[i] + delta[i]))
            .collect();
        let base = camera_condition(&seq, 2, &cams, &w).unwrap();
        let moved = camera_condition(&seq, 2, &shifted, &w).unwrap();
        let enc_delta = w.encode(&delta);
        for tok in 0..4 {
            for ch in 0..4 {
                let diff = moved.token(tok)[ch] - base.token(tok)[ch];
                assert!((diff - enc_delta[ch]).abs() < 1e-9);
            }
        }
    }
}
