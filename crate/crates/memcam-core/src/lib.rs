//! Core engine for camera-memory retrieval benchmarks.
//!
//! The crate is organised around the pipeline used by memory-augmented,
//! camera-controlled video generators:
//!
//! * [`camera`] — pose algebra, view frusta, round-trip benchmark
//!   trajectories, and RealEstate10K-style pose parsing;
//! * [`covis`] — Monte Carlo co-visibility (frustum IoU) scoring between
//!   camera pairs, plus a dense-lattice oracle used to validate it;
//! * [`memory`] — the append-only scene memory and the context selection
//!   strategies (argmax, recency, random, occurrence top-k);
//! * [`world`] — a deterministic procedural cylinder room with a ray-cast
//!   renderer that supplies ground-truth images and an occlusion-aware
//!   surface co-visibility measure;
//! * [`compress`] — toy-scale patchify/compressor numerics, pooled rotary
//!   positions, and the additive camera-conditioning op;
//! * [`metrics`] — PSNR/SSIM and the reversed-sequence round-trip pairing;
//! * [`bench`] — the segment-wise retrieval benchmark tying it together.
//!
//! Everything here is `no_std`-compatible (with `alloc`); file formats,
//! PNG IO and the CLI live in the companion `memcam` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod bench;
pub mod camera;
pub mod compress;
pub mod covis;
mod math;
pub mod memory;
pub mod metrics;
pub mod world;

pub use camera::{CameraPose, Frustum, Intrinsics, Trajectory, TrajectoryKind};
pub use covis::{CameraView, CovisConfig, CovisResult};
pub use memory::{ContextAssignment, FrameRecord, MemoryStore, SelectionStrategy};
