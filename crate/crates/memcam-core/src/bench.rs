//! Segment-wise retrieval benchmark over the synthetic world.
//!
//! The benchmark walks a round-trip trajectory the way segment-wise
//! inference would: the first frame seeds the memory, then each segment of
//! `segment_len` frames selects context from the memory under the
//! configured strategies, ground-truth frames are rendered, and the memory
//! is updated before the next segment. Because the memory always holds
//! ground-truth renders, every strategy sees the same memory timeline and
//! one co-visibility matrix per segment scores them all.
//!
//! Two score families are reported per predicted frame: the scores of its
//! own selections, and the `coverage` score — the best co-visibility between
//! the frame and the segment's whole selected context set, which is what a
//! model conditioning on the concatenated context actually sees.

use alloc::vec::Vec;
use core::fmt;

use crate::camera::{CameraPose, Intrinsics, Trajectory, TrajectoryKind};
use crate::covis::{pairwise_matrix, CameraView, CovisConfig, CovisError};
use crate::math;
use crate::memory::{
    select_from_matrix, ContextAssignment, FrameRecord, MemoryError, MemoryStore,
    SelectionStrategy,
};
use crate::world::{render, Image, SceneSpec, WorldError};

/// Retrieval benchmark configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub benchmark: TrajectoryKind,
    pub segment_len: usize,
    pub strategies: Vec<SelectionStrategy>,
    /// Context slots per predicted frame.
    pub k: usize,
    pub covis: CovisConfig,
    pub scene: SceneSpec,
    pub intr: Intrinsics,
    pub base_pose: CameraPose,
    pub image_width: u32,
    pub image_height: u32,
    /// Render ground-truth frames while running (required when a frame sink
    /// is attached; selection itself only needs poses).
    pub render_frames: bool,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            benchmark: TrajectoryKind::Deg90,
            segment_len: 76,
            strategies: alloc::vec![
                SelectionStrategy::OursArgmax,
                SelectionStrategy::TopK,
                SelectionStrategy::Random,
                SelectionStrategy::Recent,
            ],
            k: 1,
            covis: CovisConfig::default(),
            scene: SceneSpec::default(),
            intr: Intrinsics::default(),
            base_pose: CameraPose::identity(),
            image_width: 640,
            image_height: 352,
            render_frames: true,
            seed: 7,
        }
    }
}

/// Scores for one predicted frame under one strategy.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameReport {
    pub frame_id: u64,
    pub segment: usize,
    /// The frame's own selections as `(historical id, score)`.
    pub selected: Vec<(u64, f64)>,
    /// Best co-visibility against the segment's selected context set.
    pub coverage: f64,
    pub dropped: bool,
}

/// Per-strategy benchmark outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategyReport {
    pub strategy: SelectionStrategy,
    pub frames: Vec<FrameReport>,
    /// Mean/min/median of the per-frame coverage scores.
    pub mean_coverage: f64,
    pub min_coverage: f64,
    pub median_coverage: f64,
    /// Mean over every individual selection score.
    pub mean_selected: f64,
    /// How often each historical frame was selected, over the whole run.
    pub histogram: Vec<(u64, u32)>,
}

/// Full retrieval benchmark report.
#[derive(Clone, Debug, PartialEq)]
pub struct RetrievalReport {
    pub benchmark: TrajectoryKind,
    pub segment_len: usize,
    pub k: usize,
    pub seed: u64,
    pub strategies: Vec<StrategyReport>,
}

impl RetrievalReport {
    pub fn strategy(&self, s: SelectionStrategy) -> Option<&StrategyReport> {
        self.strategies.iter().find(|r| r.strategy == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchError {
    Memory(MemoryError),
    Covis(CovisError),
    World(WorldError),
}

impl fmt::Display for BenchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchError::Memory(e) => write!(f, "{e}"),
            BenchError::Covis(e) => write!(f, "{e}"),
            BenchError::World(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for BenchError {}

impl From<MemoryError> for BenchError {
    fn from(e: MemoryError) -> Self {
        BenchError::Memory(e)
    }
}

impl From<CovisError> for BenchError {
    fn from(e: CovisError) -> Self {
        BenchError::Covis(e)
    }
}

impl From<WorldError> for BenchError {
    fn from(e: WorldError) -> Self {
        BenchError::World(e)
    }
}

struct StrategyAccumulator {
    strategy: SelectionStrategy,
    frames: Vec<FrameReport>,
    histogram: alloc::collections::BTreeMap<u64, u32>,
}

/// Runs the segment-wise retrieval benchmark. When `frame_sink` is given it
/// receives every rendered ground-truth frame in trajectory order
/// (`render_frames` must be on).
pub fn run_retrieval_bench(
    cfg: &BenchConfig,
    mut frame_sink: Option<&mut dyn FnMut(u64, &Image)>,
) -> Result<RetrievalReport, BenchError> {
    assert!(cfg.k >= 1, "k must be >= 1");
    assert!(
        cfg.render_frames || frame_sink.is_none(),
        "frame sink requires render_frames"
    );
    let trajectory = Trajectory::round_trip(cfg.benchmark, cfg.segment_len, &cfg.base_pose);
    let mut store = MemoryStore::new("synthetic-roundtrip");
    let render_to_sink =
        |frame_id: u64, pose: &CameraPose, sink: &mut Option<&mut dyn FnMut(u64, &Image)>| {
            if cfg.render_frames {
                let img = render(
                    &cfg.scene,
                    pose,
                    &cfg.intr,
                    cfg.image_width,
                    cfg.image_height,
                )?;
                if let Some(sink) = sink.as_deref_mut() {
                    sink(frame_id, &img);
                }
            }
            Ok::<(), BenchError>(())
        };

    // The first frame is the fixed seed: it is given, not predicted, and
    // forms the initial memory (first-frame-only conditioning until the
    // first segment lands).
    render_to_sink(0, trajectory.pose(0), &mut frame_sink)?;
    store.push_segment(alloc::vec![FrameRecord {
        frame_id: 0,
        pose: trajectory.pose(0).clone(),
        intr: cfg.intr,
        image_ref: None,
    }])?;

    let mut accs: Vec<StrategyAccumulator> = cfg
        .strategies
        .iter()
        .map(|&strategy| StrategyAccumulator {
            strategy,
            frames: Vec::new(),
            histogram: alloc::collections::BTreeMap::new(),
        })
        .collect();

    let segments = trajectory.len() / cfg.segment_len; // (L-1)/segment_len
    for seg in 0..segments {
        let start = 1 + seg * cfg.segment_len;
        let ids: Vec<u64> = (start..start + cfg.segment_len).map(|i| i as u64).collect();
        let pred_views: Vec<CameraView> = ids
            .iter()
            .map(|&i| CameraView::new(trajectory.pose(i as usize).clone(), cfg.intr))
            .collect();

        let hist_ids = store.frame_ids();
        let seg_cfg = CovisConfig {
            seed: math::derive_seed(cfg.covis.seed, seg as u64, SEGMENT_SEED_STREAM),
            ..cfg.covis
        };
        let matrix = pairwise_matrix(&pred_views, &store.views(), &seg_cfg)?;

        for (s_idx, acc) in accs.iter_mut().enumerate() {
            let rng_seed = math::derive_seed(cfg.seed, seg as u64, s_idx as u64);
            let assignment: ContextAssignment =
                select_from_matrix(&ids, &hist_ids, &matrix, acc.strategy, cfg.k, rng_seed);

            // Columns of the segment's whole selected context set.
            let set_cols: Vec<usize> = {
                let set = assignment.selected_set();
                set.iter()
                    .map(|id| hist_ids.binary_search(id).expect("selected id in store"))
                    .collect()
            };
            for (row, frame) in assignment.frames.iter().enumerate() {
                let coverage = set_cols
                    .iter()
                    .map(|&j| matrix.get(row, j))
                    .fold(0.0f64, f64::max);
                for &(id, _) in &frame.selected {
                    *acc.histogram.entry(id).or_insert(0) += 1;
                }
                acc.frames.push(FrameReport {
                    frame_id: frame.predicted_id,
                    segment: seg,
                    selected: frame.selected.clone(),
                    coverage,
                    dropped: frame.dropped,
                });
            }
        }

        // Ground truth becomes the next segment's memory.
        let mut records = Vec::with_capacity(ids.len());
        for &id in &ids {
            render_to_sink(id, trajectory.pose(id as usize), &mut frame_sink)?;
            records.push(FrameRecord {
                frame_id: id,
                pose: trajectory.pose(id as usize).clone(),
                intr: cfg.intr,
                image_ref: None,
            });
        }
        store.push_segment(records)?;
    }

    let strategies = accs
        .into_iter()
        .map(|acc| {
            let mut coverages: Vec<f64> = acc.frames.iter().map(|f| f.coverage).collect();
            coverages.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = coverages.len();
            let mean_coverage = coverages.iter().sum::<f64>() / n.max(1) as f64;
            let min_coverage = coverages.first().copied().unwrap_or(0.0);
            let median_coverage = if n == 0 {
                0.0
            } else if n % 2 == 1 {
                coverages[n / 2]
            } else {
                (coverages[n / 2 - 1] + coverages[n / 2]) / 2.0
            };
            let (sel_sum, sel_count) = acc.frames.iter().fold((0.0, 0usize), |(s, c), f| {
                (
                    s + f.selected.iter().map(|&(_, v)| v).sum::<f64>(),
                    c + f.selected.len(),
                )
            });
            StrategyReport {
                strategy: acc.strategy,
                frames: acc.frames,
                mean_coverage,
                min_coverage,
                median_coverage,
                mean_selected: sel_sum / sel_count.max(1) as f64,
                histogram: acc.histogram.into_iter().collect(),
            }
        })
        .collect();

    Ok(RetrievalReport {
        benchmark: cfg.benchmark,
        segment_len: cfg.segment_len,
        k: cfg.k,
        seed: cfg.seed,
        strategies,
    })
}

// Distinguishes the per-segment covis seed stream from other derivations.
const SEGMENT_SEED_STREAM: u64 = 0x7365_676d_656e_74; // "segment"
