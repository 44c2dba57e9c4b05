//! Append-only scene memory and context selection strategies.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::camera::{CameraPose, Intrinsics};
use crate::covis::{pairwise_matrix, CameraView, CovisConfig, CovisError, ScoreMatrix};

/// A historical frame: pose, intrinsics and an optional reference to stored
/// pixels (a relative path when persisted).
#[derive(Clone, Debug, PartialEq)]
pub struct FrameRecord {
    pub frame_id: u64,
    pub pose: CameraPose,
    pub intr: Intrinsics,
    pub image_ref: Option<String>,
}

/// Append-only memory of historical frames, sorted by `frame_id`.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryStore {
    scene_id: String,
    records: Vec<FrameRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MemoryError {
    /// Appended frame ids must be strictly greater than all existing ones.
    NonMonotonicId { frame_id: u64 },
    /// Selection from a store with no records; the caller decides the
    /// first-frame-only fallback.
    EmptyMemory,
    /// Propagated from co-visibility scoring.
    Covis(CovisError),
}

impl fmt::Display for MemoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemoryError::NonMonotonicId { frame_id } => {
                write!(f, "frame id {frame_id} does not extend the store")
            }
            MemoryError::EmptyMemory => write!(f, "memory store has no records"),
            MemoryError::Covis(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for MemoryError {}

impl From<CovisError> for MemoryError {
    fn from(e: CovisError) -> Self {
        MemoryError::Covis(e)
    }
}

impl MemoryStore {
    pub fn new(scene_id: impl Into<String>) -> Self {
        Self {
            scene_id: scene_id.into(),
            records: Vec::new(),
        }
    }

    /// Rebuilds a store from records that must already be sorted by strictly
    /// increasing `frame_id` (e.g. when loading a persisted store).
    pub fn from_records(
        scene_id: impl Into<String>,
        records: Vec<FrameRecord>,
    ) -> Result<Self, MemoryError> {
        let mut store = Self::new(scene_id);
        store.push_segment(records)?;
        Ok(store)
    }

    pub fn scene_id(&self) -> &str {
        &self.scene_id
    }

    pub fn records(&self) -> &[FrameRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends one generated segment. Ids must be strictly increasing and
    /// extend the store; existing records are never touched.
    pub fn push_segment(&mut self, records: Vec<FrameRecord>) -> Result<(), MemoryError> {
        let mut last = self.records.last().map(|r| r.frame_id);
        for rec in &records {
            if let Some(prev) = last {
                if rec.frame_id <= prev {
                    return Err(MemoryError::NonMonotonicId {
                        frame_id: rec.frame_id,
                    });
                }
            }
            last = Some(rec.frame_id);
        }
        self.records.extend(records);
        Ok(())
    }

    pub fn views(&self) -> Vec<CameraView> {
        self.records
            .iter()
            .map(|r| CameraView::new(r.pose.clone(), r.intr))
            .collect()
    }

    pub fn frame_ids(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.frame_id).collect()
    }
}

/// How context frames are chosen for a predicted segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SelectionStrategy {
    /// Per predicted frame, the k historical frames with the highest
    /// co-visibility score (ties to the lowest frame id). Inference mode.
    OursArgmax,
    /// Per predicted frame, a uniform choice among historical frames with a
    /// non-zero score; frames with no eligible history come back empty and
    /// flagged dropped. Training mode.
    TrainEligibleRandom,
    /// The `k·|predicted|` most recent historical frames as a shared pool,
    /// handed out most-recent-first in prediction order.
    Recent,
    /// Per predicted frame, uniform over all historical frames.
    Random,
    /// Historical frames that overlap any predicted frame, ranked by how
    /// many predicted frames they overlap (ties to the lowest frame id); the
    /// top `k·|predicted|` form a shared pool assigned round-robin in rank
    /// order.
    TopK,
}

impl SelectionStrategy {
    pub const ALL: [SelectionStrategy; 5] = [
        SelectionStrategy::OursArgmax,
        SelectionStrategy::TrainEligibleRandom,
        SelectionStrategy::Recent,
        SelectionStrategy::Random,
        SelectionStrategy::TopK,
    ];
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SelectionStrategy::OursArgmax => "ours",
            SelectionStrategy::TrainEligibleRandom => "train-random",
            SelectionStrategy::Recent => "recent",
            SelectionStrategy::Random => "random",
            SelectionStrategy::TopK => "topk",
        };
        write!(f, "{s}")
    }
}

impl FromStr for SelectionStrategy {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ours" | "argmax" => Ok(SelectionStrategy::OursArgmax),
            "train-random" | "eligible" => Ok(SelectionStrategy::TrainEligibleRandom),
            "recent" => Ok(SelectionStrategy::Recent),
            "random" => Ok(SelectionStrategy::Random),
            "topk" => Ok(SelectionStrategy::TopK),
            _ => Err("expected ours, train-random, recent, random or topk"),
        }
    }
}

/// A frame to be predicted: its global id plus camera information.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictedFrame {
    pub frame_id: u64,
    pub pose: CameraPose,
    pub intr: Intrinsics,
}

impl PredictedFrame {
    pub fn view(&self) -> CameraView {
        CameraView::new(self.pose.clone(), self.intr)
    }
}

/// Context chosen for one predicted frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameAssignment {
    pub predicted_id: u64,
    /// Selected historical frames as `(frame_id, co-visibility score)`.
    pub selected: Vec<(u64, f64)>,
    /// When set, the selection is retained but zero-padded downstream.
    pub dropped: bool,
}

/// Per-predicted-frame context selections for one segment.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextAssignment {
    pub strategy: SelectionStrategy,
    pub frames: Vec<FrameAssignment>,
}

impl ContextAssignment {
    /// Distinct historical frame ids selected anywhere in the segment.
    pub fn selected_set(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self
            .frames
            .iter()
            .flat_map(|f| f.selected.iter().map(|&(id, _)| id))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Selects context for `predicted` frames from `store` under `strategy`,
/// scoring pairs with [`pairwise_matrix`]. `k` is the number of context
/// slots per predicted frame.
pub fn select_context(
    store: &MemoryStore,
    predicted: &[PredictedFrame],
    strategy: SelectionStrategy,
    k: usize,
    cfg: &CovisConfig,
    rng_seed: u64,
) -> Result<ContextAssignment, MemoryError> {
    if store.is_empty() {
        return Err(MemoryError::EmptyMemory);
    }
    assert!(k >= 1, "k must be >= 1");
    let pred_views: Vec<CameraView> = predicted.iter().map(|p| p.view()).collect();
    let scores = pairwise_matrix(&pred_views, &store.views(), cfg)?;
    let predicted_ids: Vec<u64> = predicted.iter().map(|p| p.frame_id).collect();
    Ok(select_from_matrix(
        &predicted_ids,
        &store.frame_ids(),
        &scores,
        strategy,
        k,
        rng_seed,
    ))
}

/// Strategy selection over a precomputed score matrix (rows = predicted
/// frames, columns = historical frames in `hist_ids` order). Deterministic
/// given `rng_seed`.
pub fn select_from_matrix(
    predicted_ids: &[u64],
    hist_ids: &[u64],
    scores: &ScoreMatrix,
    strategy: SelectionStrategy,
    k: usize,
    rng_seed: u64,
) -> ContextAssignment {
    assert_eq!(scores.rows(), predicted_ids.len());
    assert_eq!(scores.cols(), hist_ids.len());
    assert!(k >= 1, "k must be >= 1");
    let n_hist = hist_ids.len();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let frames: Vec<FrameAssignment> = match strategy {
        SelectionStrategy::OursArgmax => predicted_ids
            .iter()
            .enumerate()
            .map(|(i, &pid)| {
                let mut order: Vec<usize> = (0..n_hist).collect();
                order.sort_by(|&a, &b| {
                    scores
                        .get(i, b)
                        .partial_cmp(&scores.get(i, a))
                        .unwrap()
                        .then(hist_ids[a].cmp(&hist_ids[b]))
                });
                let selected = order
                    .into_iter()
                    .take(k.min(n_hist))
                    .map(|j| (hist_ids[j], scores.get(i, j)))
                    .collect();
                FrameAssignment {
                    predicted_id: pid,
                    selected,
                    dropped: false,
                }
            })
            .collect(),
        SelectionStrategy::TrainEligibleRandom => predicted_ids
            .iter()
            .enumerate()
            .map(|(i, &pid)| {
                let eligible: Vec<usize> = (0..n_hist).filter(|&j| scores.get(i, j) > 0.0).collect();
                if eligible.is_empty() {
                    return FrameAssignment {
                        predicted_id: pid,
                        selected: Vec::new(),
                        dropped: true,
                    };
                }
                let chosen = sample_without_replacement(&eligible, k, &mut rng);
                FrameAssignment {
                    predicted_id: pid,
                    selected: chosen
                        .into_iter()
                        .map(|j| (hist_ids[j], scores.get(i, j)))
                        .collect(),
                    dropped: false,
                }
            })
            .collect(),
        SelectionStrategy::Recent => {
            let pool_len = (k * predicted_ids.len()).min(n_hist);
            // Most recent first.
            let pool: Vec<usize> = (0..pool_len).map(|m| n_hist - 1 - m).collect();
            assign_pool(predicted_ids, hist_ids, scores, &pool, k)
        }
        SelectionStrategy::Random => predicted_ids
            .iter()
            .enumerate()
            .map(|(i, &pid)| {
                let all: Vec<usize> = (0..n_hist).collect();
                let chosen = sample_without_replacement(&all, k, &mut rng);
                FrameAssignment {
                    predicted_id: pid,
                    selected: chosen
                        .into_iter()
                        .map(|j| (hist_ids[j], scores.get(i, j)))
                        .collect(),
                    dropped: false,
                }
            })
            .collect(),
        SelectionStrategy::TopK => {
            let mut occurrence = alloc::vec![0u32; n_hist];
            for i in 0..predicted_ids.len() {
                for (j, occ) in occurrence.iter_mut().enumerate() {
                    if scores.get(i, j) > 0.0 {
                        *occ += 1;
                    }
                }
            }
            let mut eligible: Vec<usize> = (0..n_hist).filter(|&j| occurrence[j] > 0).collect();
            eligible.sort_by(|&a, &b| {
                occurrence[b]
                    .cmp(&occurrence[a])
                    .then(hist_ids[a].cmp(&hist_ids[b]))
            });
            let pool_len = (k * predicted_ids.len()).min(eligible.len());
            let pool = &eligible[..pool_len];
            if pool.is_empty() {
                predicted_ids
                    .iter()
                    .map(|&pid| FrameAssignment {
                        predicted_id: pid,
                        selected: Vec::new(),
                        dropped: true,
                    })
                    .collect()
            } else {
                assign_pool(predicted_ids, hist_ids, scores, pool, k)
            }
        }
    };

    ContextAssignment { strategy, frames }
}

/// Hands a shared pool out round-robin: slot `i·k + m` of the prediction
/// sequence takes `pool[(i·k + m) mod pool.len()]`.
fn assign_pool(
    predicted_ids: &[u64],
    hist_ids: &[u64],
    scores: &ScoreMatrix,
    pool: &[usize],
    k: usize,
) -> Vec<FrameAssignment> {
    predicted_ids
        .iter()
        .enumerate()
        .map(|(i, &pid)| {
            let selected = (0..k)
                .map(|m| {
                    let j = pool[(i * k + m) % pool.len()];
                    (hist_ids[j], scores.get(i, j))
                })
                .collect();
            FrameAssignment {
                predicted_id: pid,
                selected,
                dropped: false,
            }
        })
        .collect()
}

fn sample_without_replacement(
    candidates: &[usize],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let take = k.min(candidates.len());
    let mut pool: Vec<usize> = candidates.to_vec();
    let mut out = Vec::with_capacity(take);
    for _ in 0..take {
        let idx = rng.random_range(0..pool.len());
        out.push(pool.swap_remove(idx));
    }
    out
}

/// With probability `p`, flags every selection in the assignment as dropped
/// (a whole-assignment decision, used to zero-pad all context during
/// training). Deterministic given `rng_seed`.
pub fn apply_context_dropout(
    mut assignment: ContextAssignment,
    p: f64,
    rng_seed: u64,
) -> ContextAssignment {
    assert!((0.0..=1.0).contains(&p), "p must be a probability");
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    if rng.random::<f64>() < p {
        for frame in &mut assignment.frames {
            frame.dropped = true;
        }
    }
    assignment
}
