//! Round-trip benchmark trajectories.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::math;

use super::CameraPose;

/// The two round-trip benchmarks: out to 90° (or a full 360°) and back.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TrajectoryKind {
    Deg90,
    Deg360,
}

impl TrajectoryKind {
    /// Yaw at the apex (the turnaround frame), in degrees.
    pub fn apex_deg(self) -> f64 {
        match self {
            TrajectoryKind::Deg90 => 90.0,
            TrajectoryKind::Deg360 => 360.0,
        }
    }

    /// Number of frames stepped from start to apex given the generation
    /// segment length: one segment out for 90°, four for 360°.
    pub fn steps_to_apex(self, segment_len: usize) -> usize {
        match self {
            TrajectoryKind::Deg90 => segment_len,
            TrajectoryKind::Deg360 => 4 * segment_len,
        }
    }

    /// Total trajectory length, `1 + 2·segment_len` or `1 + 8·segment_len`.
    pub fn frame_count(self, segment_len: usize) -> usize {
        1 + 2 * self.steps_to_apex(segment_len)
    }
}

impl fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrajectoryKind::Deg90 => write!(f, "deg90"),
            TrajectoryKind::Deg360 => write!(f, "deg360"),
        }
    }
}

impl FromStr for TrajectoryKind {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "deg90" | "90" => Ok(TrajectoryKind::Deg90),
            "deg360" | "360" => Ok(TrajectoryKind::Deg360),
            _ => Err("expected deg90 or deg360"),
        }
    }
}

/// An ordered pose sequence for one round-trip benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    poses: Vec<CameraPose>,
    kind: TrajectoryKind,
    segment_len: usize,
}

impl Trajectory {
    /// Generates the round-trip trajectory: yaw ramps linearly from 0 to the
    /// apex angle over `steps_to_apex` frames and mirrors back, rotating in
    /// place about the vertical axis through the base camera's center. The
    /// backward half reuses the forward poses, so `pose[i] == pose[L−1−i]`
    /// holds exactly.
    ///
    /// `segment_len` must be at least 1.
    pub fn round_trip(kind: TrajectoryKind, segment_len: usize, base: &CameraPose) -> Self {
        assert!(segment_len >= 1, "segment_len must be >= 1");
        let steps = kind.steps_to_apex(segment_len);
        let apex = kind.apex_deg();
        let mut poses = Vec::with_capacity(2 * steps + 1);
        for i in 0..=steps {
            let yaw_deg = apex * i as f64 / steps as f64;
            poses.push(base.yawed(yaw_deg.to_radians()));
        }
        for i in steps + 1..=2 * steps {
            let mirrored = poses[2 * steps - i].clone();
            poses.push(mirrored);
        }
        Self {
            poses,
            kind,
            segment_len,
        }
    }

    pub fn kind(&self) -> TrajectoryKind {
        self.kind
    }

    pub fn segment_len(&self) -> usize {
        self.segment_len
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Index of the turnaround frame.
    pub fn apex_index(&self) -> usize {
        self.kind.steps_to_apex(self.segment_len)
    }

    pub fn pose(&self, i: usize) -> &CameraPose {
        &self.poses[i]
    }

    pub fn poses(&self) -> &[CameraPose] {
        &self.poses
    }
}

/// Yaw of `pose` relative to `base`, in degrees in [0, 360).
///
/// Meaningful for poses that differ from `base` by a pure yaw, as the
/// benchmark trajectories do.
pub fn yaw_between_deg(base: &CameraPose, pose: &CameraPose) -> f64 {
    // R = R₀ · Ry(−θ)  ⇒  Ry(−θ) = R₀ᵀ R.
    let rel = base.rotation().transpose() * pose.rotation();
    // Ry(−θ) has [0][2] = −sin θ and [0][0] = cos θ.
    let theta = math::atan2(-rel[(0, 2)], rel[(0, 0)]);
    let deg = theta.to_degrees();
    if deg < 0.0 {
        deg + 360.0
    } else {
        deg
    }
}
