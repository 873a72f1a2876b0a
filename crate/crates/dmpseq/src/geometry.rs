//! Pixel-space keypoint pairs to 3D spatial scaling parameters: translate
//! by the bounding-box offset and global shift, normalize by the image
//! size, scale to the environment size, then integrate the object height
//! according to the task's height mode.

use crate::sequencer::ScalingParams;
use crate::{Vec2, Vec3};
use thiserror::Error;

/// Tolerance when checking whether a mapped point lies on the board.
const WORKSPACE_GUARD_EPS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("no keypoint pairs to post-process")]
    EmptyPairs,
    #[error("pair {pair_index} maps to ({x:.4}, {y:.4}) m, outside the workspace")]
    OutOfWorkspace { pair_index: usize, x: f64, y: f64 },
    #[error("frame spec invalid: {0}")]
    InvalidFrame(&'static str),
}

/// A 2D pixel-space line segment produced by the backend, in cropped-image
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeypointPair {
    pub start: Vec2,
    pub goal: Vec2,
}

impl KeypointPair {
    pub fn new(start: Vec2, goal: Vec2) -> Self {
        Self { start, goal }
    }
}

/// Coordinate frame data for the local→global transform: the crop's offset
/// inside the image, an optional shift of the environment origin, the full
/// image size in pixels, and the environment size in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSpec {
    pub bbox_offset: Vec2,
    pub global_shift: Vec2,
    pub img_size: Vec2,
    pub env_size: Vec2,
}

impl FrameSpec {
    pub fn new(
        bbox_offset: Vec2,
        global_shift: Vec2,
        img_size: Vec2,
        env_size: Vec2,
    ) -> Result<Self, GeometryError> {
        if !(img_size.x > 0.0 && img_size.y > 0.0 && img_size.iter().all(|v| v.is_finite())) {
            return Err(GeometryError::InvalidFrame("image size must be positive"));
        }
        if !(env_size.x > 0.0 && env_size.y > 0.0 && env_size.iter().all(|v| v.is_finite())) {
            return Err(GeometryError::InvalidFrame("environment size must be positive"));
        }
        if !(bbox_offset.iter().all(|v| v.is_finite())
            && global_shift.iter().all(|v| v.is_finite()))
        {
            return Err(GeometryError::InvalidFrame("offsets must be finite"));
        }
        Ok(Self { bbox_offset, global_shift, img_size, env_size })
    }
}

/// Which keypoints of a pair receive the object height plus margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeightMode {
    /// Both endpoints at object-top height (gliding motions such as icing).
    BothAtHeight,
    /// Start above the object, end at the base (cutting pattern).
    StartAtHeight,
    /// Start at the base, end above the object.
    EndAtHeight,
}

impl HeightMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "both_at_height" | "both" => Some(Self::BothAtHeight),
            "start_at_height" | "start" => Some(Self::StartAtHeight),
            "end_at_height" | "end" => Some(Self::EndAtHeight),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::BothAtHeight => "both_at_height",
            Self::StartAtHeight => "start_at_height",
            Self::EndAtHeight => "end_at_height",
        }
    }
}

/// Height integration parameters: the measured object height, a safety
/// margin, the mode, and the support surface height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightSpec {
    pub object_height: f64,
    pub margin: f64,
    pub mode: HeightMode,
    pub base_z: f64,
}

impl HeightSpec {
    pub fn new(object_height: f64, margin: f64, mode: HeightMode, base_z: f64) -> Self {
        Self { object_height, margin, mode, base_z }
    }

    fn z_high(&self) -> f64 {
        self.base_z + self.object_height + self.margin
    }
}

/// Local pixel point to global world point in meters:
/// `p' = p + b_offset + g_shift`, normalized by the image size and scaled
/// by the environment size.
pub fn to_global_2d(p_local: Vec2, frame: &FrameSpec) -> Vec2 {
    let p = p_local + frame.bbox_offset + frame.global_shift;
    Vec2::new(p.x / frame.img_size.x * frame.env_size.x, p.y / frame.img_size.y * frame.env_size.y)
}

/// Lifts a pair of global 2D points to 3D start/goal parameters by
/// assigning each endpoint either the base height or the object-top height
/// (base + object height + margin) according to the mode.
pub fn integrate_height(start: Vec2, goal: Vec2, spec: &HeightSpec) -> ScalingParams {
    let high = spec.z_high();
    let low = spec.base_z;
    let (z0, z1) = match spec.mode {
        HeightMode::BothAtHeight => (high, high),
        HeightMode::StartAtHeight => (high, low),
        HeightMode::EndAtHeight => (low, high),
    };
    ScalingParams::new(Vec3::new(start.x, start.y, z0), Vec3::new(goal.x, goal.y, z1))
}

/// Full post-processing of backend keypoint pairs: both endpoints through
/// the local→global transform, then height integration. Order preserved.
/// A mapped endpoint outside `[0, env]` (with a small guard) reports the
/// offending pair index so the operator can re-prompt the backend.
pub fn post_process(
    pairs: &[KeypointPair],
    frame: &FrameSpec,
    spec: &HeightSpec,
) -> Result<Vec<ScalingParams>, GeometryError> {
    if pairs.is_empty() {
        return Err(GeometryError::EmptyPairs);
    }
    let mut out = Vec::with_capacity(pairs.len());
    for (pair_index, pair) in pairs.iter().enumerate() {
        let start = to_global_2d(pair.start, frame);
        let goal = to_global_2d(pair.goal, frame);
        for p in [start, goal] {
            let inside = p.x >= -WORKSPACE_GUARD_EPS
                && p.x <= frame.env_size.x + WORKSPACE_GUARD_EPS
                && p.y >= -WORKSPACE_GUARD_EPS
                && p.y <= frame.env_size.y + WORKSPACE_GUARD_EPS;
            if !inside {
                return Err(GeometryError::OutOfWorkspace { pair_index, x: p.x, y: p.y });
            }
        }
        out.push(integrate_height(start, goal, spec));
    }
    Ok(out)
}
