//! Composition of the one-shot motion: for every keypoint pair, a
//! translation segment moves the end effector from its current position to
//! the pair's start, then the scaled reference primitive executes the pair.
//! Rendering concatenates the per-segment rollouts into a single piecewise
//! trajectory.

use crate::dmp::{rollout, DmpError, Primitive, Trajectory};
use crate::vlm::PrimitiveDictionary;
use crate::Vec3;
use thiserror::Error;

/// Minimum translation segment duration, seconds.
const MIN_TRANSLATION_TAU: f64 = 0.2;
/// Nominal translation speed used to scale segment duration, m/s.
const TRANSLATION_SPEED: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SequenceError {
    #[error("motion plan needs at least one keypoint pair")]
    EmptyPlan,
    #[error("keyword '{0}' is not in the primitive dictionary")]
    UnknownPrimitive(String),
    #[error("pair {index} endpoint ({x}, {y}, {z}) is outside the workspace")]
    OutOfBounds { index: usize, x: f64, y: f64, z: f64 },
    #[error(transparent)]
    Dmp(#[from] DmpError),
}

/// Spatial scaling parameters of one sequenced DMP: its start and goal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingParams {
    pub y0: Vec3,
    pub y_goal: Vec3,
}

impl ScalingParams {
    pub fn new(y0: Vec3, y_goal: Vec3) -> Self {
        Self { y0, y_goal }
    }

    pub fn translated(&self, v: Vec3) -> Self {
        Self { y0: self.y0 + v, y_goal: self.y_goal + v }
    }

    pub fn is_finite(&self) -> bool {
        self.y0.iter().all(|c| c.is_finite()) && self.y_goal.iter().all(|c| c.is_finite())
    }
}

/// Axis-aligned workspace limits used to reject bad backend output before
/// any motion is rendered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkspaceBounds {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub z: (f64, f64),
}

impl WorkspaceBounds {
    /// Board of the given planar size with the default 0.5 m height budget.
    pub fn board(env_w: f64, env_h: f64) -> Self {
        Self { x: (0.0, env_w), y: (0.0, env_h), z: (0.0, 0.5) }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        p.x >= self.x.0
            && p.x <= self.x.1
            && p.y >= self.y.0
            && p.y <= self.y.1
            && p.z >= self.z.0
            && p.z <= self.z.1
    }
}

impl Default for WorkspaceBounds {
    // 0.30 m × 0.18 m cutting board.
    fn default() -> Self {
        Self::board(0.30, 0.18)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Translation,
    Primitive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub scaling: ScalingParams,
    pub keyword: String,
}

/// Alternating translation/primitive segments, continuous by construction:
/// each segment starts where the previous one ends.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionPlan {
    pub segments: Vec<Segment>,
    pub home: Vec3,
}

impl MotionPlan {
    pub fn pair_count(&self) -> usize {
        self.segments.len() / 2
    }
}

/// Builds the alternating plan for the given pairs: translation from the
/// current position (home first, then the previous goal) to each pair's
/// start, then the primitive over the pair.
pub fn build_plan(
    pairs: &[ScalingParams],
    keyword: &str,
    home: Vec3,
) -> Result<MotionPlan, SequenceError> {
    if pairs.is_empty() {
        return Err(SequenceError::EmptyPlan);
    }
    let mut segments = Vec::with_capacity(pairs.len() * 2);
    let mut cursor = home;
    for pair in pairs {
        segments.push(Segment {
            kind: SegmentKind::Translation,
            scaling: ScalingParams::new(cursor, pair.y0),
            keyword: keyword.to_owned(),
        });
        segments.push(Segment {
            kind: SegmentKind::Primitive,
            scaling: *pair,
            keyword: keyword.to_owned(),
        });
        cursor = pair.y_goal;
    }
    Ok(MotionPlan { segments, home })
}

/// Rejects any pair endpoint outside the configured workspace. Called
/// before planning so bad backend output fails fast.
pub fn check_workspace(
    pairs: &[ScalingParams],
    bounds: &WorkspaceBounds,
) -> Result<(), SequenceError> {
    for (index, pair) in pairs.iter().enumerate() {
        for p in [&pair.y0, &pair.y_goal] {
            if !pair.is_finite() || !bounds.contains(p) {
                return Err(SequenceError::OutOfBounds { index, x: p.x, y: p.y, z: p.z });
            }
        }
    }
    Ok(())
}

/// Translation segment duration: proportional to distance with a floor so
/// short hops still settle smoothly.
pub fn translation_tau(distance: f64) -> f64 {
    (distance / TRANSLATION_SPEED).max(MIN_TRANSLATION_TAU)
}

/// Rolls out every segment of the plan separately, in order. Translation
/// segments use the zero-weight translation primitive with duration scaled
/// by distance; primitive segments look up the keyword in the dictionary.
pub fn render_segments(
    plan: &MotionPlan,
    dictionary: &PrimitiveDictionary,
    translation_primitive: &Primitive,
    dt: f64,
) -> Result<Vec<Trajectory>, SequenceError> {
    if plan.segments.is_empty() {
        return Err(SequenceError::EmptyPlan);
    }
    plan.segments
        .iter()
        .map(|segment| match segment.kind {
            SegmentKind::Translation => {
                let dist = (segment.scaling.y_goal - segment.scaling.y0).norm();
                Ok(rollout(
                    translation_primitive,
                    &segment.scaling,
                    dt,
                    Some(translation_tau(dist)),
                )?)
            }
            SegmentKind::Primitive => {
                let primitive = dictionary
                    .get(&segment.keyword)
                    .ok_or_else(|| SequenceError::UnknownPrimitive(segment.keyword.clone()))?;
                Ok(rollout(primitive, &segment.scaling, dt, None)?)
            }
        })
        .collect()
}

/// Renders the plan to a single trajectory by concatenating the per-segment
/// rollouts. The duplicate sample at each boundary (the first sample of a
/// segment equals the previous segment's target) is dropped.
pub fn render(
    plan: &MotionPlan,
    dictionary: &PrimitiveDictionary,
    translation_primitive: &Primitive,
    dt: f64,
) -> Result<Trajectory, SequenceError> {
    let parts = render_segments(plan, dictionary, translation_primitive, dt)?;
    let mut points: Vec<Vec3> = Vec::new();
    for part in &parts {
        let skip = usize::from(!points.is_empty());
        points.extend_from_slice(&part.points()[skip..]);
    }
    Ok(Trajectory::new(dt, points)?)
}
