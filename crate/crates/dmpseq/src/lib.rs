//! Vision-language guided motion generation by sequencing dynamic movement
//! primitives.
//!
//! The pipeline encodes demonstrated motions as DMPs ([`dmp`]), locates the
//! target object in an overhead image ([`perception`]), asks a pluggable
//! vision-language backend for a primitive keyword and 2D keypoint pairs
//! ([`vlm`]), lifts those pairs into 3D start/goal parameters ([`geometry`]),
//! and composes the one-shot motion as alternating translation and primitive
//! segments ([`sequencer`]). [`metrics`] provides ground-truth scenario
//! generators and the closest-unpaired-point discrepancy used to evaluate
//! generated motions; [`demos`] holds the parametric demonstration
//! trajectories the built-in primitives are learned from.

pub mod demos;
pub mod dmp;
pub mod geometry;
pub mod metrics;
pub mod perception;
pub mod sequencer;
pub mod vlm;

/// 3D position or vector in meters.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 2D point, pixels or meters depending on context.
pub type Vec2 = nalgebra::Vector2<f64>;

pub use dmp::{
    learn_from_demo, make_basis, rollout, BasisSet, DmpError, DmpGains, PhaseState, Primitive,
    Trajectory,
};
pub use geometry::{post_process, FrameSpec, GeometryError, HeightMode, HeightSpec, KeypointPair};
pub use metrics::{
    discrepancy, downsample, generate_ground_truth, MatchReport, MetricsError, Scenario,
};
pub use perception::{detect_object, BoundingBox, DetectorConfig, GrayImage, PerceptionError};
pub use sequencer::{
    build_plan, render, render_segments, MotionPlan, ScalingParams, SequenceError, WorkspaceBounds,
};
pub use vlm::{query, resolve, PrimitiveDictionary, TaskContext, VlmError, VlmResponse};
