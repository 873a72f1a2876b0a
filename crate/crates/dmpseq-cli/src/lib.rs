//! One-shot pipeline orchestration around the `dmpseq` library: load an
//! observation image, detect the object, query the configured backend for a
//! keyword and keypoint pairs, lift them to 3D, sequence the motion, and
//! write the artifacts (trajectory CSV, keypoint overlay SVG, orthographic
//! path SVG, run report JSON). Also hosts primitive learning and the batch
//! evaluation harness used by the CLI.

pub mod artifacts;
pub mod config;
pub mod evaluate;
pub mod fixture;
pub mod learn;
pub mod pipeline;

pub use config::{BackendChoice, DetectorSettings, HttpSettings, PipelineConfig};
pub use evaluate::{evaluate, EvaluateOptions, EvaluateReport};
pub use learn::{learn_primitive, DemoSource, LearnOptions, LearnOutcome};
pub use pipeline::{run_pipeline, ErrorClass, PipelineError, RunReport};
