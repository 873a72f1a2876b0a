//! Primitive learning for the CLI: fit a DMP to a recorded `t,x,y,z`
//! demonstration (or a built-in demo style), report the imitation
//! round-trip error, and store the result in a dictionary file.

use crate::artifacts::parse_trajectory_csv;
use crate::pipeline::{ErrorClass, PipelineError};
use dmpseq::demos::{self, DemoStyle};
use dmpseq::dmp::{learn_from_demo, rollout, DmpGains, Trajectory};
use dmpseq::sequencer::ScalingParams;
use dmpseq::vlm::{DictionaryMeta, PrimitiveDictionary, VlmError};
use std::path::PathBuf;

#[derive(Debug, Clone)]
pub enum DemoSource {
    Csv(PathBuf),
    Builtin(DemoStyle),
}

#[derive(Debug, Clone)]
pub struct LearnOptions {
    pub source: DemoSource,
    pub keyword: String,
    pub dictionary_path: PathBuf,
    pub force: bool,
    pub basis_count: usize,
    pub gains: DmpGains,
    /// Task name stamped on a newly created dictionary.
    pub task: String,
    /// Timestep used when sampling a built-in demo.
    pub demo_dt: f64,
}

impl Default for LearnOptions {
    fn default() -> Self {
        Self {
            source: DemoSource::Builtin(DemoStyle::Straight),
            keyword: "straight".to_owned(),
            dictionary_path: PathBuf::from("dictionary.json"),
            force: false,
            basis_count: 50,
            gains: DmpGains::default(),
            task: "object cutting".to_owned(),
            demo_dt: 1e-3,
        }
    }
}

#[derive(Debug)]
pub struct LearnOutcome {
    pub keyword: String,
    /// Imitation round-trip RMSE per axis, meters.
    pub rmse_per_axis: [f64; 3],
    /// RMSE as a fraction of the demo amplitude, per axis with motion.
    pub rmse_fraction: f64,
    pub dictionary_len: usize,
}

fn validation(detail: impl Into<String>) -> PipelineError {
    PipelineError { stage: "learn", detail: detail.into(), class: ErrorClass::Validation }
}

fn failure(detail: impl Into<String>) -> PipelineError {
    PipelineError { stage: "learn", detail: detail.into(), class: ErrorClass::Pipeline }
}

/// Round-trip error of a primitive against the demo it was learned from.
pub fn imitation_rmse(demo: &Trajectory, replay: &Trajectory) -> [f64; 3] {
    let n = demo.len().min(replay.len());
    let mut acc = [0.0f64; 3];
    for i in 0..n {
        let d = demo.points()[i] - replay.points()[i];
        acc[0] += d.x * d.x;
        acc[1] += d.y * d.y;
        acc[2] += d.z * d.z;
    }
    acc.map(|v| (v / n as f64).sqrt())
}

/// Per-axis amplitude (max − min) of a trajectory.
pub fn amplitude_per_axis(traj: &Trajectory) -> [f64; 3] {
    let mut min = [f64::MAX; 3];
    let mut max = [f64::MIN; 3];
    for p in traj.points() {
        for (a, v) in [p.x, p.y, p.z].iter().enumerate() {
            min[a] = min[a].min(*v);
            max[a] = max[a].max(*v);
        }
    }
    [max[0] - min[0], max[1] - min[1], max[2] - min[2]]
}

pub fn learn_primitive(opts: &LearnOptions) -> Result<LearnOutcome, PipelineError> {
    let demo = match &opts.source {
        DemoSource::Csv(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| validation(format!("{}: {e}", path.display())))?;
            parse_trajectory_csv(&text).map_err(validation)?
        }
        DemoSource::Builtin(style) => {
            demos::generate(*style, opts.demo_dt).map_err(|e| validation(e.to_string()))?
        }
    };

    let primitive = learn_from_demo(&demo, opts.gains, opts.basis_count, &opts.keyword)
        .map_err(|e| failure(e.to_string()))?;

    let replay = rollout(
        &primitive,
        &ScalingParams::new(primitive.demo_start, primitive.demo_goal),
        demo.dt(),
        None,
    )
    .map_err(|e| failure(e.to_string()))?;
    let rmse = imitation_rmse(&demo, &replay);
    let amplitude = amplitude_per_axis(&demo);
    let rmse_fraction = rmse
        .iter()
        .zip(amplitude)
        .filter(|(_, a)| *a > 1e-9)
        .map(|(r, a)| r / a)
        .fold(0.0, f64::max);

    let mut dict = if opts.dictionary_path.exists() {
        PrimitiveDictionary::load(&opts.dictionary_path).map_err(|e| validation(e.to_string()))?
    } else {
        PrimitiveDictionary::new(DictionaryMeta {
            task: opts.task.clone(),
            version: "1".to_owned(),
        })
    };
    let inserted =
        if opts.force { dict.insert_or_replace(primitive) } else { dict.insert(primitive) };
    match inserted {
        Ok(()) => {}
        Err(VlmError::DuplicateKeyword(k)) => {
            return Err(validation(format!(
                "keyword '{k}' already in {}; pass --force to overwrite",
                opts.dictionary_path.display()
            )));
        }
        Err(e) => return Err(failure(e.to_string())),
    }
    dict.save(&opts.dictionary_path).map_err(|e| failure(e.to_string()))?;

    Ok(LearnOutcome {
        keyword: opts.keyword.clone(),
        rmse_per_axis: rmse,
        rmse_fraction,
        dictionary_len: dict.len(),
    })
}
