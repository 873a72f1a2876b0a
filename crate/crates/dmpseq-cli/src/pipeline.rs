//! End-to-end motion generation: image → detection → backend query →
//! keyword resolution → keypoint post-processing → plan → render →
//! artifacts. Every stage failure reports the stage name; exit codes
//! classify errors as validation (2), backend (3) or pipeline (4).

use crate::artifacts;
use crate::config::{BackendChoice, PipelineConfig};
use crate::fixture;
use dmpseq::dmp::Trajectory;
use dmpseq::geometry::{post_process, FrameSpec, HeightSpec, KeypointPair};
use dmpseq::perception::{detect_object, BoundingBox};
use dmpseq::sequencer::{
    build_plan, check_workspace, render, MotionPlan, ScalingParams, WorkspaceBounds,
};
use dmpseq::vlm::{
    self, default_description, mock_backend, Backend, BackendRequest, HttpBackend, HttpConfig,
    MockRules, OobPolicy, PrimitiveDictionary, QueryOptions, TaskContext, VlmError,
};
use dmpseq::{Vec2, Vec3};
use std::path::PathBuf;
use std::time::Instant;
use thiserror::Error;

/// Exit-code class of a pipeline failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad configuration or input files; exit code 2.
    Validation,
    /// Backend transport or response problems; exit code 3.
    Backend,
    /// A processing stage failed; exit code 4.
    Pipeline,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Validation => 2,
            ErrorClass::Backend => 3,
            ErrorClass::Pipeline => 4,
        }
    }
}

#[derive(Debug, Error)]
#[error("stage {stage}: {detail}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub detail: String,
    pub class: ErrorClass,
}

impl PipelineError {
    fn validation(stage: &'static str, detail: impl Into<String>) -> Self {
        Self { stage, detail: detail.into(), class: ErrorClass::Validation }
    }

    fn backend(stage: &'static str, detail: impl Into<String>) -> Self {
        Self { stage, detail: detail.into(), class: ErrorClass::Backend }
    }

    fn pipeline(stage: &'static str, detail: impl Into<String>) -> Self {
        Self { stage, detail: detail.into(), class: ErrorClass::Pipeline }
    }
}

/// Everything a completed (or verify-only) run produced.
#[derive(Debug)]
pub struct RunReport {
    pub keyword: String,
    pub pairs_px: Vec<KeypointPair>,
    pub scaling: Vec<ScalingParams>,
    pub bbox: BoundingBox,
    pub plan: Option<MotionPlan>,
    pub trajectory: Option<Trajectory>,
    pub raw_response: String,
    pub backend_name: String,
    pub backend_calls: u32,
    pub outputs: Vec<PathBuf>,
}

/// Counts completions so a run report can attest how many backend calls a
/// run made (and that mock mode made them all against the mock).
struct CountingBackend<B: Backend> {
    inner: B,
    calls: u32,
}

impl<B: Backend> Backend for CountingBackend<B> {
    fn complete(&mut self, request: &BackendRequest) -> Result<String, VlmError> {
        self.calls += 1;
        self.inner.complete(request)
    }

    fn name(&self) -> &'static str {
        self.inner.name()
    }
}

fn backend_error_class(err: &VlmError) -> ErrorClass {
    match err {
        VlmError::BackendUnavailable { .. }
        | VlmError::MalformedResponse { .. }
        | VlmError::UnknownKeyword { .. }
        | VlmError::InvalidKeypoint { .. }
        | VlmError::MockNoRule { .. } => ErrorClass::Backend,
        _ => ErrorClass::Pipeline,
    }
}

/// Runs the one-shot pipeline for a validated configuration.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport, PipelineError> {
    let mut timings: Vec<(String, f64)> = Vec::new();
    let mark = |label: &str, start: Instant, timings: &mut Vec<(String, f64)>| {
        timings.push((label.to_owned(), start.elapsed().as_secs_f64() * 1e3));
    };

    // Everything loadable is loaded and validated before any backend call.
    let t0 = Instant::now();
    cfg.validate().map_err(|e| PipelineError::validation("config", e))?;
    let dictionary = PrimitiveDictionary::load(&cfg.dictionary_path)
        .map_err(|e| PipelineError::validation("config", e.to_string()))?;
    if dictionary.is_empty() {
        return Err(PipelineError::validation("config", "dictionary has no primitives"));
    }
    let rules = match &cfg.mock_rules_path {
        Some(path) => {
            MockRules::load(path).map_err(|e| PipelineError::validation("config", e.to_string()))?
        }
        None => MockRules::builtin(),
    };
    mark("config", t0, &mut timings);

    let t = Instant::now();
    let observation = fixture::load_gray(&cfg.image_path)
        .map_err(|e| PipelineError::validation("load-image", e))?;
    mark("load-image", t, &mut timings);

    let t = Instant::now();
    let (bbox, crop) = detect_object(&observation, &cfg.detector.to_config())
        .map_err(|e| PipelineError::pipeline("detect", e.to_string()))?;
    mark("detect", t, &mut timings);

    let t = Instant::now();
    let task_name = match &cfg.object_label {
        Some(label) => format!("{} ({label})", dictionary.meta().task),
        None => dictionary.meta().task.clone(),
    };
    let ctx = TaskContext {
        task_name,
        primitive_keywords: dictionary
            .keywords()
            .map(|k| (k.to_owned(), default_description(k).to_owned()))
            .collect(),
        instruction_text: cfg.instruction.clone(),
        crop: Some(crop.clone()),
        attach_image: !cfg.text_only,
        examples: cfg.examples.clone(),
    };
    let options = QueryOptions {
        oob: if cfg.clamp_keypoints { OobPolicy::Clamp } else { OobPolicy::Reject },
        ..QueryOptions::default()
    };
    let run_query = |backend: &mut dyn Backend| {
        if cfg.separate_calls {
            vlm::query_separate(backend, &ctx, &options)
        } else {
            vlm::query(backend, &ctx, &options)
        }
    };
    let (response, backend_name, backend_calls) = match cfg.backend {
        BackendChoice::Mock => {
            let inner = mock_backend(rules)
                .map_err(|e| PipelineError::validation("config", e.to_string()))?;
            let mut counting = CountingBackend { inner, calls: 0 };
            let resp = run_query(&mut counting).map_err(|e| PipelineError {
                stage: "query",
                detail: e.to_string(),
                class: backend_error_class(&e),
            })?;
            (resp, "mock".to_owned(), counting.calls)
        }
        BackendChoice::Http => {
            let http = HttpConfig {
                endpoint: cfg.http.endpoint.clone(),
                model: cfg.http.model.clone(),
                api_key_env: Some(cfg.http.api_key_env.clone()),
                timeout: std::time::Duration::from_secs_f64(cfg.http.timeout_s),
                ..HttpConfig::default()
            };
            let inner = HttpBackend::new(http)
                .map_err(|e| PipelineError::backend("query", e.to_string()))?;
            let mut counting = CountingBackend { inner, calls: 0 };
            let resp = run_query(&mut counting).map_err(|e| PipelineError {
                stage: "query",
                detail: e.to_string(),
                class: backend_error_class(&e),
            })?;
            (resp, "http".to_owned(), counting.calls)
        }
    };
    mark("query", t, &mut timings);

    let t = Instant::now();
    let primitive = vlm::resolve(&dictionary, &response.keyword)
        .map_err(|e| PipelineError::pipeline("resolve", e.to_string()))?
        .clone();
    mark("resolve", t, &mut timings);

    let t = Instant::now();
    let frame = FrameSpec::new(
        Vec2::new(bbox.x as f64, bbox.y as f64),
        Vec2::new(cfg.global_shift_px[0], cfg.global_shift_px[1]),
        Vec2::new(observation.width() as f64, observation.height() as f64),
        Vec2::new(cfg.env_size_m[0], cfg.env_size_m[1]),
    )
    .map_err(|e| PipelineError::pipeline("post-process", e.to_string()))?;
    let height = HeightSpec::new(cfg.object_height_m, cfg.margin_m, cfg.height_mode, cfg.base_z_m);
    let scaling = post_process(&response.pairs, &frame, &height)
        .map_err(|e| PipelineError::pipeline("post-process", e.to_string()))?;
    mark("post-process", t, &mut timings);

    let t = Instant::now();
    let bounds = WorkspaceBounds::board(cfg.env_size_m[0], cfg.env_size_m[1]);
    check_workspace(&scaling, &bounds)
        .map_err(|e| PipelineError::pipeline("plan", e.to_string()))?;
    let plan = build_plan(&scaling, &response.keyword, cfg.home())
        .map_err(|e| PipelineError::pipeline("plan", e.to_string()))?;
    mark("plan", t, &mut timings);

    let trajectory = if cfg.verify_only {
        None
    } else {
        let t = Instant::now();
        let translation = dmpseq::dmp::Primitive::translation(primitive.gains);
        let traj = render(&plan, &dictionary, &translation, cfg.dt)
            .map_err(|e| PipelineError::pipeline("render", e.to_string()))?;
        mark("render", t, &mut timings);
        Some(traj)
    };

    let t = Instant::now();
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| PipelineError::pipeline("artifacts", e.to_string()))?;
    let mut outputs = Vec::new();

    let overlay_path = cfg.output_dir.join("keypoints.svg");
    std::fs::write(&overlay_path, artifacts::keypoint_overlay_svg(&crop, &response.pairs))
        .map_err(|e| PipelineError::pipeline("artifacts", e.to_string()))?;
    outputs.push(overlay_path);

    if let Some(traj) = &trajectory {
        let csv_path = cfg.output_dir.join("trajectory.csv");
        artifacts::write_trajectory_csv(traj, &csv_path)
            .map_err(|e| PipelineError::pipeline("artifacts", e))?;
        outputs.push(csv_path);

        let path_svg = cfg.output_dir.join("path.svg");
        std::fs::write(
            &path_svg,
            artifacts::path_projections_svg(traj, (cfg.env_size_m[0], cfg.env_size_m[1])),
        )
        .map_err(|e| PipelineError::pipeline("artifacts", e.to_string()))?;
        outputs.push(path_svg);
    }

    let run_json = artifacts::RunJson {
        instruction: cfg.instruction.clone(),
        backend: backend_name.clone(),
        backend_calls,
        keyword: response.keyword.clone(),
        detection: artifacts::detection_json(&bbox, &observation),
        keypoint_pairs_px: response
            .pairs
            .iter()
            .map(|p| [[p.start.x, p.start.y], [p.goal.x, p.goal.y]])
            .collect(),
        scaling_params_m: scaling.iter().map(artifacts::scaling_json).collect(),
        motion: trajectory
            .as_ref()
            .map(|traj| artifacts::motion_json(&plan, primitive.gains.tau, traj)),
        raw_response: response.raw.clone(),
        wall_timings_ms: if cfg.emit_timings { Some(timings.clone()) } else { None },
    };
    let json_path = cfg.output_dir.join("run.json");
    artifacts::write_run_json(&run_json, &json_path)
        .map_err(|e| PipelineError::pipeline("artifacts", e))?;
    outputs.push(json_path);
    mark("artifacts", t, &mut timings);

    Ok(RunReport {
        keyword: response.keyword,
        pairs_px: response.pairs,
        scaling,
        bbox,
        plan: Some(plan),
        trajectory,
        raw_response: response.raw,
        backend_name,
        backend_calls,
        outputs,
    })
}

/// Home position helper shared with the evaluation harness.
pub fn board_env(cfg: &PipelineConfig) -> Vec2 {
    Vec2::new(cfg.env_size_m[0], cfg.env_size_m[1])
}

/// Convenience for tests: a home position for an environment.
pub fn default_home_for(env: Vec2) -> Vec3 {
    dmpseq::metrics::default_home(env)
}
