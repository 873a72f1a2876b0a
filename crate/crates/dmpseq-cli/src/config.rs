//! Pipeline configuration: a TOML file mirroring the fields below, with
//! command-line flags overriding individual values.

use dmpseq::geometry::HeightMode;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct HttpSettings {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_s: f64,
}

impl Default for HttpSettings {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8080/v1/chat/completions".to_owned(),
            model: "default".to_owned(),
            api_key_env: "DMPSEQ_API_KEY".to_owned(),
            timeout_s: 60.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default)]
pub struct DetectorSettings {
    pub threshold_delta: f64,
    pub blur_sigma: f64,
    pub min_area: usize,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        let d = dmpseq::perception::DetectorConfig::default();
        Self { threshold_delta: d.threshold_delta, blur_sigma: d.blur_sigma, min_area: d.min_area }
    }
}

impl DetectorSettings {
    pub fn to_config(self) -> dmpseq::perception::DetectorConfig {
        dmpseq::perception::DetectorConfig {
            threshold_delta: self.threshold_delta,
            blur_sigma: self.blur_sigma,
            min_area: self.min_area,
        }
    }
}

/// Full configuration of one pipeline run.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub image_path: PathBuf,
    pub instruction: String,
    pub object_height_m: f64,
    pub height_mode: HeightMode,
    pub margin_m: f64,
    /// Support surface height (the board top), meters.
    pub base_z_m: f64,
    pub dictionary_path: PathBuf,
    /// Board size (width, height) in meters; the image maps onto it.
    pub env_size_m: [f64; 2],
    pub global_shift_px: [f64; 2],
    pub backend: BackendChoice,
    pub http: HttpSettings,
    pub mock_rules_path: Option<PathBuf>,
    pub dt: f64,
    pub output_dir: PathBuf,
    /// Label of the evaluation scenario this run belongs to, if any.
    pub scenario_id: Option<String>,
    /// End-effector start position; defaults to board center at hover height.
    pub home_m: Option<[f64; 3]>,
    /// Object name hint passed to the backend in the task label.
    pub object_label: Option<String>,
    /// Stop after the keypoint overlay, before motion generation.
    pub verify_only: bool,
    /// Query the two components in separate backend calls.
    pub separate_calls: bool,
    /// Send no image to the backend (ablation mode).
    pub text_only: bool,
    /// Clamp out-of-crop keypoints instead of rejecting them.
    pub clamp_keypoints: bool,
    pub detector: DetectorSettings,
    /// Include wall-clock stage timings in run.json (nondeterministic).
    pub emit_timings: bool,
    /// Few-shot example lines inserted into the prompts.
    pub examples: Vec<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            image_path: PathBuf::new(),
            instruction: String::new(),
            object_height_m: 0.04,
            height_mode: HeightMode::StartAtHeight,
            margin_m: 0.02,
            base_z_m: 0.0,
            dictionary_path: PathBuf::new(),
            env_size_m: [0.30, 0.18],
            global_shift_px: [0.0, 0.0],
            backend: BackendChoice::Mock,
            http: HttpSettings::default(),
            mock_rules_path: None,
            dt: 0.002,
            output_dir: PathBuf::from("out"),
            scenario_id: None,
            home_m: None,
            object_label: None,
            verify_only: false,
            separate_calls: false,
            text_only: false,
            clamp_keypoints: false,
            detector: DetectorSettings::default(),
            emit_timings: false,
            examples: Vec::new(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Checks everything that can be checked before any work happens.
    pub fn validate(&self) -> Result<(), String> {
        if self.image_path.as_os_str().is_empty() {
            return Err("image_path is required".to_owned());
        }
        if !self.image_path.exists() {
            return Err(format!("image not found: {}", self.image_path.display()));
        }
        if self.instruction.trim().is_empty() {
            return Err("instruction is required".to_owned());
        }
        if self.dictionary_path.as_os_str().is_empty() {
            return Err("dictionary_path is required".to_owned());
        }
        if !self.dictionary_path.exists() {
            return Err(format!("dictionary not found: {}", self.dictionary_path.display()));
        }
        if let Some(p) = &self.mock_rules_path {
            if !p.exists() {
                return Err(format!("mock rules not found: {}", p.display()));
            }
        }
        if !(self.object_height_m >= 0.0 && self.object_height_m.is_finite()) {
            return Err("object_height_m must be non-negative".to_owned());
        }
        if !(self.margin_m >= 0.0 && self.margin_m.is_finite()) {
            return Err("margin_m must be non-negative".to_owned());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err("dt must be positive".to_owned());
        }
        if self.env_size_m.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err("env_size_m must be positive".to_owned());
        }
        if self.http.timeout_s.is_nan() || self.http.timeout_s <= 0.0 {
            return Err("http.timeout_s must be positive".to_owned());
        }
        Ok(())
    }

    pub fn home(&self) -> nalgebra::Vector3<f64> {
        match self.home_m {
            Some(h) => nalgebra::Vector3::new(h[0], h[1], h[2]),
            None => dmpseq::metrics::default_home(nalgebra::Vector2::new(
                self.env_size_m[0],
                self.env_size_m[1],
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_with_defaults() {
        let text = r#"
            image_path = "obs.png"
            instruction = "cut it"
            dictionary_path = "dict.json"
            backend = "mock"
            height_mode = "start_at_height"
            [detector]
            blur_sigma = 2.0
        "#;
        let cfg: PipelineConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.instruction, "cut it");
        assert_eq!(cfg.detector.blur_sigma, 2.0);
        assert_eq!(cfg.detector.min_area, 25);
        assert_eq!(cfg.dt, 0.002);
        assert_eq!(cfg.env_size_m, [0.30, 0.18]);
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"
            image_path = "obs.png"
            instruction = "cut"
            dictionary_path = "d.json"
            no_such_field = 1
        "#;
        assert!(toml::from_str::<PipelineConfig>(text).is_err());
    }

    #[test]
    fn validation_requires_existing_paths() {
        let cfg = PipelineConfig {
            image_path: PathBuf::from("/nonexistent/image.png"),
            instruction: "cut".to_owned(),
            dictionary_path: PathBuf::from("/nonexistent/dict.json"),
            ..PipelineConfig::default()
        };
        assert!(cfg.validate().unwrap_err().contains("image not found"));
    }

    #[test]
    fn default_home_is_board_center() {
        let cfg = PipelineConfig::default();
        let home = cfg.home();
        assert_eq!(home.x, 0.15);
        assert_eq!(home.y, 0.09);
        assert_eq!(home.z, dmpseq::metrics::DEFAULT_HOME_Z);
    }
}
