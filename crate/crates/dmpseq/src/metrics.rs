//! Evaluation harness: parametric ground-truth scenario generators for the
//! cutting tasks and the closest-unpaired-point discrepancy metric. Each
//! ground-truth point is matched greedily (in trajectory order) to its
//! nearest not-yet-matched generated point; the metric is the mean of those
//! distances, so it is insensitive to point ordering by construction.

use crate::dmp::{Primitive, Trajectory};
use crate::geometry::{integrate_height, HeightMode, HeightSpec};
use crate::sequencer::{build_plan, render, ScalingParams, SequenceError};
use crate::vlm::{DictionaryMeta, PrimitiveDictionary};
use crate::{Vec2, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hover height of the end effector's home position, meters.
pub const DEFAULT_HOME_Z: f64 = 0.12;
/// Default number of points the ground truth is downsampled to.
pub const DEFAULT_GT_POINTS: usize = 100;
/// Default safety margin added above the object, meters.
pub const DEFAULT_MARGIN: f64 = 0.02;
/// Tip cuts sit at this fraction of the object length from each end.
const TIP_FRACTION: f64 = 0.1;
/// Optimal assignment is exponential in the generated point count.
const OPTIMAL_MAX_GENERATED: usize = 22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("scenario invalid: {0}")]
    BadScenario(String),
    #[error("cannot downsample {available} points to {requested}")]
    UpsampleRefused { requested: usize, available: usize },
    #[error("downsample target must be at least 2, got {0}")]
    BadDownsampleCount(usize),
    #[error("generated trajectory has {got} points, need at least {needed}")]
    InsufficientGenerated { needed: usize, got: usize },
    #[error("optimal assignment supports at most {max} generated points, got {got}")]
    TooLargeForOptimal { got: usize, max: usize },
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

/// Parametric ground-truth pattern. Cut patterns are expanded over an
/// object centered on the board; `Custom` carries explicit 3D parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum GtPattern {
    /// `n` cuts evenly spaced along the object length, each spanning the
    /// object width.
    VerticalCuts { n: u32 },
    /// `n` cuts evenly spaced along the object width, each spanning the
    /// object length.
    HorizontalCuts { n: u32 },
    /// `n` equal pie slices: n/2 diameters at equal angle steps.
    PieCuts { n: u32 },
    /// One cut near each tip of the object.
    TipCuts,
    /// Explicit start/goal parameters, already 3D.
    Custom(Vec<ScalingParams>),
}

/// One evaluation scenario: the object, the instruction given to the
/// backend, and the pattern a correct system should produce.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub object_kind: String,
    /// (length, width, height) in meters; round objects use length = width.
    pub object_size: (f64, f64, f64),
    pub instruction: String,
    pub generator: GtPattern,
    pub expected_keyword: String,
    pub height_mode: HeightMode,
    pub margin: f64,
}

/// Greedy matching report: one distance per ground-truth point, their mean,
/// and the matched generated indices (pairwise distinct).
#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub per_point_distances: Vec<f64>,
    pub mean: f64,
    pub matched_indices: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchMode {
    #[default]
    Greedy,
    /// Exact minimum-sum assignment; exponential in the generated count,
    /// diagnostics only.
    OptimalAssignment,
}

/// Home position used for ground truth and pipelines alike: board center
/// at hover height.
pub fn default_home(env: Vec2) -> Vec3 {
    Vec3::new(env.x / 2.0, env.y / 2.0, DEFAULT_HOME_Z)
}

/// Expands a scenario's pattern into 3D scaling parameters with the object
/// centered on the board.
pub fn expand_pattern(scn: &Scenario, env: Vec2) -> Result<Vec<ScalingParams>, MetricsError> {
    let (length, width, height) = scn.object_size;
    if !(length > 0.0 && width > 0.0 && height >= 0.0) {
        return Err(MetricsError::BadScenario(format!("{}: object size must be positive", scn.id)));
    }
    let center = Vec2::new(env.x / 2.0, env.y / 2.0);
    let spec = HeightSpec::new(height, scn.margin, scn.height_mode, 0.0);
    let lift = |pairs: Vec<(Vec2, Vec2)>| {
        pairs.into_iter().map(|(s, g)| integrate_height(s, g, &spec)).collect::<Vec<_>>()
    };
    let pairs = match &scn.generator {
        GtPattern::VerticalCuts { n } => {
            if *n == 0 {
                return Err(MetricsError::BadScenario(format!("{}: zero cuts", scn.id)));
            }
            lift(
                (1..=*n)
                    .map(|i| {
                        let x = center.x - length / 2.0 + i as f64 * length / (*n + 1) as f64;
                        (Vec2::new(x, center.y - width / 2.0), Vec2::new(x, center.y + width / 2.0))
                    })
                    .collect(),
            )
        }
        GtPattern::HorizontalCuts { n } => {
            if *n == 0 {
                return Err(MetricsError::BadScenario(format!("{}: zero cuts", scn.id)));
            }
            lift(
                (1..=*n)
                    .map(|j| {
                        let y = center.y - width / 2.0 + j as f64 * width / (*n + 1) as f64;
                        (
                            Vec2::new(center.x - length / 2.0, y),
                            Vec2::new(center.x + length / 2.0, y),
                        )
                    })
                    .collect(),
            )
        }
        GtPattern::PieCuts { n } => {
            if *n < 2 || n % 2 != 0 {
                return Err(MetricsError::BadScenario(format!(
                    "{}: pie cuts need an even slice count, got {n}",
                    scn.id
                )));
            }
            let k = n / 2;
            let r = length.min(width) / 2.0;
            lift(
                (0..k)
                    .map(|i| {
                        let theta = i as f64 * std::f64::consts::PI / k as f64;
                        let d = Vec2::new(r * theta.cos(), r * theta.sin());
                        (center + d, center - d)
                    })
                    .collect(),
            )
        }
        GtPattern::TipCuts => lift(
            [TIP_FRACTION, 1.0 - TIP_FRACTION]
                .iter()
                .map(|f| {
                    let x = center.x - length / 2.0 + f * length;
                    (Vec2::new(x, center.y - width / 2.0), Vec2::new(x, center.y + width / 2.0))
                })
                .collect(),
        ),
        GtPattern::Custom(list) => {
            if list.is_empty() {
                return Err(MetricsError::BadScenario(format!("{}: empty custom list", scn.id)));
            }
            list.clone()
        }
    };
    Ok(pairs)
}

/// Renders the scenario's ground-truth trajectory: pattern expansion, then
/// the same plan/render path the pipeline uses, with the given primitive.
pub fn generate_ground_truth(
    scn: &Scenario,
    env: Vec2,
    primitive: &Primitive,
    dt: f64,
) -> Result<Trajectory, MetricsError> {
    let pairs = expand_pattern(scn, env)?;
    let plan = build_plan(&pairs, &primitive.keyword, default_home(env))?;
    let mut dict = PrimitiveDictionary::new(DictionaryMeta {
        task: "ground truth".to_owned(),
        version: "1".to_owned(),
    });
    dict.insert(primitive.clone()).map_err(|e| MetricsError::BadScenario(e.to_string()))?;
    let translation = Primitive::translation(primitive.gains);
    Ok(render(&plan, &dict, &translation, dt)?)
}

/// Downsamples to `n` points at indices `round(i·(len−1)/(n−1))`; endpoints
/// preserved. The returned dt is the average spacing.
pub fn downsample(traj: &Trajectory, n: usize) -> Result<Trajectory, MetricsError> {
    if n < 2 {
        return Err(MetricsError::BadDownsampleCount(n));
    }
    let len = traj.len();
    if n > len {
        return Err(MetricsError::UpsampleRefused { requested: n, available: len });
    }
    let stride = (len - 1) as f64 / (n - 1) as f64;
    let points: Vec<Vec3> =
        (0..n).map(|i| traj.points()[(i as f64 * stride).round() as usize]).collect();
    Ok(Trajectory::new(traj.dt() * stride, points).expect("valid by construction"))
}

/// Closest-unpaired-point discrepancy with greedy matching (the metric).
pub fn discrepancy(
    ground_truth: &Trajectory,
    generated: &Trajectory,
    n_gt: usize,
) -> Result<MatchReport, MetricsError> {
    discrepancy_with_mode(ground_truth, generated, n_gt, MatchMode::Greedy)
}

/// Discrepancy with an explicit matching mode.
pub fn discrepancy_with_mode(
    ground_truth: &Trajectory,
    generated: &Trajectory,
    n_gt: usize,
    mode: MatchMode,
) -> Result<MatchReport, MetricsError> {
    if generated.len() < n_gt {
        return Err(MetricsError::InsufficientGenerated { needed: n_gt, got: generated.len() });
    }
    let gt = downsample(ground_truth, n_gt)?;
    let matched = match mode {
        MatchMode::Greedy => greedy_match(gt.points(), generated.points()),
        MatchMode::OptimalAssignment => optimal_match(gt.points(), generated.points())?,
    };
    let per_point: Vec<f64> = gt
        .points()
        .iter()
        .zip(&matched)
        .map(|(m, &j)| (m - generated.points()[j]).norm())
        .collect();
    let mean = per_point.iter().sum::<f64>() / per_point.len() as f64;
    Ok(MatchReport { per_point_distances: per_point, mean, matched_indices: matched })
}

/// For each ground-truth point in trajectory order, take the nearest
/// generated point not yet claimed.
fn greedy_match(gt: &[Vec3], generated: &[Vec3]) -> Vec<usize> {
    let mut used = vec![false; generated.len()];
    let mut matched = Vec::with_capacity(gt.len());
    for m in gt {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (j, n) in generated.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (m - n).norm_squared();
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        used[best] = true;
        matched.push(best);
    }
    matched
}

/// Exact minimum-sum assignment by dynamic programming over subsets of the
/// generated points.
fn optimal_match(gt: &[Vec3], generated: &[Vec3]) -> Result<Vec<usize>, MetricsError> {
    let m = generated.len();
    if m > OPTIMAL_MAX_GENERATED {
        return Err(MetricsError::TooLargeForOptimal { got: m, max: OPTIMAL_MAX_GENERATED });
    }
    let n = gt.len();
    let dist: Vec<Vec<f64>> =
        gt.iter().map(|a| generated.iter().map(|b| (a - b).norm()).collect()).collect();
    let size = 1usize << m;
    let mut cost = vec![f64::INFINITY; size];
    let mut parent: Vec<(usize, usize)> = vec![(usize::MAX, usize::MAX); size];
    cost[0] = 0.0;
    for mask in 0..size {
        if cost[mask].is_infinite() {
            continue;
        }
        let i = mask.count_ones() as usize;
        if i >= n {
            continue;
        }
        for j in 0..m {
            if mask & (1 << j) != 0 {
                continue;
            }
            let next = mask | (1 << j);
            let c = cost[mask] + dist[i][j];
            if c < cost[next] {
                cost[next] = c;
                parent[next] = (mask, j);
            }
        }
    }
    let mut best_mask = 0usize;
    let mut best_cost = f64::INFINITY;
    for mask in 0..size {
        if mask.count_ones() as usize == n && cost[mask] < best_cost {
            best_cost = cost[mask];
            best_mask = mask;
        }
    }
    let mut matched = vec![0usize; n];
    let mut mask = best_mask;
    while mask != 0 {
        let (prev, j) = parent[mask];
        matched[mask.count_ones() as usize - 1] = j;
        mask = prev;
    }
    Ok(matched)
}

/// The nine trained-task scenarios (board-scale objects).
pub fn builtin_catalog() -> Vec<Scenario> {
    let cut = |id: &str,
               object: &str,
               size: (f64, f64, f64),
               instruction: &str,
               generator,
               keyword: &str| {
        Scenario {
            id: id.to_owned(),
            object_kind: object.to_owned(),
            object_size: size,
            instruction: instruction.to_owned(),
            generator,
            expected_keyword: keyword.to_owned(),
            height_mode: HeightMode::StartAtHeight,
            margin: DEFAULT_MARGIN,
        }
    };
    let mut list = vec![
        cut(
            "case1",
            "cabbage",
            (0.15, 0.12, 0.10),
            "A single horizontal slice in the middle",
            GtPattern::HorizontalCuts { n: 1 },
            "straight",
        ),
        cut(
            "case2",
            "banana bread",
            (0.21, 0.09, 0.06),
            "I want to eat 1 slice for each day of this week, cut it vertically",
            GtPattern::VerticalCuts { n: 6 },
            "straight",
        ),
        cut(
            "case3",
            "round cake",
            (0.16, 0.16, 0.06),
            "I'm having a party for 10 people, cut 1 slice for each",
            GtPattern::PieCuts { n: 10 },
            "straight",
        ),
        cut(
            "case4",
            "round pizza",
            (0.16, 0.16, 0.02),
            "Cut it into 8 equal slices",
            GtPattern::PieCuts { n: 8 },
            "straight",
        ),
    ];
    for (i, len_cm) in [10.0, 15.0, 20.0, 25.0, 30.0].iter().enumerate() {
        let n = (len_cm / 5.0_f64).round() as u32 - 1;
        list.push(cut(
            &format!("case{}", i + 5),
            "eggplant",
            (len_cm / 100.0, 0.05, 0.04),
            &format!("The object is {len_cm:.0} cm long, cut it vertically into 5 cm slices"),
            GtPattern::VerticalCuts { n },
            "straight",
        ));
    }
    list
}

/// Trained scenarios plus the unseen ones that fit a desk-scale board.
pub fn extended_catalog() -> Vec<Scenario> {
    let mut list = builtin_catalog();
    list.push(Scenario {
        id: "case10".to_owned(),
        object_kind: "cabbage".to_owned(),
        object_size: (0.15, 0.12, 0.10),
        instruction: "Slice the object into 3 parts horizontally".to_owned(),
        generator: GtPattern::HorizontalCuts { n: 2 },
        expected_keyword: "straight".to_owned(),
        height_mode: HeightMode::StartAtHeight,
        margin: DEFAULT_MARGIN,
    });
    list.push(Scenario {
        id: "case11".to_owned(),
        object_kind: "eggplant".to_owned(),
        object_size: (0.20, 0.05, 0.04),
        instruction: "Slice both tips of the object".to_owned(),
        generator: GtPattern::TipCuts,
        expected_keyword: "straight".to_owned(),
        height_mode: HeightMode::StartAtHeight,
        margin: DEFAULT_MARGIN,
    });
    list
}

/// Loads a scenario catalog from a JSON file.
pub fn load_catalog(path: &std::path::Path) -> Result<Vec<Scenario>, MetricsError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| MetricsError::BadScenario(format!("{}: {e}", path.display())))?;
    catalog_from_json(&text)
}

pub fn catalog_from_json(text: &str) -> Result<Vec<Scenario>, MetricsError> {
    let file: CatalogFile =
        serde_json::from_str(text).map_err(|e| MetricsError::BadScenario(e.to_string()))?;
    file.scenarios.into_iter().map(ScenarioDto::into_scenario).collect()
}

pub fn catalog_to_json(scenarios: &[Scenario]) -> String {
    let file =
        CatalogFile { scenarios: scenarios.iter().map(ScenarioDto::from_scenario).collect() };
    let mut text = serde_json::to_string_pretty(&file).expect("catalog serializes");
    text.push('\n');
    text
}

#[derive(Serialize, Deserialize)]
struct CatalogFile {
    scenarios: Vec<ScenarioDto>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioDto {
    id: String,
    object: String,
    instruction: String,
    size_m: [f64; 3],
    generator: GeneratorDto,
    expected_keyword: String,
    #[serde(default = "default_height_mode")]
    height_mode: HeightMode,
    #[serde(default = "default_margin")]
    margin_m: f64,
}

fn default_height_mode() -> HeightMode {
    HeightMode::StartAtHeight
}

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum GeneratorDto {
    VerticalCuts { n: u32 },
    HorizontalCuts { n: u32 },
    PieCuts { n: u32 },
    TipCuts,
    Custom { pairs: Vec<CustomPairDto> },
}

#[derive(Serialize, Deserialize)]
struct CustomPairDto {
    y0: [f64; 3],
    y_goal: [f64; 3],
}

impl ScenarioDto {
    fn from_scenario(s: &Scenario) -> Self {
        let generator = match &s.generator {
            GtPattern::VerticalCuts { n } => GeneratorDto::VerticalCuts { n: *n },
            GtPattern::HorizontalCuts { n } => GeneratorDto::HorizontalCuts { n: *n },
            GtPattern::PieCuts { n } => GeneratorDto::PieCuts { n: *n },
            GtPattern::TipCuts => GeneratorDto::TipCuts,
            GtPattern::Custom(list) => GeneratorDto::Custom {
                pairs: list
                    .iter()
                    .map(|p| CustomPairDto {
                        y0: [p.y0.x, p.y0.y, p.y0.z],
                        y_goal: [p.y_goal.x, p.y_goal.y, p.y_goal.z],
                    })
                    .collect(),
            },
        };
        Self {
            id: s.id.clone(),
            object: s.object_kind.clone(),
            instruction: s.instruction.clone(),
            size_m: [s.object_size.0, s.object_size.1, s.object_size.2],
            generator,
            expected_keyword: s.expected_keyword.clone(),
            height_mode: s.height_mode,
            margin_m: s.margin,
        }
    }

    fn into_scenario(self) -> Result<Scenario, MetricsError> {
        let generator = match self.generator {
            GeneratorDto::VerticalCuts { n } => GtPattern::VerticalCuts { n },
            GeneratorDto::HorizontalCuts { n } => GtPattern::HorizontalCuts { n },
            GeneratorDto::PieCuts { n } => GtPattern::PieCuts { n },
            GeneratorDto::TipCuts => GtPattern::TipCuts,
            GeneratorDto::Custom { pairs } => GtPattern::Custom(
                pairs
                    .into_iter()
                    .map(|p| ScalingParams::new(Vec3::from(p.y0), Vec3::from(p.y_goal)))
                    .collect(),
            ),
        };
        Ok(Scenario {
            id: self.id,
            object_kind: self.object,
            object_size: (self.size_m[0], self.size_m[1], self.size_m[2]),
            instruction: self.instruction,
            generator,
            expected_keyword: self.expected_keyword,
            height_mode: self.height_mode,
            margin: self.margin_m,
        })
    }
}
