//! Deterministic stand-in for a hosted vision-language model. Responses are
//! computed from the instruction text and the attached crop's dimensions by
//! explicit, configurable rules: regex patterns select a geometric
//! generator, and a hardness table maps object names to the primitive
//! keyword. No randomness, no network.

use super::backend::{Backend, BackendRequest, ResponseContract};
use super::VlmError;
use regex::Regex;
use serde::{Deserialize, Serialize};

/// Pixel scale assumed when the instruction states sizes in centimeters but
/// no scale is given: matches the fixture generator's 2000 px/m.
const DEFAULT_PX_PER_CM: f64 = 20.0;
/// Canvas assumed for text-only requests.
const TEXT_ONLY_CANVAS: (f64, f64) = (400.0, 300.0);
/// Tip cuts sit at this fraction of the object length from each end.
const TIP_FRACTION: f64 = 0.1;
/// Icing dots sit on a circle at this fraction of the crop half-extent.
const ICING_RING_FRACTION: f64 = 0.75;

/// Geometric generator kinds a rule can invoke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    /// Slices of a stated size: slice count = round(length / size); length
    /// from the instruction when stated, else from the crop width at the
    /// configured pixel scale. K = count − 1 vertical cuts.
    VerticalBySize,
    /// N equal vertical parts → N − 1 cuts.
    VerticalParts,
    /// N equal horizontal parts → N − 1 cuts.
    HorizontalParts,
    /// N equal slices of a round object → N/2 diameters at π/(N/2) steps.
    EqualPartsRound,
    /// Two cuts near the object tips.
    TipCuts,
    /// N point pairs (start = goal) on a ring around the center.
    IcingDots,
}

/// One pattern → generator mapping. Named capture groups feed the
/// generator: `len` and `size` (centimeters) for [`RuleKind::VerticalBySize`],
/// `n` (count) for the others; `parts` is the fallback when `n` is absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockRule {
    pub pattern: String,
    pub kind: RuleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parts: Option<u32>,
}

/// Object-name → keyword entry of the hardness table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HardnessEntry {
    pub object: String,
    pub keyword: String,
}

/// Full mock configuration, loadable from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockRules {
    pub default_keyword: String,
    pub hardness: Vec<HardnessEntry>,
    pub rules: Vec<MockRule>,
    #[serde(default = "default_px_per_cm")]
    pub px_per_cm: f64,
}

fn default_px_per_cm() -> f64 {
    DEFAULT_PX_PER_CM
}

impl MockRules {
    /// Rules covering the built-in cutting scenarios.
    pub fn builtin() -> Self {
        let rule = |pattern: &str, kind: RuleKind, parts: Option<u32>| MockRule {
            pattern: pattern.to_owned(),
            kind,
            parts,
        };
        Self {
            default_keyword: "straight".to_owned(),
            // Keys are object nouns: the scan covers the whole request
            // text, and adjectives would collide with the primitive
            // descriptions embedded in the system prompt.
            hardness: vec![
                HardnessEntry { object: "baguette".to_owned(), keyword: "sawing".to_owned() },
                HardnessEntry { object: "bread crust".to_owned(), keyword: "sawing".to_owned() },
            ],
            rules: vec![
                rule(
                    r"(?i)(?:(?P<len>\d+(?:\.\d+)?)\s*cm\s+long.*)?into\s+(?P<size>\d+(?:\.\d+)?)\s*cm\s+slices",
                    RuleKind::VerticalBySize,
                    None,
                ),
                rule(r"(?i)into\s+(?P<n>\d+)\s+equal\s+slices", RuleKind::EqualPartsRound, None),
                rule(r"(?i)party\s+for\s+(?P<n>\d+)", RuleKind::EqualPartsRound, None),
                rule(
                    r"(?i)each\s+day\s+of\s+(?:this\s+|the\s+)?week",
                    RuleKind::VerticalParts,
                    Some(7),
                ),
                rule(
                    r"(?i)into\s+(?P<n>\d+)\s+parts\s+horizontally",
                    RuleKind::HorizontalParts,
                    None,
                ),
                rule(r"(?i)single\s+horizontal\s+slice", RuleKind::HorizontalParts, Some(2)),
                rule(r"(?i)both\s+tips", RuleKind::TipCuts, None),
                rule(r"(?i)(?P<n>\d+)\s+icings?\s+around", RuleKind::IcingDots, None),
            ],
            px_per_cm: DEFAULT_PX_PER_CM,
        }
    }

    /// Rules for the icing task: same geometry rules, keyword defaults to
    /// the line primitive.
    pub fn builtin_icing() -> Self {
        Self { default_keyword: "line".to_owned(), hardness: vec![], ..Self::builtin() }
    }

    pub fn load(path: &std::path::Path) -> Result<Self, VlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| VlmError::BadRules(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| VlmError::BadRules(e.to_string()))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), VlmError> {
        let text =
            serde_json::to_string_pretty(self).map_err(|e| VlmError::BadRules(e.to_string()))?;
        std::fs::write(path, text)
            .map_err(|e| VlmError::BadRules(format!("{}: {e}", path.display())))
    }
}

/// The deterministic mock backend.
pub struct MockBackend {
    rules: MockRules,
    compiled: Vec<Regex>,
    /// Hardness entries sorted longest-object-first so "bread crust" wins
    /// over "bread".
    hardness_order: Vec<usize>,
}

/// Builds a mock backend from the given rules, compiling every pattern.
pub fn mock_backend(rules: MockRules) -> Result<MockBackend, VlmError> {
    let compiled = rules
        .rules
        .iter()
        .map(|r| Regex::new(&r.pattern).map_err(|e| VlmError::BadRules(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut hardness_order: Vec<usize> = (0..rules.hardness.len()).collect();
    hardness_order.sort_by(|&a, &b| {
        let (oa, ob) = (&rules.hardness[a].object, &rules.hardness[b].object);
        ob.len().cmp(&oa.len()).then(oa.cmp(ob))
    });
    if !(rules.px_per_cm.is_finite() && rules.px_per_cm > 0.0) {
        return Err(VlmError::BadRules("px_per_cm must be positive".to_owned()));
    }
    Ok(MockBackend { rules, compiled, hardness_order })
}

type PixelPair = [[f64; 2]; 2];

impl MockBackend {
    fn choose_keyword(&self, text: &str) -> &str {
        let haystack = text.to_lowercase();
        for &i in &self.hardness_order {
            let entry = &self.rules.hardness[i];
            if haystack.contains(&entry.object.to_lowercase()) {
                return &entry.keyword;
            }
        }
        &self.rules.default_keyword
    }

    fn generate_pairs(
        &self,
        instruction: &str,
        w: f64,
        h: f64,
    ) -> Result<Vec<PixelPair>, VlmError> {
        let no_rule = || VlmError::MockNoRule { instruction: instruction.to_owned() };
        for (rule, regex) in self.rules.rules.iter().zip(&self.compiled) {
            let Some(caps) = regex.captures(instruction) else {
                continue;
            };
            let capture_f64 =
                |name: &str| caps.name(name).and_then(|m| m.as_str().parse::<f64>().ok());
            let count = |caps_name: &str| -> Option<u32> {
                capture_f64(caps_name).map(|v| v as u32).or(rule.parts)
            };
            let pairs = match rule.kind {
                RuleKind::VerticalBySize => {
                    let size = capture_f64("size").ok_or_else(no_rule)?;
                    let len = capture_f64("len").unwrap_or(w / self.rules.px_per_cm);
                    if size <= 0.0 || len <= 0.0 {
                        return Err(no_rule());
                    }
                    let slices = (len / size).round() as i64;
                    if slices < 2 {
                        return Err(no_rule());
                    }
                    vertical_cuts(slices as u32 - 1, w, h)
                }
                RuleKind::VerticalParts => {
                    let parts = count("n").ok_or_else(no_rule)?;
                    if parts < 2 {
                        return Err(no_rule());
                    }
                    vertical_cuts(parts - 1, w, h)
                }
                RuleKind::HorizontalParts => {
                    let parts = count("n").ok_or_else(no_rule)?;
                    if parts < 2 {
                        return Err(no_rule());
                    }
                    horizontal_cuts(parts - 1, w, h)
                }
                RuleKind::EqualPartsRound => {
                    let n = count("n").ok_or_else(no_rule)?;
                    if n < 2 || n % 2 != 0 {
                        return Err(no_rule());
                    }
                    diameter_cuts(n / 2, w, h)
                }
                RuleKind::TipCuts => {
                    let a = TIP_FRACTION * w;
                    let b = (1.0 - TIP_FRACTION) * w;
                    vec![[[a, 0.0], [a, h]], [[b, 0.0], [b, h]]]
                }
                RuleKind::IcingDots => {
                    let n = count("n").ok_or_else(no_rule)?;
                    if n == 0 {
                        return Err(no_rule());
                    }
                    icing_dots(n, w, h)
                }
            };
            return Ok(pairs);
        }
        Err(no_rule())
    }
}

/// `k` cuts dividing the crop width into k+1 equal parts, each spanning the
/// crop rows top to bottom, ordered left to right.
fn vertical_cuts(k: u32, w: f64, h: f64) -> Vec<PixelPair> {
    (1..=k)
        .map(|i| {
            let x = i as f64 * w / (k + 1) as f64;
            [[x, 0.0], [x, h]]
        })
        .collect()
}

/// `k` cuts dividing the crop height equally, each spanning the columns
/// left to right, ordered top to bottom.
fn horizontal_cuts(k: u32, w: f64, h: f64) -> Vec<PixelPair> {
    (1..=k)
        .map(|i| {
            let y = i as f64 * h / (k + 1) as f64;
            [[0.0, y], [w, y]]
        })
        .collect()
}

/// `k` diameters through the crop center at angle steps of π/k, radius half
/// the smaller crop extent.
fn diameter_cuts(k: u32, w: f64, h: f64) -> Vec<PixelPair> {
    let (cx, cy) = (w / 2.0, h / 2.0);
    let r = w.min(h) / 2.0;
    (0..k)
        .map(|i| {
            let theta = i as f64 * std::f64::consts::PI / k as f64;
            let (dx, dy) = (r * theta.cos(), r * theta.sin());
            [[cx + dx, cy + dy], [cx - dx, cy - dy]]
        })
        .collect()
}

/// `n` point pairs on a ring around the crop center, start = goal.
fn icing_dots(n: u32, w: f64, h: f64) -> Vec<PixelPair> {
    let (cx, cy) = (w / 2.0, h / 2.0);
    let r = ICING_RING_FRACTION * w.min(h) / 2.0;
    (0..n)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let p = [cx + r * theta.cos(), cy + r * theta.sin()];
            [p, p]
        })
        .collect()
}

impl Backend for MockBackend {
    fn complete(&mut self, request: &BackendRequest) -> Result<String, VlmError> {
        let (w, h) = match (request.canvas, &request.image) {
            (Some((w, h)), _) => (w as f64, h as f64),
            (None, Some(att)) => (att.width as f64, att.height as f64),
            (None, None) => TEXT_ONLY_CANVAS,
        };
        let keyword_haystack = format!("{}\n{}", request.system, request.user_text);
        let reply = match request.contract {
            ResponseContract::KeywordOnly => {
                serde_json::json!({ "keyword": self.choose_keyword(&keyword_haystack) })
            }
            ResponseContract::PairsOnly => {
                serde_json::json!({
                    "keypoint_pairs": self.generate_pairs(&request.user_text, w, h)?
                })
            }
            ResponseContract::KeywordAndPairs => serde_json::json!({
                "keyword": self.choose_keyword(&keyword_haystack),
                "keypoint_pairs": self.generate_pairs(&request.user_text, w, h)?,
            }),
        };
        Ok(reply.to_string())
    }

    fn name(&self) -> &'static str {
        "mock"
    }
}
