//! The two vision-language contextual components: primitive selection by
//! keyword and keypoint-pair generation. Prompt builders are deterministic
//! templates; [`query`] sends one combined request through a pluggable
//! [`Backend`] and validates the reply into a typed [`VlmResponse`].
//! Adversarial backend text never panics: every reply either parses and
//! validates or becomes a typed error.

pub mod backend;
pub mod mock;

mod dictionary;

pub use backend::{
    Backend, BackendRequest, Followup, HttpBackend, HttpConfig, ImageAttachment, ResponseContract,
};
pub use dictionary::{normalize_keyword, DictionaryMeta, PrimitiveDictionary};
pub use mock::{mock_backend, HardnessEntry, MockBackend, MockRule, MockRules, RuleKind};

use crate::geometry::KeypointPair;
use crate::perception::GrayImage;
use crate::Vec2;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VlmError {
    #[error("backend unavailable after {attempts} attempt(s): {detail}")]
    BackendUnavailable { attempts: u32, detail: String },
    #[error("malformed backend response ({reason}); raw: {raw:.200}")]
    MalformedResponse { reason: String, raw: String },
    #[error("backend chose keyword '{keyword}' which is not in the available list")]
    UnknownKeyword { keyword: String },
    #[error("keypoint pair {index} invalid: {reason}")]
    InvalidKeypoint { index: usize, reason: String },
    #[error("no mock rule matches instruction: {instruction:.120}")]
    MockNoRule { instruction: String },
    #[error("keyword '{keyword}' is not in the primitive dictionary")]
    UnknownPrimitive { keyword: String },
    #[error("task context invalid: {0}")]
    InvalidContext(&'static str),
    #[error("mock rules invalid: {0}")]
    BadRules(String),
    #[error("dictionary error: {0}")]
    BadDictionary(String),
    #[error("keyword '{0}' already present (use replace to overwrite)")]
    DuplicateKeyword(String),
    #[error("image encoding failed: {0}")]
    EncodeFailed(String),
}

/// Everything the contextual components need to know about one run: the
/// task, the available primitives, the user instruction, the object crop
/// and optional few-shot example lines. `attach_image: false` keeps the
/// crop's coordinate frame (prompt dimensions, bounds validation) but sends
/// no image to the backend — the text-only ablation mode.
#[derive(Debug, Clone)]
pub struct TaskContext {
    pub task_name: String,
    /// `(keyword, one-line description)` pairs, usually the dictionary keys.
    pub primitive_keywords: Vec<(String, String)>,
    pub instruction_text: String,
    pub crop: Option<GrayImage>,
    pub attach_image: bool,
    pub examples: Vec<String>,
}

impl TaskContext {
    pub fn validate(&self) -> Result<(), VlmError> {
        if self.primitive_keywords.is_empty() {
            return Err(VlmError::InvalidContext("no primitive keywords"));
        }
        if self.primitive_keywords.iter().any(|(k, _)| normalize_keyword(k).is_empty()) {
            return Err(VlmError::InvalidContext("empty primitive keyword"));
        }
        if self.instruction_text.trim().is_empty() {
            return Err(VlmError::InvalidContext("empty instruction"));
        }
        Ok(())
    }

    fn keyword_allowed(&self, keyword: &str) -> bool {
        self.primitive_keywords.iter().any(|(k, _)| normalize_keyword(k) == keyword)
    }
}

/// Default one-line descriptions for the built-in primitive keywords.
pub fn default_description(keyword: &str) -> &'static str {
    match normalize_keyword(keyword).as_str() {
        "straight" => "straight downward cut for soft objects",
        "sawing" => "forward-and-back sawing cut with downward force, for harder or crusty objects",
        "downward" => "downward cut with a slight forward push, for soft objects",
        "forward" => "forward push cut for harder objects",
        "line" => "icing line that descends to the surface and draws from start to goal",
        _ => "learned motion primitive",
    }
}

/// A validated backend reply: the chosen keyword, the keypoint pairs in
/// crop pixel coordinates, and the verbatim reply text for audit.
#[derive(Debug, Clone, PartialEq)]
pub struct VlmResponse {
    pub keyword: String,
    pub pairs: Vec<KeypointPair>,
    pub raw: String,
}

/// What to do with keypoint coordinates outside the crop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OobPolicy {
    #[default]
    Reject,
    Clamp,
}

#[derive(Debug, Clone, Copy)]
pub struct QueryOptions {
    /// Retries after a malformed reply, with the parse error appended to
    /// the conversation.
    pub max_retries: u32,
    pub oob: OobPolicy,
}

impl Default for QueryOptions {
    fn default() -> Self {
        Self { max_retries: 2, oob: OobPolicy::Reject }
    }
}

/// Prompt for keyword-labeled primitive selection. Deterministic: the same
/// context yields byte-identical text.
pub fn build_keyword_prompt(ctx: &TaskContext) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "You are selecting the motion primitive for a {} task.\n",
        ctx.task_name
    ));
    if ctx.crop.is_some() {
        out.push_str("The attached image shows the target object, cropped to its bounding box.\n");
    }
    out.push_str(&format!("Instruction: {}\n\nAvailable primitives:\n", ctx.instruction_text));
    for (keyword, description) in &ctx.primitive_keywords {
        out.push_str(&format!("- {keyword}: {description}\n"));
    }
    push_examples(&mut out, &ctx.examples);
    out.push_str(
        "\nReply with a single JSON object of the form {\"keyword\": \"<keyword>\"} where \
         <keyword> is exactly one of the primitive names listed above. No other text.\n",
    );
    out
}

/// Prompt for keypoint-pair generation; states the crop dimensions and the
/// pixel coordinate convention.
pub fn build_keypoint_prompt(ctx: &TaskContext) -> String {
    let mut out = String::new();
    out.push_str(&format!("You are planning the motion geometry for a {} task.\n", ctx.task_name));
    if let Some(crop) = &ctx.crop {
        out.push_str(&format!(
            "The attached image shows the target object, cropped to its bounding box. \
             The image is {} by {} pixels. Pixel (0, 0) is the top-left corner; x grows to \
             the right and y grows downward.\n",
            crop.width(),
            crop.height()
        ));
    }
    out.push_str(&format!("Instruction: {}\n", ctx.instruction_text));
    out.push_str(
        "\nDecide the sub-motions needed to satisfy the instruction and output one keypoint \
         pair per sub-motion, in execution order. Each pair is the start and goal pixel of one \
         line segment on the image; a pair with identical start and goal marks a point action.\n",
    );
    push_examples(&mut out, &ctx.examples);
    out.push_str(
        "\nReply with a single JSON object of the form \
         {\"keypoint_pairs\": [[[x1, y1], [x2, y2]], ...]} listing every pair in order. \
         No other text.\n",
    );
    out
}

fn push_examples(out: &mut String, examples: &[String]) {
    if examples.is_empty() {
        return;
    }
    out.push_str("\nExamples:\n");
    for example in examples {
        out.push_str(&format!("- {example}\n"));
    }
}

/// Combined system prompt for the single-call mode: both component prompts
/// plus the merged output contract.
pub fn build_combined_prompt(ctx: &TaskContext) -> String {
    format!(
        "{}\n---\n\n{}\nThis is a combined request: reply with one JSON object containing both \
         fields, for example {{\"keyword\": \"...\", \"keypoint_pairs\": [...]}}.\n",
        build_keyword_prompt(ctx),
        build_keypoint_prompt(ctx)
    )
}

/// One combined backend call: both prompt sections and the image in a
/// single request, reply parsed and validated for both fields.
pub fn query(
    backend: &mut dyn Backend,
    ctx: &TaskContext,
    options: &QueryOptions,
) -> Result<VlmResponse, VlmError> {
    ctx.validate()?;
    let system = build_combined_prompt(ctx);
    run_exchange(backend, ctx, options, system, ResponseContract::KeywordAndPairs)
}

/// Separate-call mode: one request per component (selection, then
/// keypoints), for ablation parity. The raw field carries both replies.
pub fn query_separate(
    backend: &mut dyn Backend,
    ctx: &TaskContext,
    options: &QueryOptions,
) -> Result<VlmResponse, VlmError> {
    ctx.validate()?;
    let kw = run_exchange(
        backend,
        ctx,
        options,
        build_keyword_prompt(ctx),
        ResponseContract::KeywordOnly,
    )?;
    let kp = run_exchange(
        backend,
        ctx,
        options,
        build_keypoint_prompt(ctx),
        ResponseContract::PairsOnly,
    )?;
    Ok(VlmResponse {
        keyword: kw.keyword,
        pairs: kp.pairs,
        raw: format!("{}\n---\n{}", kw.raw, kp.raw),
    })
}

fn run_exchange(
    backend: &mut dyn Backend,
    ctx: &TaskContext,
    options: &QueryOptions,
    system: String,
    contract: ResponseContract,
) -> Result<VlmResponse, VlmError> {
    let canvas = ctx.crop.as_ref().map(|c| (c.width() as u32, c.height() as u32));
    let image = match &ctx.crop {
        Some(crop) if ctx.attach_image => Some(ImageAttachment::from_gray(crop)?),
        _ => None,
    };
    let mut followups: Vec<Followup> = Vec::new();
    let mut attempt = 0;
    loop {
        let request = BackendRequest {
            system: system.clone(),
            user_text: ctx.instruction_text.clone(),
            image: image.clone(),
            canvas,
            contract,
            followups: followups.clone(),
        };
        let raw = backend.complete(&request)?;
        match parse_and_validate(&raw, ctx, options, contract) {
            Ok(response) => return Ok(response),
            Err(err @ VlmError::MalformedResponse { .. }) if attempt < options.max_retries => {
                followups.push(Followup {
                    assistant_reply: raw,
                    feedback: format!(
                        "Your previous reply could not be used: {err}. Reply with exactly one \
                         JSON object matching the requested format."
                    ),
                });
                attempt += 1;
            }
            Err(err) => return Err(err),
        }
    }
}

/// Exact-match dictionary lookup after keyword normalization.
pub fn resolve<'d>(
    dict: &'d PrimitiveDictionary,
    keyword: &str,
) -> Result<&'d crate::dmp::Primitive, VlmError> {
    dict.get(keyword)
        .ok_or_else(|| VlmError::UnknownPrimitive { keyword: normalize_keyword(keyword) })
}

/// First balanced JSON object embedded in the text, if any. Balancing is
/// string- and escape-aware so braces inside string literals do not count.
pub fn extract_first_json(text: &str) -> Option<&str> {
    let bytes = text.as_bytes();
    let start = bytes.iter().position(|&b| b == b'{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..=i]);
                }
            }
            _ => {}
        }
    }
    None
}

fn parse_and_validate(
    raw: &str,
    ctx: &TaskContext,
    options: &QueryOptions,
    contract: ResponseContract,
) -> Result<VlmResponse, VlmError> {
    let malformed = |reason: &str| VlmError::MalformedResponse {
        reason: reason.to_owned(),
        raw: raw.to_owned(),
    };
    let snippet = extract_first_json(raw).ok_or_else(|| malformed("no JSON object found"))?;
    let value: serde_json::Value =
        serde_json::from_str(snippet).map_err(|e| malformed(&format!("invalid JSON: {e}")))?;

    let keyword = match contract {
        ResponseContract::PairsOnly => String::new(),
        _ => {
            let kw = value
                .get("keyword")
                .and_then(|v| v.as_str())
                .ok_or_else(|| malformed("missing string field 'keyword'"))?;
            let kw = normalize_keyword(kw);
            if !ctx.keyword_allowed(&kw) {
                return Err(VlmError::UnknownKeyword { keyword: kw });
            }
            kw
        }
    };

    let pairs = match contract {
        ResponseContract::KeywordOnly => Vec::new(),
        _ => {
            let raw_pairs = value
                .get("keypoint_pairs")
                .and_then(|v| v.as_array())
                .ok_or_else(|| malformed("missing array field 'keypoint_pairs'"))?;
            if raw_pairs.is_empty() {
                return Err(malformed("keypoint_pairs is empty"));
            }
            let bounds = ctx.crop.as_ref().map(|c| (c.width() as f64, c.height() as f64));
            let mut pairs = Vec::with_capacity(raw_pairs.len());
            for (index, entry) in raw_pairs.iter().enumerate() {
                pairs.push(parse_pair(entry, index, bounds, options.oob, raw)?);
            }
            pairs
        }
    };

    Ok(VlmResponse { keyword, pairs, raw: raw.to_owned() })
}

fn parse_pair(
    entry: &serde_json::Value,
    index: usize,
    bounds: Option<(f64, f64)>,
    oob: OobPolicy,
    raw: &str,
) -> Result<KeypointPair, VlmError> {
    let malformed = |reason: String| VlmError::MalformedResponse { reason, raw: raw.to_owned() };
    let points = entry
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| malformed(format!("pair {index} is not a 2-element array")))?;
    let mut parsed = [Vec2::zeros(); 2];
    for (slot, point) in points.iter().enumerate() {
        let coords = point
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| malformed(format!("pair {index} point {slot} is not [x, y]")))?;
        let mut xy = [0.0; 2];
        for (axis, c) in coords.iter().enumerate() {
            let v = c
                .as_f64()
                .filter(|v| v.is_finite())
                .ok_or_else(|| malformed(format!("pair {index} has a non-numeric coordinate")))?;
            xy[axis] = v;
        }
        let mut p = Vec2::new(xy[0], xy[1]);
        if let Some((w, h)) = bounds {
            let inside = p.x >= 0.0 && p.x <= w && p.y >= 0.0 && p.y <= h;
            match (inside, oob) {
                (true, _) => {}
                (false, OobPolicy::Clamp) => {
                    p.x = p.x.clamp(0.0, w);
                    p.y = p.y.clamp(0.0, h);
                }
                (false, OobPolicy::Reject) => {
                    return Err(VlmError::InvalidKeypoint {
                        index,
                        reason: format!("({}, {}) outside crop {}x{}", p.x, p.y, w, h),
                    });
                }
            }
        } else if !(p.x >= 0.0 && p.y >= 0.0) {
            // Text-only mode has no crop to clamp against; still refuse
            // negative pixel coordinates.
            return Err(VlmError::InvalidKeypoint {
                index,
                reason: format!("negative coordinate ({}, {})", p.x, p.y),
            });
        }
        parsed[slot] = p;
    }
    Ok(KeypointPair::new(parsed[0], parsed[1]))
}
