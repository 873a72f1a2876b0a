//! Backend protocol: a chat-completions-style request with an optional PNG
//! attachment, answered with free text. The HTTP implementation talks to a
//! configurable endpoint; the deterministic mock lives in [`super::mock`].

use super::VlmError;
use crate::perception::GrayImage;
use base64::Engine;
use std::time::Duration;

/// Shape of the JSON object the backend is asked to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseContract {
    /// One object with both `keyword` and `keypoint_pairs` (combined call).
    KeywordAndPairs,
    KeywordOnly,
    PairsOnly,
}

/// PNG-encoded image attachment with its pixel dimensions.
#[derive(Debug, Clone)]
pub struct ImageAttachment {
    pub width: u32,
    pub height: u32,
    pub png: Vec<u8>,
}

impl ImageAttachment {
    pub fn from_gray(img: &GrayImage) -> Result<Self, VlmError> {
        let buf = image::GrayImage::from_raw(
            img.width() as u32,
            img.height() as u32,
            img.pixels().to_vec(),
        )
        .ok_or_else(|| VlmError::EncodeFailed("image buffer size mismatch".to_owned()))?;
        let mut png = Vec::new();
        buf.write_to(&mut std::io::Cursor::new(&mut png), image::ImageFormat::Png)
            .map_err(|e| VlmError::EncodeFailed(e.to_string()))?;
        Ok(Self { width: img.width() as u32, height: img.height() as u32, png })
    }

    pub fn data_uri(&self) -> String {
        format!(
            "data:image/png;base64,{}",
            base64::engine::general_purpose::STANDARD.encode(&self.png)
        )
    }
}

/// A rejected earlier exchange appended to the conversation on retry.
#[derive(Debug, Clone)]
pub struct Followup {
    pub assistant_reply: String,
    pub feedback: String,
}

/// One request to a backend: system prompt, the user instruction, an
/// optional image, the expected reply shape, and any retry feedback.
/// `canvas` is the pixel coordinate space the prompt declares; it stays
/// present in text-only mode where the attachment is dropped.
#[derive(Debug, Clone)]
pub struct BackendRequest {
    pub system: String,
    pub user_text: String,
    pub image: Option<ImageAttachment>,
    pub canvas: Option<(u32, u32)>,
    pub contract: ResponseContract,
    pub followups: Vec<Followup>,
}

/// A vision-language backend. Implementations must be deterministic given
/// the same request when they claim to be (the mock is; HTTP is not).
pub trait Backend {
    fn complete(&mut self, request: &BackendRequest) -> Result<String, VlmError>;
    fn name(&self) -> &'static str;
}

/// Configuration of the HTTP chat-completions backend. The API key is read
/// from the named environment variable at construction.
#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key_env: Option<String>,
    pub timeout: Duration,
    pub transport_retries: u32,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8080/v1/chat/completions".to_owned(),
            model: "default".to_owned(),
            api_key_env: None,
            timeout: Duration::from_secs(60),
            transport_retries: 2,
        }
    }
}

/// Blocking HTTP backend speaking the chat-completions protocol with
/// base-64 PNG image attachments.
pub struct HttpBackend {
    config: HttpConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, VlmError> {
        let api_key = match &config.api_key_env {
            Some(var) => std::env::var(var).ok(),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| VlmError::BackendUnavailable { attempts: 0, detail: e.to_string() })?;
        Ok(Self { config, api_key, client })
    }

    fn request_body(&self, request: &BackendRequest) -> serde_json::Value {
        let user_content = match &request.image {
            Some(att) => serde_json::json!([
                {"type": "text", "text": request.user_text},
                {"type": "image_url", "image_url": {"url": att.data_uri()}}
            ]),
            None => serde_json::json!(request.user_text),
        };
        let mut messages = vec![
            serde_json::json!({"role": "system", "content": request.system}),
            serde_json::json!({"role": "user", "content": user_content}),
        ];
        for f in &request.followups {
            messages.push(serde_json::json!({"role": "assistant", "content": f.assistant_reply}));
            messages.push(serde_json::json!({"role": "user", "content": f.feedback}));
        }
        serde_json::json!({"model": self.config.model, "messages": messages})
    }
}

impl Backend for HttpBackend {
    fn complete(&mut self, request: &BackendRequest) -> Result<String, VlmError> {
        let body = self.request_body(request);
        let attempts = 1 + self.config.transport_retries;
        let mut last_err = String::new();
        for attempt in 1..=attempts {
            let mut req = self.client.post(&self.config.endpoint).json(&body);
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            match req.send().and_then(|r| r.error_for_status()) {
                Ok(resp) => {
                    let value: serde_json::Value =
                        resp.json().map_err(|e| VlmError::MalformedResponse {
                            reason: format!("response body is not JSON: {e}"),
                            raw: String::new(),
                        })?;
                    let content = value
                        .pointer("/choices/0/message/content")
                        .and_then(|v| v.as_str())
                        .ok_or_else(|| VlmError::MalformedResponse {
                            reason: "missing choices[0].message.content".to_owned(),
                            raw: value.to_string(),
                        })?;
                    return Ok(content.to_owned());
                }
                Err(e) => last_err = format!("attempt {attempt}: {e}"),
            }
        }
        Err(VlmError::BackendUnavailable { attempts, detail: last_err })
    }

    fn name(&self) -> &'static str {
        "http"
    }
}
