//! Chat-completion style HTTP client for the model under test.
//!
//! Request body:
//!
//! ```json
//! {"model": "...",
//!  "messages": [{"role": "user", "content": [{"type": "text", "text": "..."},
//!                                            {"type": "image", "data": "<base64 PNG>"}]}],
//!  "temperature": 0.0, "seed": 7}
//! ```
//!
//! Perturbable requests add `noise_level`, `dropout_rate` and `ensemble_seed`
//! and expect a `uir` object with `distribution` and `features` in the reply.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::imaging::io::encode_png8;
use crate::imaging::Image;
use crate::uir::{InferenceRun, PerturbableModel, Perturbation};

use super::model::{ContextTurn, FrameHints, ModelRequest, VisionModel};

static REQUESTS: AtomicUsize = AtomicUsize::new(0);

/// Number of HTTP requests this process has attempted.
pub fn http_request_count() -> usize {
    REQUESTS.load(Ordering::SeqCst)
}

fn default_timeout() -> f64 {
    30.0
}

fn default_retries() -> u32 {
    3
}

fn default_backoff() -> u64 {
    250
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEndpoint {
    /// Requests go to `<base_url>/chat/completions`.
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding a bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// First retry delay; doubled on every further attempt.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    #[serde(default)]
    pub temperature: f64,
}

impl ModelEndpoint {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        ModelEndpoint {
            base_url: base_url.into(),
            model: model.into(),
            auth_env: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            backoff_ms: default_backoff(),
            temperature: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(Error::Config("endpoint timeout must be positive".into()));
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(Error::Config(format!(
                "endpoint url `{}` must start with http:// or https://",
                self.base_url
            )));
        }
        Ok(())
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Content<'a> {
    Text { text: &'a str },
    Image { data: String },
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'static str,
    content: Vec<Content<'a>>,
}

#[derive(Serialize)]
struct PerturbationFields {
    noise_level: f64,
    dropout_rate: f64,
    ensemble_seed: u64,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<Message<'a>>,
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    perturbation: Option<PerturbationFields>,
}

/// Serialized request body. Earlier turns become alternating user/assistant
/// text messages; the current query carries the image.
pub fn request_body(
    endpoint: &ModelEndpoint,
    image: &Image,
    query: &str,
    context: &[ContextTurn],
    seed: Option<u64>,
    perturbation: Option<&Perturbation>,
) -> Result<Vec<u8>> {
    let mut messages = Vec::with_capacity(2 * context.len() + 1);
    for turn in context {
        messages.push(Message {
            role: "user",
            content: vec![Content::Text { text: &turn.query }],
        });
        messages.push(Message {
            role: "assistant",
            content: vec![Content::Text { text: &turn.answer }],
        });
    }
    let data = base64::engine::general_purpose::STANDARD.encode(encode_png8(image));
    messages.push(Message {
        role: "user",
        content: vec![Content::Text { text: query }, Content::Image { data }],
    });
    let body = ChatRequest {
        model: &endpoint.model,
        messages,
        temperature: endpoint.temperature,
        seed,
        perturbation: perturbation.map(|p| PerturbationFields {
            noise_level: p.noise_level,
            dropout_rate: p.dropout_rate,
            ensemble_seed: p.seed,
        }),
    };
    Ok(serde_json::to_vec(&body)?)
}

fn response_text(v: &Value) -> Result<String> {
    let content = v
        .pointer("/choices/0/message/content")
        .ok_or_else(|| Error::Endpoint("response has no choices[0].message.content".into()))?;
    match content {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => Ok(parts
            .iter()
            .filter(|p| p.get("type").and_then(Value::as_str) == Some("text"))
            .filter_map(|p| p.get("text").and_then(Value::as_str))
            .collect::<Vec<_>>()
            .join("")),
        _ => Err(Error::Endpoint(
            "message content is neither text nor parts".into(),
        )),
    }
}

fn number_array(v: &Value, name: &str) -> Result<Vec<f64>> {
    v.get(name)
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Endpoint(format!("uir.{name} missing")))?
        .iter()
        .map(|x| {
            x.as_f64()
                .ok_or_else(|| Error::Endpoint(format!("uir.{name} has a non-number")))
        })
        .collect()
}

pub struct HttpModel {
    endpoint: ModelEndpoint,
    agent: ureq::Agent,
    token: Option<String>,
}

impl HttpModel {
    pub fn new(endpoint: ModelEndpoint) -> Result<Self> {
        endpoint.validate()?;
        let token =
            match &endpoint.auth_env {
                Some(var) => Some(std::env::var(var).map_err(|_| {
                    Error::Endpoint(format!("auth token variable {var} is not set"))
                })?),
                None => None,
            };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(endpoint.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpModel {
            endpoint,
            agent,
            token,
        })
    }

    /// POSTs `body`, retrying transport errors, timeouts, 408, 429 and 5xx with
    /// exponential backoff. Other 4xx statuses fail immediately.
    pub fn post(&self, body: &[u8]) -> Result<Value> {
        let url = self.endpoint.url();
        let mut last = String::new();
        for attempt in 0..=self.endpoint.max_retries {
            if attempt > 0 {
                let delay = self
                    .endpoint
                    .backoff_ms
                    .saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(delay));
            }
            REQUESTS.fetch_add(1, Ordering::SeqCst);
            let mut req = self.agent.post(&url).content_type("application/json");
            if let Some(t) = &self.token {
                req = req.header("Authorization", format!("Bearer {t}"));
            }
            match req.send(body) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    let text = resp.body_mut().read_to_string().unwrap_or_default();
                    if (200..300).contains(&status) {
                        return serde_json::from_str(&text)
                            .map_err(|e| Error::Endpoint(format!("invalid JSON response: {e}")));
                    }
                    last = format!("HTTP {status}: {text}");
                    if (400..500).contains(&status) && status != 408 && status != 429 {
                        return Err(Error::Endpoint(last));
                    }
                }
                Err(e) => last = e.to_string(),
            }
            log::warn!("attempt {} to {url} failed: {last}", attempt + 1);
        }
        Err(Error::Endpoint(format!(
            "giving up after {} attempts: {last}",
            self.endpoint.max_retries + 1
        )))
    }
}

/// Sends one question with its image and returns the reply text.
pub fn query_model(
    endpoint: &ModelEndpoint,
    image: &Image,
    query: &str,
    context: &[ContextTurn],
    seed: Option<u64>,
) -> Result<String> {
    let model = HttpModel::new(endpoint.clone())?;
    let body = request_body(endpoint, image, query, context, seed, None)?;
    response_text(&model.post(&body)?)
}

impl VisionModel for HttpModel {
    fn answer(&mut self, request: &ModelRequest<'_>, _: &FrameHints<'_>) -> Result<String> {
        let body = request_body(
            &self.endpoint,
            request.image,
            request.query,
            request.context,
            Some(request.seed),
            None,
        )?;
        response_text(&self.post(&body)?)
    }
}

impl PerturbableModel for HttpModel {
    fn infer(
        &mut self,
        image: &Image,
        query: &str,
        perturbation: &Perturbation,
    ) -> Result<InferenceRun> {
        let body = request_body(&self.endpoint, image, query, &[], None, Some(perturbation))?;
        let reply = self.post(&body)?;
        let uir = reply
            .get("uir")
            .ok_or_else(|| Error::Endpoint("response lacks the uir object".into()))?;
        Ok(InferenceRun {
            answer: response_text(&reply)?,
            dist: number_array(uir, "distribution")?,
            features: number_array(uir, "features")?,
            perturbation: *perturbation,
        })
    }
}
