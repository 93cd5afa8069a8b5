//! LLM backends: a live chat-completions client, a recorder that appends every
//! success to a cassette, and a deterministic replay backend.
//!
//! All backends implement [`Backend`]. [`run_batch`] fans requests out over a
//! bounded worker pool and returns results in input order.

mod batch;
mod cassette;
mod live;

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Concept;
use crate::prompts::{PromptId, RenderedPrompt};

pub use batch::{run_batch, BatchItem, RetryPolicy};
pub use cassette::{Cassette, CassetteEntry, CassetteWriter, RecordingBackend, ReplayBackend};
pub use live::{chat_request_body, extract_content, LiveBackend, LiveConfig, API_BASE_ENV, API_KEY_ENV};

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestParams {
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    pub presence_penalty: f64,
    pub frequency_penalty: f64,
}

impl Default for RequestParams {
    fn default() -> Self {
        RequestParams {
            model: DEFAULT_MODEL.to_string(),
            temperature: 0.0,
            top_p: 1.0,
            max_tokens: None,
            presence_penalty: 0.0,
            frequency_penalty: 0.0,
        }
    }
}

impl RequestParams {
    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |what: &str, v: f64| Err(GatewayError::InvalidParams(format!("{what} = {v}")));
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad("temperature", self.temperature);
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad("top_p", self.top_p);
        }
        if !(-2.0..=2.0).contains(&self.presence_penalty) {
            return bad("presence_penalty", self.presence_penalty);
        }
        if !(-2.0..=2.0).contains(&self.frequency_penalty) {
            return bad("frequency_penalty", self.frequency_penalty);
        }
        if self.max_tokens == Some(0) {
            return Err(GatewayError::InvalidParams("max_tokens = 0".into()));
        }
        if self.model.trim().is_empty() {
            return Err(GatewayError::InvalidParams("empty model name".into()));
        }
        Ok(())
    }

    /// Fixed-format rendering hashed into [`RequestParams::fingerprint`].
    pub fn canonical_string(&self) -> String {
        let max_tokens = self.max_tokens.map_or_else(|| "none".to_string(), |m| m.to_string());
        format!(
            "model={};temperature={:.4};top_p={:.4};max_tokens={};presence_penalty={:.4};frequency_penalty={:.4}",
            self.model, self.temperature, self.top_p, max_tokens, self.presence_penalty, self.frequency_penalty
        )
    }

    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.canonical_string().as_bytes());
        hex::encode(&digest[..8])
    }
}

/// Identity of one request within a batch and within a cassette.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RequestKey {
    pub prompt: PromptId,
    pub concept: Concept,
    pub comment_id: String,
    pub iteration: u32,
    pub params_fp: String,
}

impl fmt::Display for RequestKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}#{}@{}",
            self.prompt, self.concept, self.comment_id, self.iteration, self.params_fp
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRequest {
    pub rendered: RenderedPrompt,
    pub params: RequestParams,
    pub iteration: u32,
}

impl AnnotationRequest {
    pub fn new(rendered: RenderedPrompt, params: RequestParams, iteration: u32) -> Self {
        AnnotationRequest { rendered, params, iteration }
    }

    pub fn key(&self) -> RequestKey {
        RequestKey {
            prompt: self.rendered.prompt_id,
            concept: self.rendered.concept,
            comment_id: self.rendered.comment_id.clone(),
            iteration: self.iteration,
            params_fp: self.params.fingerprint(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendKind {
    Live,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawResponse {
    pub key: RequestKey,
    pub text: String,
    pub latency_ms: u64,
    pub backend: BackendKind,
}

pub trait Backend: Send + Sync {
    fn kind(&self) -> BackendKind;

    /// Returns the model's response text for one request.
    fn complete(&self, req: &AnnotationRequest) -> Result<String, GatewayError>;

    /// Called once after a batch; surfaces deferred batch-level failures such
    /// as an unwritable cassette.
    fn finish(&self) -> Result<(), GatewayError> {
        Ok(())
    }
}

impl<B: Backend + ?Sized> Backend for &B {
    fn kind(&self) -> BackendKind {
        (**self).kind()
    }
    fn complete(&self, req: &AnnotationRequest) -> Result<String, GatewayError> {
        (**self).complete(req)
    }
    fn finish(&self) -> Result<(), GatewayError> {
        (**self).finish()
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn kind(&self) -> BackendKind {
        (**self).kind()
    }
    fn complete(&self, req: &AnnotationRequest) -> Result<String, GatewayError> {
        (**self).complete(req)
    }
    fn finish(&self) -> Result<(), GatewayError> {
        (**self).finish()
    }
}

/// A backend answered by a closure. Stands in for a live service in demos
/// and tests, and is the usual inner backend when producing a cassette
/// offline.
pub struct ScriptedBackend<F> {
    respond: F,
}

impl<F> ScriptedBackend<F>
where
    F: Fn(&AnnotationRequest) -> Result<String, GatewayError> + Send + Sync,
{
    pub fn new(respond: F) -> Self {
        ScriptedBackend { respond }
    }
}

impl<F> Backend for ScriptedBackend<F>
where
    F: Fn(&AnnotationRequest) -> Result<String, GatewayError> + Send + Sync,
{
    fn kind(&self) -> BackendKind {
        BackendKind::Live
    }

    fn complete(&self, req: &AnnotationRequest) -> Result<String, GatewayError> {
        (self.respond)(req)
    }
}

/// Issues a single request against `backend`.
pub fn annotate(req: &AnnotationRequest, backend: &dyn Backend) -> Result<RawResponse, GatewayError> {
    req.params.validate()?;
    let started = Instant::now();
    let text = backend.complete(req)?;
    Ok(RawResponse {
        key: req.key(),
        text,
        latency_ms: started.elapsed().as_millis() as u64,
        backend: backend.kind(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum GatewayError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {code}: {body}")]
    HttpStatus { code: u16, body: String },
    #[error("rate limited (retry after {retry_after:?}s)")]
    RateLimited { retry_after: Option<u64> },
    #[error("no recorded response for {0}")]
    CacheMiss(RequestKey),
    #[error("missing API credential (set {API_KEY_ENV})")]
    MissingCredential,
    #[error("invalid request parameters: {0}")]
    InvalidParams(String),
    #[error("cassette: {0}")]
    Cassette(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
}

impl GatewayError {
    /// Transient errors worth another attempt. Client errors other than 429
    /// are final.
    pub fn is_retryable(&self) -> bool {
        match self {
            GatewayError::Transport(_) | GatewayError::RateLimited { .. } => true,
            GatewayError::HttpStatus { code, .. } => *code >= 500,
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Comment, Definitions, Platform};
    use crate::prompts::render_prompt;

    pub(crate) fn request(id: &str, prompt: PromptId, iteration: u32) -> AnnotationRequest {
        let comment = Comment { id: id.into(), platform: Platform::Reddit, text: format!("text {id}") };
        let rendered = render_prompt(prompt, Concept::Toxic, &comment, &Definitions::bundled()).unwrap();
        AnnotationRequest::new(rendered, RequestParams::default(), iteration)
    }

    #[test]
    fn default_params_follow_zero_temperature_policy() {
        let p = RequestParams::default();
        assert_eq!(p.temperature, 0.0);
        assert_eq!(p.top_p, 1.0);
        assert_eq!(p.presence_penalty, 0.0);
        assert_eq!(p.frequency_penalty, 0.0);
        assert_eq!(p.max_tokens, None);
        p.validate().unwrap();
    }

    #[test]
    fn params_validation() {
        assert!(RequestParams::default().with_temperature(2.5).validate().is_err());
        let p = RequestParams { top_p: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = RequestParams { presence_penalty: -2.1, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn fingerprint_is_stable_and_sensitive() {
        let a = RequestParams::default();
        assert_eq!(a.fingerprint(), RequestParams::default().fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
        assert_ne!(a.fingerprint(), a.clone().with_temperature(1.0).fingerprint());
        assert_eq!(
            a.canonical_string(),
            "model=gpt-3.5-turbo;temperature=0.0000;top_p=1.0000;max_tokens=none;presence_penalty=0.0000;frequency_penalty=0.0000"
        );
    }

    #[test]
    fn retry_classification() {
        assert!(GatewayError::RateLimited { retry_after: None }.is_retryable());
        assert!(GatewayError::Transport("reset".into()).is_retryable());
        assert!(GatewayError::HttpStatus { code: 503, body: String::new() }.is_retryable());
        assert!(!GatewayError::HttpStatus { code: 400, body: String::new() }.is_retryable());
        assert!(!GatewayError::HttpStatus { code: 401, body: String::new() }.is_retryable());
        assert!(!GatewayError::MissingCredential.is_retryable());
    }

    #[test]
    fn annotate_with_scripted_backend() {
        let backend = ScriptedBackend::new(|r: &AnnotationRequest| Ok(format!("echo {}", r.rendered.comment_id)));
        let req = request("c9", PromptId::P2, 0);
        let resp = annotate(&req, &backend).unwrap();
        assert_eq!(resp.text, "echo c9");
        assert_eq!(resp.key, req.key());
        assert_eq!(resp.backend, BackendKind::Live);
    }
}
