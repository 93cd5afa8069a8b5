use std::time::Duration;

use serde_json::{json, Value};

use super::{AnnotationRequest, Backend, BackendKind, GatewayError};

pub const API_KEY_ENV: &str = "HOT_API_KEY";
/// Optional override of the endpoint base URL.
pub const API_BASE_ENV: &str = "HOT_API_BASE";

const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
const BODY_EXCERPT: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct LiveConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    /// Send the instruction and comment as one user message instead of a
    /// system/user pair.
    pub inline_comment: bool,
    pub timeout: Duration,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            base_url: DEFAULT_BASE_URL.to_string(),
            api_key: None,
            inline_comment: false,
            timeout: Duration::from_secs(60),
        }
    }
}

impl LiveConfig {
    /// Default config with the credential taken from `HOT_API_KEY` and the
    /// base URL from `HOT_API_BASE` when set.
    pub fn from_env() -> Self {
        let var = |name| std::env::var(name).ok().filter(|v: &String| !v.is_empty());
        let mut config = LiveConfig { api_key: var(API_KEY_ENV), ..Default::default() };
        if let Some(base) = var(API_BASE_ENV) {
            config.base_url = base;
        }
        config
    }
}

/// OpenAI-compatible `POST <base_url>/chat/completions` client.
pub struct LiveBackend {
    client: reqwest::blocking::Client,
    config: LiveConfig,
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        Ok(LiveBackend { client, config })
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }
}

/// JSON body for one chat-completion call.
pub fn chat_request_body(req: &AnnotationRequest, inline_comment: bool) -> Value {
    let messages = if inline_comment {
        json!([{ "role": "user", "content": req.rendered.inline_text() }])
    } else {
        json!([
            { "role": "system", "content": req.rendered.instruction_text },
            { "role": "user", "content": req.rendered.comment_text },
        ])
    };
    let p = &req.params;
    let mut body = json!({
        "model": p.model,
        "messages": messages,
        "temperature": p.temperature,
        "top_p": p.top_p,
        "presence_penalty": p.presence_penalty,
        "frequency_penalty": p.frequency_penalty,
    });
    if let Some(max) = p.max_tokens {
        body["max_tokens"] = json!(max);
    }
    body
}

/// Reads `choices[0].message.content`.
pub fn extract_content(body: &Value) -> Result<String, GatewayError> {
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| GatewayError::MalformedResponse("missing choices[0].message.content".into()))
}

fn excerpt(s: &str) -> String {
    s.chars().take(BODY_EXCERPT).collect()
}

impl Backend for LiveBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Live
    }

    fn complete(&self, req: &AnnotationRequest) -> Result<String, GatewayError> {
        let key = self.config.api_key.as_deref().ok_or(GatewayError::MissingCredential)?;
        let body = chat_request_body(req, self.config.inline_comment);
        let resp = self
            .client
            .post(self.endpoint())
            .bearer_auth(key)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_string())
            .send()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 {
            let retry_after = resp
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse().ok());
            return Err(GatewayError::RateLimited { retry_after });
        }
        let text = resp.text().map_err(|e| GatewayError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(GatewayError::HttpStatus { code: status.as_u16(), body: excerpt(&text) });
        }
        let parsed: Value =
            serde_json::from_str(&text).map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
        extract_content(&parsed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::tests::request;
    use crate::prompts::PromptId;

    #[test]
    fn body_uses_system_user_split() {
        let req = request("c1", PromptId::P2, 0);
        let body = chat_request_body(&req, false);
        assert_eq!(body["model"], "gpt-3.5-turbo");
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["top_p"], 1.0);
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][0]["content"], req.rendered.instruction_text.as_str());
        assert_eq!(body["messages"][1]["role"], "user");
        assert_eq!(body["messages"][1]["content"], "text c1");
        assert!(body.get("max_tokens").is_none());
    }

    #[test]
    fn body_inline_mode() {
        let mut req = request("c1", PromptId::P2, 0);
        req.params.max_tokens = Some(64);
        let body = chat_request_body(&req, true);
        let messages = body["messages"].as_array().unwrap();
        assert_eq!(messages.len(), 1);
        assert!(messages[0]["content"].as_str().unwrap().ends_with("\n\nComment: text c1"));
        assert_eq!(body["max_tokens"], 64);
    }

    #[test]
    fn content_extraction() {
        let ok = json!({"choices": [{"message": {"role": "assistant", "content": "Yes.\nIt is."}}]});
        assert_eq!(extract_content(&ok).unwrap(), "Yes.\nIt is.");
        assert!(extract_content(&json!({"choices": []})).is_err());
    }

    #[test]
    fn missing_credential() {
        let backend = LiveBackend::new(LiveConfig { api_key: None, ..Default::default() }).unwrap();
        let err = backend.complete(&request("c1", PromptId::P2, 0)).unwrap_err();
        assert_eq!(err, GatewayError::MissingCredential);
    }
}
