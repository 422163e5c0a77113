use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ChatMessage, GatewayError, ProviderConfig};

/// JSON body posted to the chat-completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{message}")]
pub struct TransportError {
    pub message: String,
    /// Worth retrying: connection failures, 429 and 5xx.
    pub transient: bool,
}

impl TransportError {
    pub fn transient(message: impl Into<String>) -> Self {
        TransportError {
            message: message.into(),
            transient: true,
        }
    }

    pub fn fatal(message: impl Into<String>) -> Self {
        TransportError {
            message: message.into(),
            transient: false,
        }
    }
}

pub trait Transport: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, TransportError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy {
            max_retries: 0,
            base_delay: Duration::ZERO,
        }
    }

    pub fn delay_for(&self, retry: u32) -> Duration {
        self.base_delay.saturating_mul(1 << retry.min(16))
    }

    /// Runs `op`, retrying transient failures with exponential backoff.
    pub fn run<T>(
        &self,
        mut op: impl FnMut() -> Result<T, TransportError>,
    ) -> Result<T, TransportError> {
        let mut retry = 0;
        loop {
            match op() {
                Err(e) if e.transient && retry < self.max_retries => {
                    tracing::warn!(retry, error = %e, "transient transport failure, retrying");
                    std::thread::sleep(self.delay_for(retry));
                    retry += 1;
                }
                other => return other,
            }
        }
    }
}

/// Blocking HTTP client for OpenAI-style chat-completions endpoints.
pub struct HttpTransport {
    endpoint: String,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpTransport {
    /// Reads the API key from the environment variable the config names.
    pub fn from_config(config: &ProviderConfig) -> Result<Self, GatewayError> {
        let api_key = std::env::var(&config.api_key_env)
            .map_err(|_| GatewayError::MissingApiKey(config.api_key_env.clone()))?;
        Ok(Self::new(&config.endpoint, api_key))
    }

    pub fn new(endpoint: &str, api_key: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(600)))
            .build()
            .into();
        HttpTransport {
            endpoint: endpoint.to_string(),
            api_key: api_key.into(),
            agent,
        }
    }
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    content: Option<String>,
}

impl Transport for HttpTransport {
    fn complete(&self, request: &CompletionRequest) -> Result<String, TransportError> {
        let body =
            serde_json::to_string(request).map_err(|e| TransportError::fatal(e.to_string()))?;
        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .header("Content-Type", "application/json")
            .send(body)
            .map_err(|e| TransportError::transient(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError::transient(e.to_string()))?;
        if !(200..300).contains(&status) {
            let message = format!(
                "HTTP {status}: {}",
                text.chars().take(300).collect::<String>()
            );
            return Err(if status == 429 || status >= 500 {
                TransportError::transient(message)
            } else {
                TransportError::fatal(message)
            });
        }
        let parsed: CompletionResponse = serde_json::from_str(&text)
            .map_err(|e| TransportError::fatal(format!("malformed completion response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| TransportError::fatal("completion response has no message content"))
    }
}

type ReplyFn = dyn Fn(&CompletionRequest, usize) -> Result<String, TransportError> + Send + Sync;

/// In-process transport producing canned replies; used to build cassettes
/// and in tests.
pub struct ScriptedTransport {
    reply: Box<ReplyFn>,
    requests: Mutex<Vec<CompletionRequest>>,
}

impl ScriptedTransport {
    /// Returns `replies` in order; fails once they run out.
    pub fn replies<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let replies: Vec<String> = replies.into_iter().map(Into::into).collect();
        Self::from_fn(move |_, n| {
            replies
                .get(n)
                .cloned()
                .ok_or_else(|| TransportError::fatal(format!("script exhausted at call {n}")))
        })
    }

    pub fn from_fn(
        f: impl Fn(&CompletionRequest, usize) -> Result<String, TransportError> + Send + Sync + 'static,
    ) -> Self {
        ScriptedTransport {
            reply: Box::new(f),
            requests: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> usize {
        self.requests.lock().unwrap().len()
    }

    pub fn requests(&self) -> Vec<CompletionRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl Transport for ScriptedTransport {
    fn complete(&self, request: &CompletionRequest) -> Result<String, TransportError> {
        let n = {
            let mut seen = self.requests.lock().unwrap();
            seen.push(request.clone());
            seen.len() - 1
        };
        (self.reply)(request, n)
    }
}
