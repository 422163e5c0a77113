//! Chat sessions against a chat-completions endpoint, with record/replay.
//!
//! A [`Gateway`] owns the provider configuration, the transport and (in record
//! or replay mode) the cassette. Each [`ChatSession`] it opens models one
//! independent chat window. Replay never touches the network.

mod cassette;
mod session;
mod transport;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cassette::{fingerprint, Cassette, CassetteEntry, CassetteMetadata};
pub use session::{open_session, ChatSession, Gateway, SessionFactory};
pub use transport::{
    CompletionRequest, HttpTransport, RetryPolicy, ScriptedTransport, Transport, TransportError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    Record,
    Replay,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Live => "live",
            Mode::Record => "record",
            Mode::Replay => "replay",
        })
    }
}

/// Endpoint description loaded from the provider config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable that holds the API key.
    pub api_key_env: String,
    /// Omitted from requests when unset, leaving the provider default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".to_string(),
            model: "gpt-4-turbo".to_string(),
            api_key_env: "OPENAI_API_KEY".to_string(),
            temperature: None,
        }
    }
}

impl ProviderConfig {
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|ext| ext == "json") {
            serde_json::from_str(&text)
                .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text)
                .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("provider config serializes")
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("CassetteMissing: no cassette at {0}")]
    CassetteMissing(String),
    #[error("CassetteInvalid: {0}")]
    CassetteInvalid(String),
    #[error(
        "ReplayDivergence: request {index} fingerprint {actual} does not match recorded {expected}"
    )]
    ReplayDivergence {
        index: usize,
        expected: String,
        actual: String,
    },
    #[error("CassetteExhausted: replay requested entry {0} but the cassette has no more entries")]
    CassetteExhausted(usize),
    #[error("TransportError: {0}")]
    Transport(#[from] TransportError),
    #[error("MissingApiKey: environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("InvalidMessage: {0}")]
    InvalidMessage(String),
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
}

impl GatewayError {
    pub fn code(&self) -> &'static str {
        match self {
            GatewayError::CassetteMissing(_) => "CassetteMissing",
            GatewayError::CassetteInvalid(_) => "CassetteInvalid",
            GatewayError::ReplayDivergence { .. } => "ReplayDivergence",
            GatewayError::CassetteExhausted(_) => "CassetteExhausted",
            GatewayError::Transport(_) => "TransportError",
            GatewayError::MissingApiKey(_) => "MissingApiKey",
            GatewayError::InvalidMessage(_) => "InvalidMessage",
            GatewayError::Config(_) => "ConfigError",
            GatewayError::Io(_) => "IoError",
        }
    }
}
