use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use super::cassette::{fingerprint, Cassette, CassetteEntry, CassetteMetadata};
use super::transport::{CompletionRequest, HttpTransport, RetryPolicy, Transport};
use super::{ChatMessage, GatewayError, Mode, ProviderConfig, Role};

struct ReplayCursor {
    cassette: Cassette,
    next: usize,
}

#[derive(Clone)]
enum Backend {
    Live(Arc<dyn Transport>),
    Record(Arc<dyn Transport>, Arc<Mutex<Cassette>>),
    Replay(Arc<Mutex<ReplayCursor>>),
}

impl Backend {
    fn mode(&self) -> Mode {
        match self {
            Backend::Live(_) => Mode::Live,
            Backend::Record(..) => Mode::Record,
            Backend::Replay(_) => Mode::Replay,
        }
    }
}

/// Opens chat sessions that share one transport and cassette.
///
/// Replay consumes cassette entries strictly in order across every session
/// opened from the same gateway, so a run of several sessions replays from
/// one cassette file.
pub struct Gateway {
    config: ProviderConfig,
    backend: Backend,
    retry: RetryPolicy,
    opened: AtomicUsize,
    sends: Arc<AtomicUsize>,
}

pub trait SessionFactory {
    fn open_session(&self, session_id: &str) -> ChatSession;
}

impl Gateway {
    fn with_backend(config: ProviderConfig, backend: Backend) -> Self {
        let retry = match backend {
            Backend::Replay(_) => RetryPolicy::none(),
            _ => RetryPolicy::default(),
        };
        Gateway {
            config,
            backend,
            retry,
            opened: AtomicUsize::new(0),
            sends: Arc::new(AtomicUsize::new(0)),
        }
    }

    fn metadata(config: &ProviderConfig) -> CassetteMetadata {
        CassetteMetadata {
            model: config.model.clone(),
            temperature: config.temperature,
        }
    }

    pub fn live(config: ProviderConfig, transport: Arc<dyn Transport>) -> Self {
        Self::with_backend(config, Backend::Live(transport))
    }

    pub fn record(config: ProviderConfig, transport: Arc<dyn Transport>) -> Self {
        let cassette = Cassette::new(Self::metadata(&config));
        Self::with_backend(
            config,
            Backend::Record(transport, Arc::new(Mutex::new(cassette))),
        )
    }

    pub fn replay(config: ProviderConfig, cassette: Cassette) -> Self {
        Self::with_backend(
            config,
            Backend::Replay(Arc::new(Mutex::new(ReplayCursor { cassette, next: 0 }))),
        )
    }

    /// Builds a gateway for `mode`. Live and record talk HTTP to the
    /// configured endpoint; replay requires an existing cassette file.
    pub fn open(
        config: ProviderConfig,
        mode: Mode,
        cassette: Option<&Path>,
    ) -> Result<Self, GatewayError> {
        match mode {
            Mode::Replay => {
                let path =
                    cassette.ok_or_else(|| GatewayError::CassetteMissing("<none given>".into()))?;
                Ok(Self::replay(config, Cassette::load(path)?))
            }
            Mode::Live => {
                let transport = Arc::new(HttpTransport::from_config(&config)?);
                Ok(Self::live(config, transport))
            }
            Mode::Record => {
                let transport = Arc::new(HttpTransport::from_config(&config)?);
                Ok(Self::record(config, transport))
            }
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        if !matches!(self.backend, Backend::Replay(_)) {
            self.retry = retry;
        }
        self
    }

    pub fn mode(&self) -> Mode {
        self.backend.mode()
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    pub fn session(&self) -> ChatSession {
        let n = self.opened.fetch_add(1, Ordering::SeqCst) + 1;
        self.open_session(&format!("session-{n}"))
    }

    /// Total sends across all sessions of this gateway.
    pub fn send_count(&self) -> usize {
        self.sends.load(Ordering::SeqCst)
    }

    /// Recorded entries so far (record mode) or the bound cassette (replay).
    pub fn cassette(&self) -> Option<Cassette> {
        match &self.backend {
            Backend::Live(_) => None,
            Backend::Record(_, c) => Some(c.lock().unwrap().clone()),
            Backend::Replay(cursor) => Some(cursor.lock().unwrap().cassette.clone()),
        }
    }

    /// Replay entries consumed so far.
    pub fn replay_position(&self) -> Option<usize> {
        match &self.backend {
            Backend::Replay(cursor) => Some(cursor.lock().unwrap().next),
            _ => None,
        }
    }
}

impl SessionFactory for Gateway {
    fn open_session(&self, session_id: &str) -> ChatSession {
        ChatSession {
            session_id: session_id.to_string(),
            model: self.config.model.clone(),
            temperature: self.config.temperature,
            transcript: Vec::new(),
            backend: self.backend.clone(),
            retry: self.retry,
            sends: Arc::clone(&self.sends),
        }
    }
}

/// Opens a single session; see [`Gateway::open`].
pub fn open_session(
    config: &ProviderConfig,
    mode: Mode,
    cassette: Option<&Path>,
) -> Result<ChatSession, GatewayError> {
    let gateway = Gateway::open(config.clone(), mode, cassette)?;
    Ok(gateway.session())
}

/// One chat window. Sends are strictly sequential.
pub struct ChatSession {
    session_id: String,
    model: String,
    temperature: Option<f64>,
    transcript: Vec<ChatMessage>,
    backend: Backend,
    retry: RetryPolicy,
    sends: Arc<AtomicUsize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranscriptRecord<'a> {
    pub session_id: &'a str,
    pub mode: Mode,
    pub model: &'a str,
    pub messages: &'a [ChatMessage],
}

impl ChatSession {
    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn mode(&self) -> Mode {
        self.backend.mode()
    }

    pub fn transcript(&self) -> &[ChatMessage] {
        &self.transcript
    }

    pub fn record(&self) -> TranscriptRecord<'_> {
        TranscriptRecord {
            session_id: &self.session_id,
            mode: self.mode(),
            model: &self.model,
            messages: &self.transcript,
        }
    }

    /// Shared cassette contents in record mode.
    pub fn recorded_cassette(&self) -> Option<Cassette> {
        match &self.backend {
            Backend::Record(_, c) => Some(c.lock().unwrap().clone()),
            _ => None,
        }
    }

    /// Adds a leading system message; only valid before the first send.
    pub fn set_system(&mut self, content: impl Into<String>) -> Result<(), GatewayError> {
        if !self.transcript.is_empty() {
            return Err(GatewayError::InvalidMessage(
                "system message must precede all other messages".into(),
            ));
        }
        let content = content.into();
        if content.trim().is_empty() {
            return Err(GatewayError::InvalidMessage("empty system message".into()));
        }
        self.transcript.push(ChatMessage::system(content));
        Ok(())
    }

    pub fn send(&mut self, message: ChatMessage) -> Result<ChatMessage, GatewayError> {
        if message.role != Role::User {
            return Err(GatewayError::InvalidMessage(format!(
                "expected a user message, got {}",
                message.role
            )));
        }
        if message.content.trim().is_empty() {
            return Err(GatewayError::InvalidMessage("empty message content".into()));
        }
        let mut messages = self.transcript.clone();
        messages.push(message);
        let fp = fingerprint(&messages);

        let reply = match &self.backend {
            Backend::Replay(cursor) => {
                let mut cursor = cursor.lock().unwrap();
                let index = cursor.next;
                let entry = cursor
                    .cassette
                    .entries
                    .get(index)
                    .ok_or(GatewayError::CassetteExhausted(index))?;
                if entry.fingerprint != fp {
                    return Err(GatewayError::ReplayDivergence {
                        index,
                        expected: entry.fingerprint.clone(),
                        actual: fp,
                    });
                }
                let text = entry.response.clone();
                cursor.next += 1;
                text
            }
            Backend::Live(transport) => self.request(transport.as_ref(), &messages)?,
            Backend::Record(transport, cassette) => {
                let text = self.request(transport.as_ref(), &messages)?;
                cassette.lock().unwrap().entries.push(CassetteEntry {
                    fingerprint: fp,
                    response: text.clone(),
                });
                text
            }
        };

        self.sends.fetch_add(1, Ordering::SeqCst);
        let reply = ChatMessage::assistant(reply);
        self.transcript = messages;
        self.transcript.push(reply.clone());
        Ok(reply)
    }

    fn request(
        &self,
        transport: &dyn Transport,
        messages: &[ChatMessage],
    ) -> Result<String, GatewayError> {
        let request = CompletionRequest {
            model: self.model.clone(),
            messages: messages.to_vec(),
            temperature: self.temperature,
        };
        Ok(self.retry.run(|| transport.complete(&request))?)
    }
}
