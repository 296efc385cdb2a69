use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::envelope::{Part, PromptEnvelope};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderMode {
    Live,
    Mock,
}

pub const DEFAULT_CREDENTIAL_VAR: &str = "SKETCHVIS_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API credential.
    pub credential_var: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    /// First retry delay; doubles on each further attempt.
    pub backoff_base_ms: u64,
    pub mode: ProviderMode,
    pub fixture_dir: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            credential_var: DEFAULT_CREDENTIAL_VAR.into(),
            timeout_secs: 120,
            max_retries: 3,
            backoff_base_ms: 500,
            mode: ProviderMode::Live,
            fixture_dir: None,
        }
    }
}

impl ProviderConfig {
    pub fn mock(fixture_dir: impl Into<PathBuf>) -> Self {
        ProviderConfig { mode: ProviderMode::Mock, fixture_dir: Some(fixture_dir.into()), ..Default::default() }
    }

    /// Reads `SKETCHVIS_PROVIDER_ENDPOINT`, `SKETCHVIS_MODEL`,
    /// `SKETCHVIS_CREDENTIAL_VAR`, `SKETCHVIS_TIMEOUT_SECS`,
    /// `SKETCHVIS_MAX_RETRIES` and `SKETCHVIS_MOCK_FIXTURES` through
    /// `lookup`. A fixture path switches to mock mode.
    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ProviderError> {
        let mut cfg = ProviderConfig::default();
        if let Some(v) = lookup("SKETCHVIS_PROVIDER_ENDPOINT") {
            cfg.endpoint = v;
        }
        if let Some(v) = lookup("SKETCHVIS_MODEL") {
            cfg.model = v;
        }
        if let Some(v) = lookup("SKETCHVIS_CREDENTIAL_VAR") {
            cfg.credential_var = v;
        }
        if let Some(v) = lookup("SKETCHVIS_TIMEOUT_SECS") {
            cfg.timeout_secs = v.parse().map_err(|_| ProviderError::Config(format!("bad SKETCHVIS_TIMEOUT_SECS `{v}`")))?;
        }
        if let Some(v) = lookup("SKETCHVIS_MAX_RETRIES") {
            cfg.max_retries = v.parse().map_err(|_| ProviderError::Config(format!("bad SKETCHVIS_MAX_RETRIES `{v}`")))?;
        }
        if let Some(v) = lookup("SKETCHVIS_MOCK_FIXTURES") {
            cfg.mode = ProviderMode::Mock;
            cfg.fixture_dir = Some(v.into());
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_env() -> Result<Self, ProviderError> {
        ProviderConfig::from_lookup(|k| std::env::var(k).ok().filter(|v| !v.is_empty()))
    }

    pub fn check(&self) -> Result<(), ProviderError> {
        if self.timeout_secs == 0 {
            return Err(ProviderError::Config("timeout must be positive".into()));
        }
        if self.mode == ProviderMode::Mock && self.fixture_dir.is_none() {
            return Err(ProviderError::Config("mock mode needs a fixture directory".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    #[error("provider timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("provider rejected the credential: {0}")]
    Auth(String),
    #[error("provider quota exhausted: {0}")]
    Quota(String),
    #[error("no mock fixture for envelope digest {digest} in {dir}")]
    MissingFixture { digest: String, dir: String },
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("provider returned an unusable response: {0}")]
    BadResponse(String),
    #[error("provider configuration: {0}")]
    Config(String),
    #[error("scripted provider has no response left")]
    ScriptExhausted,
    #[error("fixture i/o: {0}")]
    Io(String),
}

impl ProviderError {
    pub fn kind(&self) -> &'static str {
        match self {
            ProviderError::Timeout { .. } => "timeout",
            ProviderError::Auth(_) => "auth",
            ProviderError::Quota(_) => "quota",
            ProviderError::MissingFixture { .. } => "missing_fixture",
            ProviderError::Transport { .. } => "transport",
            ProviderError::BadResponse(_) => "bad_response",
            ProviderError::Config(_) => "config",
            ProviderError::ScriptExhausted => "script_exhausted",
            ProviderError::Io(_) => "io",
        }
    }
}

#[async_trait]
pub trait ModelProvider: Send + Sync {
    async fn complete(&self, envelope: &PromptEnvelope) -> Result<String, ProviderError>;
}

pub fn fixture_path(dir: &Path, digest: &str) -> PathBuf {
    dir.join(format!("{digest}.txt"))
}

/// Serves `<dir>/<envelope digest>.txt` verbatim.
#[derive(Debug, Clone)]
pub struct MockProvider {
    dir: PathBuf,
}

impl MockProvider {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        MockProvider { dir: dir.into() }
    }
}

#[async_trait]
impl ModelProvider for MockProvider {
    async fn complete(&self, envelope: &PromptEnvelope) -> Result<String, ProviderError> {
        let digest = envelope.digest();
        let path = fixture_path(&self.dir, &digest);
        match tokio::fs::read_to_string(&path).await {
            Ok(text) => Ok(text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                Err(ProviderError::MissingFixture { digest, dir: self.dir.display().to_string() })
            }
            Err(e) => Err(ProviderError::Io(format!("{}: {e}", path.display()))),
        }
    }
}

/// Passes calls through and stores each response as a mock fixture.
pub struct RecordingProvider {
    inner: Arc<dyn ModelProvider>,
    dir: PathBuf,
}

impl RecordingProvider {
    pub fn new(inner: Arc<dyn ModelProvider>, dir: impl Into<PathBuf>) -> Self {
        RecordingProvider { inner, dir: dir.into() }
    }
}

#[async_trait]
impl ModelProvider for RecordingProvider {
    async fn complete(&self, envelope: &PromptEnvelope) -> Result<String, ProviderError> {
        let text = self.inner.complete(envelope).await?;
        tokio::fs::create_dir_all(&self.dir).await.map_err(|e| ProviderError::Io(e.to_string()))?;
        tokio::fs::write(fixture_path(&self.dir, &envelope.digest()), &text)
            .await
            .map_err(|e| ProviderError::Io(e.to_string()))?;
        Ok(text)
    }
}

/// Returns queued responses in order, whatever the envelope.
#[derive(Default)]
pub struct ScriptedProvider {
    responses: Mutex<VecDeque<String>>,
}

impl ScriptedProvider {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedProvider { responses: Mutex::new(responses.into_iter().map(Into::into).collect()) }
    }

    pub fn push(&self, response: impl Into<String>) {
        self.responses.lock().expect("script lock").push_back(response.into());
    }
}

#[async_trait]
impl ModelProvider for ScriptedProvider {
    async fn complete(&self, _envelope: &PromptEnvelope) -> Result<String, ProviderError> {
        self.responses.lock().expect("script lock").pop_front().ok_or(ProviderError::ScriptExhausted)
    }
}

/// Counts invocations of the wrapped provider.
pub struct CountingProvider {
    inner: Arc<dyn ModelProvider>,
    calls: AtomicUsize,
}

impl CountingProvider {
    pub fn new(inner: Arc<dyn ModelProvider>) -> Self {
        CountingProvider { inner, calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl ModelProvider for CountingProvider {
    async fn complete(&self, envelope: &PromptEnvelope) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(envelope).await
    }
}

/// Chat-completion style HTTP endpoint with text and image parts.
pub struct HttpProvider {
    cfg: ProviderConfig,
    client: reqwest::Client,
}

enum Attempt {
    Retry(ProviderError),
    Fatal(ProviderError),
}

impl HttpProvider {
    pub fn new(cfg: ProviderConfig) -> Result<Self, ProviderError> {
        cfg.check()?;
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        Ok(HttpProvider { cfg, client })
    }

    fn credential(&self) -> Result<String, ProviderError> {
        std::env::var(&self.cfg.credential_var)
            .ok()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| ProviderError::Auth(format!("environment variable {} is not set", self.cfg.credential_var)))
    }

    pub fn request_body(&self, envelope: &PromptEnvelope) -> Value {
        let mut system = Vec::new();
        let mut content = Vec::new();
        for part in &envelope.parts {
            match part {
                Part::SystemInstruction { text } => system.push(text.clone()),
                Part::Image { media_type, data_base64, .. } => content.push(json!({
                    "type": "image_url",
                    "image_url": {"url": format!("data:{media_type};base64,{data_base64}")}
                })),
                other => content.push(json!({"type": "text", "text": other.text().unwrap_or_default()})),
            }
        }
        json!({
            "model": self.cfg.model,
            "temperature": envelope.hints.temperature,
            "max_tokens": envelope.hints.max_output_tokens,
            "messages": [
                {"role": "system", "content": system.join("\n")},
                {"role": "user", "content": content}
            ]
        })
    }

    async fn attempt(&self, body: &Value, key: &str, attempts: u32) -> Result<String, Attempt> {
        let response = self.client.post(&self.cfg.endpoint).bearer_auth(key).json(body).send().await;
        let response = match response {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Err(Attempt::Retry(ProviderError::Timeout { attempts })),
            Err(e) => {
                return Err(Attempt::Retry(ProviderError::Transport { attempts, message: e.to_string() }));
            }
        };
        let status = response.status();
        let text = match response.text().await {
            Ok(t) => t,
            Err(e) if e.is_timeout() => return Err(Attempt::Retry(ProviderError::Timeout { attempts })),
            Err(e) => return Err(Attempt::Retry(ProviderError::Transport { attempts, message: e.to_string() })),
        };
        match status.as_u16() {
            200..=299 => {
                let value: Value = serde_json::from_str(&text).map_err(|e| Attempt::Fatal(ProviderError::BadResponse(e.to_string())))?;
                value
                    .pointer("/choices/0/message/content")
                    .and_then(Value::as_str)
                    .map(str::to_string)
                    .ok_or_else(|| Attempt::Fatal(ProviderError::BadResponse("missing choices[0].message.content".into())))
            }
            401 | 403 => Err(Attempt::Fatal(ProviderError::Auth(format!("status {status}")))),
            429 if text.contains("insufficient_quota") => Err(Attempt::Fatal(ProviderError::Quota(text))),
            429 => Err(Attempt::Retry(ProviderError::Quota(format!("rate limited (status {status})")))),
            408 | 500..=599 => Err(Attempt::Retry(ProviderError::Transport {
                attempts,
                message: format!("status {status}"),
            })),
            _ => Err(Attempt::Fatal(ProviderError::BadResponse(format!("status {status}: {text}")))),
        }
    }
}

#[async_trait]
impl ModelProvider for HttpProvider {
    async fn complete(&self, envelope: &PromptEnvelope) -> Result<String, ProviderError> {
        let key = self.credential()?;
        let body = self.request_body(envelope);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body, &key, attempts).await {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(e)) if attempts > self.cfg.max_retries => return Err(e),
                Err(Attempt::Retry(e)) => {
                    let delay = self.cfg.backoff_base_ms.saturating_mul(1 << (attempts - 1).min(16));
                    tracing::warn!(attempt = attempts, error = %e, delay_ms = delay, "retrying provider call");
                    tokio::time::sleep(Duration::from_millis(delay)).await;
                }
            }
        }
    }
}

pub fn provider_from_config(cfg: &ProviderConfig) -> Result<Arc<dyn ModelProvider>, ProviderError> {
    cfg.check()?;
    match cfg.mode {
        ProviderMode::Mock => Ok(Arc::new(MockProvider::new(cfg.fixture_dir.clone().expect("checked")))),
        ProviderMode::Live => Ok(Arc::new(HttpProvider::new(cfg.clone())?)),
    }
}

/// One provider call under `cfg`.
pub async fn invoke(cfg: &ProviderConfig, envelope: &PromptEnvelope) -> Result<String, ProviderError> {
    provider_from_config(cfg)?.complete(envelope).await
}
