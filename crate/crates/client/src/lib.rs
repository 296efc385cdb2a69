//! Typed client for the session service.

use reqwest::multipart::{Form, Part};
use reqwest::{Response, StatusCode};
use serde::de::DeserializeOwned;
use sketchvis_core::api::{
    DatasetInfo, ErrorBody, ErrorDetail, FlowResponse, Health, IdeasResponse, SessionCreated, SpecResponse,
    TurnResponse,
};
use sketchvis_core::dataset::DataFormat;
use sketchvis_core::prompt::SelectionItem;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    /// The service answered with an error body.
    #[error("{status}: {} ({})", .detail.message, .detail.kind)]
    Api { status: StatusCode, detail: ErrorDetail },
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("unexpected response ({status}): {message}")]
    Decode { status: StatusCode, message: String },
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } | ClientError::Decode { status, .. } => Some(*status),
            ClientError::Transport(e) => e.status(),
        }
    }

    /// Machine-readable error kind reported by the service.
    pub fn kind(&self) -> Option<&str> {
        match self {
            ClientError::Api { detail, .. } => Some(&detail.kind),
            _ => None,
        }
    }
}

/// One turn's raw inputs. At least one part must be present.
#[derive(Debug, Clone, Default)]
pub struct TurnRequest {
    pub utterance: Option<String>,
    /// Encoded PNG or JPEG.
    pub sketch: Option<Vec<u8>>,
    pub selection: Option<Vec<SelectionItem>>,
}

impl TurnRequest {
    pub fn text(utterance: impl Into<String>) -> Self {
        TurnRequest { utterance: Some(utterance.into()), ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base_url: impl Into<String>) -> Self {
        Client { base: base_url.into().trim_end_matches('/').to_string(), http: reqwest::Client::new() }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn decode<T: DeserializeOwned>(response: Response) -> Result<T, ClientError> {
        let status = response.status();
        let bytes = response.bytes().await?;
        if status.is_success() {
            return serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode { status, message: e.to_string() });
        }
        match serde_json::from_slice::<ErrorBody>(&bytes) {
            Ok(body) => Err(ClientError::Api { status, detail: body.error }),
            Err(_) => Err(ClientError::Decode { status, message: String::from_utf8_lossy(&bytes).into_owned() }),
        }
    }

    pub async fn health(&self) -> Result<Health, ClientError> {
        Self::decode(self.http.get(self.url("/health")).send().await?).await
    }

    pub async fn create_session(&self) -> Result<String, ClientError> {
        let created: SessionCreated = Self::decode(self.http.post(self.url("/sessions")).send().await?).await?;
        Ok(created.id)
    }

    pub async fn upload_dataset(&self, session: &str, format: DataFormat, bytes: Vec<u8>) -> Result<DatasetInfo, ClientError> {
        let form = Form::new().text("format", format.to_string()).part("file", Part::bytes(bytes).file_name("data"));
        let url = self.url(&format!("/sessions/{session}/dataset"));
        Self::decode(self.http.post(url).multipart(form).send().await?).await
    }

    pub async fn turn(&self, session: &str, request: TurnRequest) -> Result<TurnResponse, ClientError> {
        let mut form = Form::new();
        if let Some(u) = request.utterance {
            form = form.text("utterance", u);
        }
        if let Some(bytes) = request.sketch {
            form = form.part("sketch", Part::bytes(bytes).file_name("sketch"));
        }
        if let Some(selection) = request.selection {
            form = form.text("selection", serde_json::to_string(&selection).expect("selection serializes"));
        }
        let url = self.url(&format!("/sessions/{session}/turn"));
        Self::decode(self.http.post(url).multipart(form).send().await?).await
    }

    pub async fn flow(&self, session: &str) -> Result<FlowResponse, ClientError> {
        Self::decode(self.http.get(self.url(&format!("/sessions/{session}/flow"))).send().await?).await
    }

    pub async fn spec(&self, session: &str) -> Result<SpecResponse, ClientError> {
        Self::decode(self.http.get(self.url(&format!("/sessions/{session}/spec"))).send().await?).await
    }

    pub async fn ideas(&self, session: &str, k: usize) -> Result<IdeasResponse, ClientError> {
        let url = self.url(&format!("/sessions/{session}/ideas"));
        Self::decode(self.http.post(url).query(&[("k", k)]).send().await?).await
    }

    pub async fn accept_idea(&self, session: &str, index: usize) -> Result<SpecResponse, ClientError> {
        let url = self.url(&format!("/sessions/{session}/ideas/{index}/accept"));
        Self::decode(self.http.post(url).send().await?).await
    }
}
