use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::Value;
use sketchvis_core::api::{ErrorBody, ErrorDetail};
use sketchvis_core::prompt::{PromptError, ProviderError, TurnError};

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("no design idea at index {0}")]
    UnknownIdea(usize),
    #[error("another operation is in flight for this session")]
    InFlight,
    #[error("{message}")]
    BadRequest { kind: &'static str, message: String },
    #[error("{message}")]
    Unprocessable { kind: &'static str, message: String, details: Option<Value> },
    #[error("{0}")]
    Conflict(String),
    #[error(transparent)]
    Turn(#[from] TurnError),
    #[error("storage: {0}")]
    Storage(String),
}

impl ApiError {
    pub fn bad_request(kind: &'static str, message: impl Into<String>) -> Self {
        ApiError::BadRequest { kind, message: message.into() }
    }

    fn status(&self) -> StatusCode {
        match self {
            ApiError::UnknownSession(_) | ApiError::UnknownIdea(_) => StatusCode::NOT_FOUND,
            ApiError::InFlight | ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::BadRequest { .. } => StatusCode::BAD_REQUEST,
            ApiError::Unprocessable { kind: "too_large", .. } => StatusCode::PAYLOAD_TOO_LARGE,
            ApiError::Unprocessable { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Turn(e) => match e {
                TurnError::NoDataset | TurnError::NoCurrentSpec | TurnError::AlternativeCount(_) => {
                    StatusCode::UNPROCESSABLE_ENTITY
                }
                TurnError::Prompt(PromptError::SketchTooLarge { .. }) => StatusCode::PAYLOAD_TOO_LARGE,
                TurnError::Prompt(PromptError::Input(_)) => StatusCode::BAD_REQUEST,
                TurnError::Provider(ProviderError::Timeout { .. }) => StatusCode::GATEWAY_TIMEOUT,
                TurnError::Provider(_) | TurnError::Trace(_) => StatusCode::BAD_GATEWAY,
            },
            ApiError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn kind(&self) -> String {
        match self {
            ApiError::UnknownSession(_) => "unknown_session".into(),
            ApiError::UnknownIdea(_) => "unknown_idea".into(),
            ApiError::InFlight => "turn_in_flight".into(),
            ApiError::BadRequest { kind, .. } | ApiError::Unprocessable { kind, .. } => (*kind).into(),
            ApiError::Conflict(_) => "conflict".into(),
            ApiError::Turn(e) => e.kind().into(),
            ApiError::Storage(_) => "storage".into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let details = match &self {
            ApiError::Unprocessable { details, .. } => details.clone(),
            _ => None,
        };
        let body = ErrorBody { error: ErrorDetail { kind: self.kind(), message: self.to_string(), details } };
        (self.status(), Json(body)).into_response()
    }
}
