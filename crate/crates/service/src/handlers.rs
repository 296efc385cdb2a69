use std::sync::Arc;

use axum::extract::multipart::{Field, MultipartError};
use axum::extract::{Multipart, Path, Query, State};
use axum::http::StatusCode;
use axum::Json;
use chrono::Utc;
use serde::Deserialize;
use serde_json::json;
use sketchvis_core::api::{
    DatasetInfo, FlowResponse, Health, IdeasResponse, SessionCreated, SpecResponse, TurnResponse,
};
use sketchvis_core::dataset::{ingest_with, DataFormat, DatasetError};
use sketchvis_core::prompt::{SelectionItem, Sketch, TurnError};

use crate::error::ApiError;
use crate::session::{modality_of, Session};
use crate::store::{self, LogEntry, TurnInput, TurnOutcome};
use crate::{AppState, SessionHandle};

type Shared = State<Arc<AppState>>;

pub async fn health() -> Json<Health> {
    Json(Health { status: "ok".into() })
}

async fn persist(state: &AppState, handle: &SessionHandle, id: &str, entry: LogEntry) -> Result<(), ApiError> {
    store::append(&store::log_path(&state.config.data_dir, id), &entry)
        .await
        .map_err(|e| ApiError::Storage(e.to_string()))?;
    let mut session = handle.state.lock().expect("session lock");
    session.apply(&entry, &state.config.ingest).map_err(ApiError::Storage)
}

pub async fn create_session(State(state): Shared) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let id = uuid::Uuid::new_v4().simple().to_string();
    let entry = LogEntry::Created { id: id.clone(), at: Utc::now() };
    store::append(&store::log_path(&state.config.data_dir, &id), &entry)
        .await
        .map_err(|e| ApiError::Storage(e.to_string()))?;
    let LogEntry::Created { at, .. } = entry else { unreachable!() };
    state.insert(Session::new(id.clone(), at));
    tracing::info!(session = %id, "session created");
    Ok((StatusCode::CREATED, Json(SessionCreated { id })))
}

fn multipart_error(e: MultipartError) -> ApiError {
    if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
        ApiError::Unprocessable { kind: "too_large", message: e.body_text(), details: None }
    } else {
        ApiError::bad_request("bad_multipart", e.body_text())
    }
}

async fn field_text(field: Field<'_>) -> Result<String, ApiError> {
    field.text().await.map_err(multipart_error)
}

async fn field_bytes(field: Field<'_>) -> Result<Vec<u8>, ApiError> {
    Ok(field.bytes().await.map_err(multipart_error)?.to_vec())
}

pub async fn ingest_dataset(
    State(state): Shared,
    Path(id): Path<String>,
    mut multipart: Multipart,
) -> Result<Json<DatasetInfo>, ApiError> {
    let handle = state.session(&id)?;
    let _guard = handle.claim()?;
    let mut format = None;
    let mut file = None;
    while let Some(field) = multipart.next_field().await.map_err(multipart_error)? {
        match field.name() {
            Some("format") => format = Some(field_text(field).await?),
            Some("file") => file = Some(field_bytes(field).await?),
            _ => {}
        }
    }
    let file = file.ok_or_else(|| ApiError::bad_request("missing_field", "multipart field `file` is required"))?;
    let format: DataFormat = format
        .as_deref()
        .unwrap_or("csv")
        .parse()
        .map_err(|e: DatasetError| ApiError::bad_request("unknown_format", e.to_string()))?;
    let table = ingest_with(&file, format, &state.config.ingest).map_err(dataset_error)?;
    let info = DatasetInfo { columns: table.columns.clone(), row_count: table.rows.len(), digest: table.digest.clone() };
    let at = handle.snapshot().next_time();
    persist(&state, &handle, &id, LogEntry::Dataset { at, format, bytes: file, digest: table.digest.clone() }).await?;
    tracing::info!(session = %id, rows = info.row_count, columns = info.columns.len(), "dataset ingested");
    Ok(Json(info))
}

fn dataset_error(e: DatasetError) -> ApiError {
    match &e {
        DatasetError::Empty => ApiError::Unprocessable { kind: "empty_dataset", message: e.to_string(), details: None },
        DatasetError::TooLarge { .. } => ApiError::Unprocessable { kind: "too_large", message: e.to_string(), details: None },
        DatasetError::UnknownFormat(_) => ApiError::bad_request("unknown_format", e.to_string()),
        DatasetError::Malformed(rows) => ApiError::Unprocessable {
            kind: "malformed_dataset",
            message: e.to_string(),
            details: Some(json!({ "rows": rows })),
        },
    }
}

async fn read_turn_input(mut multipart: Multipart) -> Result<TurnInput, ApiError> {
    let mut input = TurnInput::default();
    while let Some(field) = multipart.next_field().await.map_err(multipart_error)? {
        match field.name() {
            Some("utterance") => {
                let text = field_text(field).await?;
                input.utterance = Some(text).filter(|t| !t.trim().is_empty());
            }
            Some("sketch") => {
                let bytes = field_bytes(field).await?;
                if !bytes.is_empty() {
                    let sketch = Sketch::from_bytes(bytes).map_err(|e| ApiError::bad_request("invalid_sketch", e.to_string()))?;
                    input.sketch = Some(sketch);
                }
            }
            Some("selection") => {
                let text = field_text(field).await?;
                let items: Vec<SelectionItem> = serde_json::from_str(&text)
                    .map_err(|e| ApiError::bad_request("invalid_selection", e.to_string()))?;
                input.selection = Some(items).filter(|s| !s.is_empty());
            }
            _ => {}
        }
    }
    Ok(input)
}

/// Errors that reach the model are part of the authoring flow; the rest are
/// rejected requests and leave no trace in the log.
fn logged(e: &TurnError) -> bool {
    matches!(e, TurnError::Provider(_) | TurnError::Trace(_))
}

pub async fn handle_turn(
    State(state): Shared,
    Path(id): Path<String>,
    multipart: Multipart,
) -> Result<Json<TurnResponse>, ApiError> {
    let handle = state.session(&id)?;
    let _guard = handle.claim()?;
    let input = read_turn_input(multipart).await?;
    let (prompt, turn, started_at) = {
        let session = handle.state.lock().expect("session lock");
        (session.prompt_input(&input), session.attempts + 1, session.next_time())
    };
    prompt.check().map_err(|e| ApiError::bad_request("invalid_input", e.to_string()))?;
    let modality = modality_of(&input);

    let result = state.orchestrator.run_turn(&prompt).await;
    let finished_at = Utc::now().max(started_at);
    match result {
        Ok(result) => {
            let spec = result.new_spec.dialect_tree().clone();
            let spec_digest = result.new_spec.digest();
            let response = TurnResponse {
                turn,
                display_text: result.display_text.clone(),
                spec: spec.clone(),
                spec_digest: spec_digest.clone(),
                plan: result.plan.clone(),
                modality,
                invocations: result.invocations,
            };
            let outcome = TurnOutcome::Ok {
                spec,
                spec_digest,
                display_text: result.display_text,
                plan: result.plan,
                invocations: result.invocations,
                trace: Box::new(result.trace),
            };
            persist(&state, &handle, &id, LogEntry::Turn { started_at, finished_at, turn, input, outcome }).await?;
            tracing::info!(session = %id, turn, digest = %response.spec_digest, "turn completed");
            Ok(Json(response))
        }
        Err(e) if logged(&e) => {
            tracing::warn!(session = %id, turn, error = %e, "turn failed");
            let outcome = TurnOutcome::Err { kind: e.kind().to_string(), message: e.to_string() };
            persist(&state, &handle, &id, LogEntry::Turn { started_at, finished_at, turn, input, outcome }).await?;
            Err(e.into())
        }
        Err(e) => Err(e.into()),
    }
}

pub async fn get_flow(State(state): Shared, Path(id): Path<String>) -> Result<Json<FlowResponse>, ApiError> {
    let handle = state.session(&id)?;
    let session = handle.state.lock().expect("session lock");
    Ok(Json(FlowResponse { events: session.flow.clone(), specs: session.specs.clone() }))
}

pub async fn get_spec(State(state): Shared, Path(id): Path<String>) -> Result<Json<SpecResponse>, ApiError> {
    let handle = state.session(&id)?;
    let session = handle.state.lock().expect("session lock");
    Ok(Json(match &session.current_spec {
        Some(spec) => SpecResponse { spec: Some(spec.dialect_tree().clone()), digest: Some(spec.digest()) },
        None => SpecResponse { spec: None, digest: None },
    }))
}

#[derive(Debug, Deserialize)]
pub struct IdeasQuery {
    k: Option<usize>,
}

pub const DEFAULT_IDEAS: usize = 3;

pub async fn request_ideas(
    State(state): Shared,
    Path(id): Path<String>,
    Query(query): Query<IdeasQuery>,
) -> Result<Json<IdeasResponse>, ApiError> {
    let handle = state.session(&id)?;
    let _guard = handle.claim()?;
    let k = query.k.unwrap_or(DEFAULT_IDEAS);
    let (prompt, origin_turn) = {
        let session = handle.state.lock().expect("session lock");
        (session.prompt_input(&TurnInput::default()), session.turns.last().map_or(0, |t| t.turn))
    };
    let alternatives = state.orchestrator.request_alternatives(&prompt, k).await?;
    let at = handle.snapshot().next_time();
    let specs = alternatives.specs.iter().map(|s| s.dialect_tree().clone()).collect();
    persist(&state, &handle, &id, LogEntry::Ideas { at, k, origin_turn, specs, partial: alternatives.partial }).await?;
    let session = handle.state.lock().expect("session lock");
    Ok(Json(IdeasResponse { ideas: session.ideas_info(), requested: k, partial: alternatives.partial }))
}

pub async fn accept_idea(
    State(state): Shared,
    Path((id, index)): Path<(String, usize)>,
) -> Result<Json<SpecResponse>, ApiError> {
    let handle = state.session(&id)?;
    let _guard = handle.claim()?;
    let (digest, at) = {
        let session = handle.state.lock().expect("session lock");
        let idea = session.ideas.get(index).ok_or(ApiError::UnknownIdea(index))?;
        if idea.accepted {
            return Err(ApiError::Conflict(format!("design idea {index} was already accepted")));
        }
        (idea.spec.digest(), session.next_time())
    };
    persist(&state, &handle, &id, LogEntry::Accept { at, index, spec_digest: digest.clone() }).await?;
    let session = handle.state.lock().expect("session lock");
    let spec = session.current_spec.as_ref().map(|s| s.dialect_tree().clone());
    tracing::info!(session = %id, index, %digest, "design idea accepted");
    Ok(Json(SpecResponse { spec, digest: Some(digest) }))
}
