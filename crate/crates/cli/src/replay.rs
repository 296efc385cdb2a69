use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;
use sketchvis_client::{Client, ClientError, TurnRequest};
use sketchvis_core::prompt::{MockProvider, ProviderConfig};
use sketchvis_service::store::{read_log, LogEntry, TurnOutcome};
use sketchvis_service::{spawn, AppState, RunningService, ServiceConfig, StartError};

use crate::{emit, emit_error, exit, ReplayArgs};

/// First point where the replay disagrees with the log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    /// Turn number of the divergent entry; 0 before the first turn.
    pub turn: usize,
    /// Zero-based index of the entry in the log.
    pub entry: usize,
    pub reason: String,
    pub expected: Option<String>,
    pub actual: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ReplayReport {
    Match { turns: usize, final_digest: Option<String> },
    Diverged(Divergence),
}

fn turn_request(input: sketchvis_service::store::TurnInput) -> TurnRequest {
    TurnRequest { utterance: input.utterance, sketch: input.sketch.map(|s| s.bytes), selection: input.selection }
}

fn outcome_of(result: &Result<String, ClientError>) -> String {
    match result {
        Ok(digest) => digest.clone(),
        Err(e) => format!("error:{}", e.kind().map_or_else(|| e.to_string(), str::to_string)),
    }
}

/// Re-issues every logged request, in order, on a fresh session.
pub async fn replay_entries(client: &Client, entries: Vec<LogEntry>) -> Result<ReplayReport, ClientError> {
    let session = client.create_session().await?;
    let mut turns = 0;
    let mut current_turn = 0;
    let mut final_digest = None;
    for (entry_index, entry) in entries.into_iter().enumerate() {
        let diverged = |turn: usize, reason: &str, expected: Option<String>, actual: Option<String>| {
            ReplayReport::Diverged(Divergence { turn, entry: entry_index, reason: reason.into(), expected, actual })
        };
        match entry {
            LogEntry::Created { .. } => {}
            LogEntry::Dataset { format, bytes, digest, .. } => match client.upload_dataset(&session, format, bytes).await {
                Ok(info) if info.digest == digest => {}
                other => {
                    let actual = other.map(|i| i.digest);
                    return Ok(diverged(current_turn, "dataset", Some(digest), Some(outcome_of(&actual))));
                }
            },
            LogEntry::Turn { turn, input, outcome, .. } => {
                current_turn = turn;
                turns += 1;
                let actual = client.turn(&session, turn_request(input)).await.map(|r| r.spec_digest);
                let expected = match &outcome {
                    TurnOutcome::Ok { spec_digest, .. } => spec_digest.clone(),
                    TurnOutcome::Err { kind, .. } => format!("error:{kind}"),
                };
                let actual = outcome_of(&actual);
                if actual != expected {
                    return Ok(diverged(turn, "turn", Some(expected), Some(actual)));
                }
                if let TurnOutcome::Ok { spec_digest, .. } = outcome {
                    final_digest = Some(spec_digest);
                }
            }
            LogEntry::Ideas { k, specs, origin_turn, .. } => match client.ideas(&session, k).await {
                Ok(ideas) if ideas.ideas.iter().map(|i| &i.spec).eq(specs.iter()) => {}
                other => {
                    let actual = other.map(|r| r.ideas.iter().map(|i| i.digest.clone()).collect::<Vec<_>>().join(","));
                    return Ok(diverged(origin_turn, "ideas", Some(format!("{} idea(s)", specs.len())), Some(outcome_of(&actual))));
                }
            },
            LogEntry::Accept { index, spec_digest, .. } => {
                let actual = client.accept_idea(&session, index).await.map(|r| r.digest.unwrap_or_default());
                let actual = outcome_of(&actual);
                if actual != spec_digest {
                    return Ok(diverged(current_turn, "accept", Some(spec_digest), Some(actual)));
                }
                final_digest = Some(spec_digest);
            }
        }
    }
    Ok(ReplayReport::Match { turns, final_digest })
}

/// Starts a throwaway in-process service answering from `fixtures`.
pub async fn spawn_mock_service(data_dir: &Path, fixtures: &Path) -> Result<RunningService, StartError> {
    let cfg = ServiceConfig::new(data_dir, ProviderConfig::mock(fixtures));
    let state = AppState::load(cfg, Arc::new(MockProvider::new(fixtures)))?;
    spawn(state, SocketAddr::from(([127, 0, 0, 1], 0))).await
}

pub async fn run(args: ReplayArgs) -> u8 {
    let entries = match read_log(&args.flow) {
        Ok(e) if !e.is_empty() => e,
        Ok(_) => {
            emit_error("flow", format!("{} is empty", args.flow.display()));
            return exit::INPUT;
        }
        Err(e) => {
            emit_error("flow", e);
            return exit::INPUT;
        }
    };
    if !args.fixtures.is_dir() {
        emit_error("fixtures", format!("{} is not a directory", args.fixtures.display()));
        return exit::INPUT;
    }

    let scratch = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => {
            emit_error("startup", e);
            return exit::STARTUP;
        }
    };
    let (client, service) = match &args.server {
        Some(url) => (Client::new(url.clone()), None),
        None => match spawn_mock_service(scratch.path(), &args.fixtures).await {
            Ok(svc) => (Client::new(svc.base_url()), Some(svc)),
            Err(e) => {
                emit_error("startup", e);
                return exit::STARTUP;
            }
        },
    };
    let result = replay_entries(&client, entries).await;
    if let Some(svc) = service {
        let _ = svc.stop().await;
    }
    match result {
        Ok(report) => {
            let mut line = serde_json::to_value(&report).expect("report serializes");
            line["command"] = json!("replay");
            emit(&line);
            match report {
                ReplayReport::Match { .. } => exit::OK,
                ReplayReport::Diverged(_) => exit::FAILED,
            }
        }
        Err(e) => {
            emit_error("service", e);
            exit::STARTUP
        }
    }
}
