//! Append-only per-session event log, one JSON entry per line.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sketchvis_core::dataset::DataFormat;
use sketchvis_core::prompt::{PlanOutcome, ReasoningTrace, SelectionItem, Sketch};
use tokio::io::AsyncWriteExt;

/// The inputs of one turn as the user sent them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TurnInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sketch: Option<Sketch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<Vec<SelectionItem>>,
}

impl TurnInput {
    pub fn digest(&self) -> String {
        sketchvis_core::digest::sha256_hex(&serde_json::to_vec(self).expect("input serializes"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TurnOutcome {
    Ok {
        spec: Value,
        spec_digest: String,
        display_text: String,
        plan: PlanOutcome,
        invocations: usize,
        trace: Box<ReasoningTrace>,
    },
    Err {
        kind: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "entry", rename_all = "snake_case")]
pub enum LogEntry {
    Created {
        id: String,
        at: DateTime<Utc>,
    },
    Dataset {
        at: DateTime<Utc>,
        format: DataFormat,
        #[serde(with = "sketchvis_core::api::base64_bytes")]
        bytes: Vec<u8>,
        digest: String,
    },
    Turn {
        started_at: DateTime<Utc>,
        finished_at: DateTime<Utc>,
        turn: usize,
        input: TurnInput,
        outcome: TurnOutcome,
    },
    Ideas {
        at: DateTime<Utc>,
        k: usize,
        origin_turn: usize,
        specs: Vec<Value>,
        partial: bool,
    },
    Accept {
        at: DateTime<Utc>,
        index: usize,
        spec_digest: String,
    },
}

impl LogEntry {
    pub fn last_time(&self) -> DateTime<Utc> {
        match self {
            LogEntry::Created { at, .. }
            | LogEntry::Dataset { at, .. }
            | LogEntry::Ideas { at, .. }
            | LogEntry::Accept { at, .. } => *at,
            LogEntry::Turn { finished_at, .. } => *finished_at,
        }
    }
}

pub fn sessions_dir(data_dir: &Path) -> PathBuf {
    data_dir.join("sessions")
}

pub fn log_path(data_dir: &Path, id: &str) -> PathBuf {
    sessions_dir(data_dir).join(format!("{id}.jsonl"))
}

/// Appends one entry as a single write followed by a data sync.
pub async fn append(path: &Path, entry: &LogEntry) -> std::io::Result<()> {
    let mut line = serde_json::to_vec(entry).map_err(std::io::Error::other)?;
    line.push(b'\n');
    let mut file = tokio::fs::OpenOptions::new().create(true).append(true).open(path).await?;
    file.write_all(&line).await?;
    file.sync_data().await
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    Corrupt { path: String, line: usize, message: String },
}

/// Reads a session log. A torn final line (interrupted append) is dropped
/// with a warning; corruption anywhere else is an error.
pub fn read_log(path: &Path) -> Result<Vec<LogEntry>, LogError> {
    let text = std::fs::read_to_string(path).map_err(|source| LogError::Io { path: path.display().to_string(), source })?;
    let lines: Vec<&str> = text.lines().collect();
    let mut entries = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(entry) => entries.push(entry),
            Err(e) if i + 1 == lines.len() && !text.ends_with('\n') => {
                tracing::warn!(path = %path.display(), error = %e, "dropping torn final log line");
            }
            Err(e) => {
                return Err(LogError::Corrupt { path: path.display().to_string(), line: i + 1, message: e.to_string() })
            }
        }
    }
    Ok(entries)
}
