use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde_json::Value;
use sketchvis_core::api::{FlowEvent, FlowKind, IdeaInfo};
use sketchvis_core::dataset::{ingest_with, DataTable, IngestConfig};
use sketchvis_core::digest::sha256_hex;
use sketchvis_core::prompt::{HistoryTurn, Modality, MultimodalInput, Role};
use sketchvis_core::spec::{spec_from_tree, Specification};

use crate::store::{LogEntry, TurnInput, TurnOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct DesignIdea {
    pub spec: Specification,
    pub origin_turn: usize,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnRecord {
    pub turn: usize,
    pub spec_digest: String,
    pub display_text: String,
}

/// In-memory state of one session, rebuilt by folding its log entries.
#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub table: Option<DataTable>,
    /// Successful turns only.
    pub turns: Vec<TurnRecord>,
    /// Turn attempts, including failed ones; numbers the next turn.
    pub attempts: usize,
    pub current_spec: Option<Specification>,
    pub ideas: Vec<DesignIdea>,
    pub flow: Vec<FlowEvent>,
    pub specs: BTreeMap<String, Value>,
    pub history: Vec<HistoryTurn>,
}

#[derive(Debug, thiserror::Error)]
#[error("log entry {index} cannot be applied: {message}")]
pub struct ApplyError {
    pub index: usize,
    pub message: String,
}

pub fn modality_of(input: &TurnInput) -> Modality {
    MultimodalInput { utterance: input.utterance.clone(), sketch: input.sketch.clone(), selection: input.selection.clone(), ..Default::default() }
        .modality()
}

/// Digest of the visual part: the sketch bytes, else the selection payload.
pub fn image_digest_of(input: &TurnInput) -> Option<String> {
    if let Some(sketch) = &input.sketch {
        return Some(sketch.digest());
    }
    input
        .selection
        .as_ref()
        .filter(|s| !s.is_empty())
        .map(|s| sha256_hex(&serde_json::to_vec(s).expect("selection serializes")))
}

fn user_summary(input: &TurnInput) -> String {
    let mut parts = Vec::new();
    if let Some(u) = input.utterance.as_deref().map(str::trim).filter(|u| !u.is_empty()) {
        parts.push(u.to_string());
    }
    if input.sketch.is_some() {
        parts.push("(sketch)".to_string());
    }
    if let Some(selection) = input.selection.as_ref().filter(|s| !s.is_empty()) {
        parts.push(format!("(selected {} element(s))", selection.len()));
    }
    parts.join(" ")
}

impl Session {
    pub fn new(id: String, at: DateTime<Utc>) -> Self {
        Session {
            id,
            created_at: at,
            updated_at: at,
            table: None,
            turns: Vec::new(),
            attempts: 0,
            current_spec: None,
            ideas: Vec::new(),
            flow: Vec::new(),
            specs: BTreeMap::new(),
            history: Vec::new(),
        }
    }

    /// Rebuilds a session from its full log.
    pub fn replay(entries: &[LogEntry], ingest: &IngestConfig) -> Result<Session, ApplyError> {
        let Some(LogEntry::Created { id, at }) = entries.first() else {
            return Err(ApplyError { index: 0, message: "log does not start with a created entry".into() });
        };
        let mut session = Session::new(id.clone(), *at);
        for (index, entry) in entries.iter().enumerate().skip(1) {
            session.apply(entry, ingest).map_err(|message| ApplyError { index, message })?;
        }
        Ok(session)
    }

    /// A timestamp not earlier than anything already recorded.
    pub fn next_time(&self) -> DateTime<Utc> {
        Utc::now().max(self.updated_at)
    }

    /// Prompt input for a new turn: dataset, history and current spec plus
    /// the user's raw input.
    pub fn prompt_input(&self, input: &TurnInput) -> MultimodalInput {
        MultimodalInput {
            utterance: input.utterance.clone(),
            sketch: input.sketch.clone(),
            selection: input.selection.clone(),
            dataset: self.table.as_ref().map(DataTable::summary),
            history: self.history.clone(),
            current_spec: self.current_spec.clone(),
        }
    }

    pub fn ideas_info(&self) -> Vec<IdeaInfo> {
        self.ideas
            .iter()
            .enumerate()
            .map(|(index, idea)| IdeaInfo {
                index,
                spec: idea.spec.dialect_tree().clone(),
                digest: idea.spec.digest(),
                origin_turn: idea.origin_turn,
                accepted: idea.accepted,
            })
            .collect()
    }

    fn push_event(&mut self, event: FlowEvent) {
        self.flow.push(event);
    }

    fn event(&self, timestamp: DateTime<Utc>, modality: Modality, kind: FlowKind, input_digest: String) -> FlowEvent {
        FlowEvent {
            seq: self.flow.len(),
            timestamp,
            modality,
            kind,
            input_digest,
            image_digest: None,
            spec_digest: None,
            turn: None,
            detail: None,
        }
    }

    pub fn apply(&mut self, entry: &LogEntry, ingest: &IngestConfig) -> Result<(), String> {
        match entry {
            LogEntry::Created { .. } => return Err("duplicate created entry".into()),
            LogEntry::Dataset { format, bytes, .. } => {
                let table = ingest_with(bytes, *format, ingest).map_err(|e| e.to_string())?;
                self.table = Some(table);
            }
            LogEntry::Turn { started_at, finished_at, turn, input, outcome } => {
                self.attempts = self.attempts.max(*turn);
                let modality = modality_of(input);
                let image_digest = image_digest_of(input);
                let input_digest = input.digest();
                let mut prompt = self.event(*started_at, modality, FlowKind::Prompt, input_digest.clone());
                prompt.image_digest = image_digest.clone();
                prompt.turn = Some(*turn);
                prompt.detail = Some(user_summary(input));
                self.push_event(prompt);
                match outcome {
                    TurnOutcome::Ok { spec, spec_digest, display_text, .. } => {
                        let (parsed, _) = spec_from_tree(spec.clone()).map_err(|e| e.to_string())?;
                        let mut generation = self.event(*finished_at, modality, FlowKind::Generation, input_digest);
                        generation.image_digest = image_digest;
                        generation.spec_digest = Some(spec_digest.clone());
                        generation.turn = Some(*turn);
                        generation.detail = Some(display_text.clone());
                        self.push_event(generation);
                        self.specs.insert(spec_digest.clone(), spec.clone());
                        self.history.push(HistoryTurn { role: Role::User, summary: user_summary(input), spec_digest: None, turn: *turn });
                        self.history.push(HistoryTurn {
                            role: Role::Assistant,
                            summary: display_text.clone(),
                            spec_digest: Some(spec_digest.clone()),
                            turn: *turn,
                        });
                        self.turns.push(TurnRecord { turn: *turn, spec_digest: spec_digest.clone(), display_text: display_text.clone() });
                        self.current_spec = Some(parsed);
                    }
                    TurnOutcome::Err { kind, message } => {
                        let mut error = self.event(*finished_at, modality, FlowKind::Error, input_digest);
                        error.image_digest = image_digest;
                        error.turn = Some(*turn);
                        error.detail = Some(format!("{kind}: {message}"));
                        self.push_event(error);
                    }
                }
            }
            LogEntry::Ideas { origin_turn, specs, .. } => {
                let mut ideas = Vec::with_capacity(specs.len());
                for tree in specs {
                    let (spec, _) = spec_from_tree(tree.clone()).map_err(|e| e.to_string())?;
                    ideas.push(DesignIdea { spec, origin_turn: *origin_turn, accepted: false });
                }
                self.ideas = ideas;
            }
            LogEntry::Accept { at, index, spec_digest } => {
                let idea = self.ideas.get_mut(*index).ok_or_else(|| format!("idea {index} does not exist"))?;
                idea.accepted = true;
                let spec = idea.spec.clone();
                let input_digest = sha256_hex(format!("accept:{index}:{spec_digest}").as_bytes());
                let mut event = self.event(*at, Modality::Text, FlowKind::IdeaAccepted, input_digest);
                event.spec_digest = Some(spec_digest.clone());
                event.detail = Some(format!("accepted design idea {index}"));
                self.push_event(event);
                self.specs.insert(spec_digest.clone(), spec.dialect_tree().clone());
                self.current_spec = Some(spec);
            }
        }
        self.updated_at = self.updated_at.max(entry.last_time());
        Ok(())
    }
}
