use std::fmt::Write as _;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::input::{HistoryTurn, InputError, MultimodalInput, Role};
use super::templates;
use crate::dataset::DataSummary;
use crate::digest::sha256_hex;
use crate::spec::render_text;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Part {
    SystemInstruction { text: String },
    PhaseSchema { text: String },
    DataSummary { text: String },
    History { text: String },
    CurrentSpec { text: String },
    User { text: String },
    /// Follow-up instruction appended for repair or alternatives requests.
    Instruction { text: String },
    Image { media_type: String, width: u32, height: u32, data_base64: String },
}

impl Part {
    pub fn text(&self) -> Option<&str> {
        match self {
            Part::SystemInstruction { text }
            | Part::PhaseSchema { text }
            | Part::DataSummary { text }
            | Part::History { text }
            | Part::CurrentSpec { text }
            | Part::User { text }
            | Part::Instruction { text } => Some(text),
            Part::Image { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProviderHints {
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl Default for ProviderHints {
    fn default() -> Self {
        ProviderHints { temperature: 0.0, max_output_tokens: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptEnvelope {
    pub parts: Vec<Part>,
    pub hints: ProviderHints,
}

impl PromptEnvelope {
    /// Hex SHA-256 of the compact JSON form; keys mock fixtures.
    pub fn digest(&self) -> String {
        sha256_hex(&self.canonical_bytes())
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("envelope serializes")
    }

    pub fn image(&self) -> Option<&Part> {
        self.parts.iter().find(|p| matches!(p, Part::Image { .. }))
    }

    /// Copy with an extra instruction placed before the image part.
    pub fn with_instruction(&self, text: String) -> PromptEnvelope {
        let mut parts = self.parts.clone();
        let at = parts.iter().position(|p| matches!(p, Part::Image { .. })).unwrap_or(parts.len());
        parts.insert(at, Part::Instruction { text });
        PromptEnvelope { parts, hints: self.hints }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptConfig {
    /// History budget in estimated tokens (characters / 4).
    pub history_budget_tokens: usize,
    pub sketch_cap_bytes: usize,
    pub hints: ProviderHints,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig { history_budget_tokens: 4000, sketch_cap_bytes: 2 * 1024 * 1024, hints: ProviderHints::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PromptError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("sketch is {size} bytes, over the {cap} byte limit; downscale the canvas export and retry")]
    SketchTooLarge { size: usize, cap: usize },
}

pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

pub fn build_prompt(input: &MultimodalInput, cfg: &PromptConfig) -> Result<PromptEnvelope, PromptError> {
    input.check()?;
    if let Some(sketch) = &input.sketch {
        if sketch.bytes.len() > cfg.sketch_cap_bytes {
            return Err(PromptError::SketchTooLarge { size: sketch.bytes.len(), cap: cfg.sketch_cap_bytes });
        }
    }
    let mut parts = vec![
        Part::SystemInstruction { text: templates::SYSTEM.to_string() },
        Part::PhaseSchema { text: templates::PHASE_SCHEMA.to_string() },
    ];
    if let Some(summary) = &input.dataset {
        parts.push(Part::DataSummary { text: summary_text(summary) });
    }
    if let Some(text) = history_text(&input.history, cfg.history_budget_tokens) {
        parts.push(Part::History { text });
    }
    if let Some(spec) = input.current_spec.as_ref().filter(|s| !s.is_empty()) {
        parts.push(Part::CurrentSpec { text: format!("CURRENT SPECIFICATION\n{}", render_text(spec)) });
    }
    parts.push(Part::User { text: user_text(input) });
    if let Some(sketch) = &input.sketch {
        parts.push(Part::Image {
            media_type: sketch.media_type.clone(),
            width: sketch.width,
            height: sketch.height,
            data_base64: STANDARD.encode(&sketch.bytes),
        });
    }
    Ok(PromptEnvelope { parts, hints: cfg.hints })
}

pub fn summary_text(summary: &DataSummary) -> String {
    let mut out = format!("DATASET\n{} rows. Columns:\n", summary.row_count);
    for column in &summary.columns {
        let _ = writeln!(out, "- {} ({})", column.name, column.kind.as_str());
    }
    if !summary.sample_rows.is_empty() {
        out.push_str("Sample rows:\n");
        let header: Vec<&str> = summary.columns.iter().map(|c| c.name.as_str()).collect();
        let _ = writeln!(out, "{}", header.join(" | "));
        for row in &summary.sample_rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| match v {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Null => String::new(),
                    other => other.to_string(),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(" | "));
        }
    }
    out
}

fn turn_line(turn: &HistoryTurn) -> String {
    let who = match turn.role {
        Role::User => "user",
        Role::Assistant => "assistant",
    };
    match &turn.spec_digest {
        Some(digest) => format!("[turn {}] {who}: {} (spec {})", turn.turn, turn.summary, &digest[..digest.len().min(12)]),
        None => format!("[turn {}] {who}: {}", turn.turn, turn.summary),
    }
}

/// Keeps the first turn, then adds turns newest first while they fit the
/// budget. The kept turns are listed in time order.
fn history_text(history: &[HistoryTurn], budget: usize) -> Option<String> {
    let (first, rest) = history.split_first()?;
    let first_line = turn_line(first);
    let mut used = estimate_tokens(&first_line);
    let mut kept = Vec::new();
    for turn in rest.iter().rev() {
        let line = turn_line(turn);
        let cost = estimate_tokens(&line);
        if used + cost > budget {
            break;
        }
        used += cost;
        kept.push(line);
    }
    kept.reverse();
    let omitted = rest.len() - kept.len();
    let mut out = String::from("HISTORY\n");
    out.push_str(&first_line);
    out.push('\n');
    if omitted > 0 {
        let _ = writeln!(out, "[{omitted} earlier turn(s) omitted]");
    }
    for line in kept {
        out.push_str(&line);
        out.push('\n');
    }
    Some(out)
}

fn user_text(input: &MultimodalInput) -> String {
    let mut out = String::from("USER INPUT\n");
    match input.utterance.as_deref().map(str::trim).filter(|u| !u.is_empty()) {
        Some(u) => {
            let _ = writeln!(out, "Request: {u}");
        }
        None => out.push_str("Request: (none, interpret the visual input)\n"),
    }
    if let Some(selection) = input.selection.as_ref().filter(|s| !s.is_empty()) {
        out.push_str("Selected elements:\n");
        for item in selection {
            let b = item.bbox;
            let _ = writeln!(
                out,
                "- {} ({}) at x={} y={} width={} height={}",
                item.element_id, item.kind, b.x, b.y, b.width, b.height
            );
        }
    }
    if let Some(sketch) = &input.sketch {
        let _ = writeln!(out, "A sketch of {}x{} pixels is attached as the last part.", sketch.width, sketch.height);
    }
    out
}
