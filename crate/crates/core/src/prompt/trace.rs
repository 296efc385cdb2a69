use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ops::OperationPlan;
use crate::spec::{parse_spec, SpecError, Specification};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Observation,
    Thinking,
    Planning,
    Summary,
    Generation,
}

impl Phase {
    pub const ALL: [Phase; 5] = [Phase::Observation, Phase::Thinking, Phase::Planning, Phase::Summary, Phase::Generation];

    pub fn heading(self) -> &'static str {
        match self {
            Phase::Observation => "OBSERVATION",
            Phase::Thinking => "THINKING",
            Phase::Planning => "PLANNING",
            Phase::Summary => "SUMMARY",
            Phase::Generation => "GENERATION",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.heading())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Data,
    Mark,
    Encoding,
    Design,
}

impl Component {
    pub const ALL: [Component; 4] = [Component::Data, Component::Mark, Component::Encoding, Component::Design];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterpretationTag {
    pub component: Component,
    pub item: String,
    pub label: Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningTrace {
    pub observation: String,
    pub thinking: String,
    pub planning: OperationPlan,
    /// Planning section as written, including any prose around the plan.
    pub planning_text: String,
    pub summary: String,
    /// Dialect document extracted from the Generation section.
    pub generation: String,
    pub generation_spec: Specification,
    #[serde(default)]
    pub interpretation_tags: Vec<InterpretationTag>,
}

impl ReasoningTrace {
    pub fn phase_text(&self, phase: Phase) -> &str {
        match phase {
            Phase::Observation => &self.observation,
            Phase::Thinking => &self.thinking,
            Phase::Planning => &self.planning_text,
            Phase::Summary => &self.summary,
            Phase::Generation => &self.generation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("phase_missing: no {0} section")]
    MissingPhase(Phase),
    #[error("phase {0} appears more than once")]
    DuplicatePhase(Phase),
    #[error("phase {0} is empty")]
    EmptyPhase(Phase),
    #[error("plan_schema: {0}")]
    PlanSchema(String),
    #[error("generation_parse: {source}")]
    GenerationParse {
        #[source]
        source: SpecError,
    },
    #[error("explanation block is not a tag list: {0}")]
    ExplanationSchema(String),
}

impl TraceError {
    pub fn kind(&self) -> &'static str {
        match self {
            TraceError::MissingPhase(_) => "phase_missing",
            TraceError::DuplicatePhase(_) => "phase_duplicate",
            TraceError::EmptyPhase(_) => "phase_empty",
            TraceError::PlanSchema(_) => "plan_schema",
            TraceError::GenerationParse { .. } => "generation_parse",
            TraceError::ExplanationSchema(_) => "explanation_schema",
        }
    }
}

static HEADING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^[ \t]{0,3}(#{1,6}[ \t]*)?(?:\*\*)?(OBSERVATION|THINKING|PLANNING|SUMMARY|GENERATION|EXPLANATION)(?:\*\*)?[ \t]*(:)?(?:\*\*)?[ \t]*",
    )
    .expect("heading pattern")
});

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Label {
    Phase(Phase),
    Explanation,
}

struct Heading {
    label: Label,
    line_start: usize,
    content_start: usize,
}

fn fence_marker(line: &str) -> Option<&'static str> {
    let trimmed = line.trim_start();
    if trimmed.starts_with("```") {
        Some("```")
    } else if trimmed.starts_with("~~~") {
        Some("~~~")
    } else {
        None
    }
}

/// Line-start headings outside code fences. A heading needs a colon, a
/// markdown `#` prefix, or nothing else on its line.
fn headings(raw: &str) -> Vec<Heading> {
    let mut out = Vec::new();
    let mut open_fence: Option<&str> = None;
    let mut offset = 0;
    for line in raw.split_inclusive('\n') {
        let line_start = offset;
        offset += line.len();
        let body = line.trim_end_matches(['\n', '\r']);
        if let Some(marker) = fence_marker(body) {
            match open_fence {
                None => open_fence = Some(marker),
                Some(open) if open == marker && body.trim() == marker => open_fence = None,
                Some(_) => {}
            }
            continue;
        }
        if open_fence.is_some() {
            continue;
        }
        let Some(caps) = HEADING.captures(body) else { continue };
        let rest = &body[caps.get(0).expect("match").end()..];
        if caps.get(3).is_none() && caps.get(1).is_none() && !rest.trim().is_empty() {
            continue;
        }
        let label = match &caps[2] {
            "OBSERVATION" => Label::Phase(Phase::Observation),
            "THINKING" => Label::Phase(Phase::Thinking),
            "PLANNING" => Label::Phase(Phase::Planning),
            "SUMMARY" => Label::Phase(Phase::Summary),
            "GENERATION" => Label::Phase(Phase::Generation),
            _ => Label::Explanation,
        };
        out.push(Heading { label, line_start, content_start: line_start + caps.get(0).expect("match").end() });
    }
    out
}

/// Fenced code blocks as `(info string, content)` pairs. An unterminated
/// fence runs to the end of the text.
pub fn fenced_blocks(text: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut current: Option<(&str, String, String)> = None;
    for line in text.split_inclusive('\n') {
        let body = line.trim_end_matches(['\n', '\r']);
        match (&mut current, fence_marker(body)) {
            (None, Some(marker)) => {
                let info = body.trim_start()[marker.len()..].trim().to_string();
                current = Some((marker, info, String::new()));
            }
            (Some((open, _, _)), Some(marker)) if *open == marker && body.trim() == marker => {
                let (_, info, content) = current.take().expect("open block");
                out.push((info, content));
            }
            (Some((_, _, content)), _) => content.push_str(line),
            (None, None) => {}
        }
    }
    if let Some((_, info, content)) = current {
        out.push((info, content));
    }
    out
}

fn first_block_or_all(section: &str) -> String {
    match fenced_blocks(section).into_iter().next() {
        Some((_, content)) => content.trim().to_string(),
        None => section.trim().to_string(),
    }
}

/// Splits a model response into the five phases.
pub fn parse_trace(raw: &str) -> Result<ReasoningTrace, TraceError> {
    let found = headings(raw);
    let mut sections: Vec<(Label, &str)> = Vec::new();
    for (i, heading) in found.iter().enumerate() {
        let end = found.get(i + 1).map_or(raw.len(), |next| next.line_start);
        if sections.iter().any(|(l, _)| *l == heading.label) {
            return Err(match heading.label {
                Label::Phase(p) => TraceError::DuplicatePhase(p),
                Label::Explanation => TraceError::ExplanationSchema("more than one EXPLANATION section".into()),
            });
        }
        sections.push((heading.label, raw[heading.content_start..end].trim()));
    }
    let section = |label: Label| sections.iter().find(|(l, _)| *l == label).map(|(_, s)| *s);
    let mut texts = Vec::with_capacity(5);
    for phase in Phase::ALL {
        texts.push(section(Label::Phase(phase)).ok_or(TraceError::MissingPhase(phase))?);
    }
    for (phase, text) in Phase::ALL.iter().zip(&texts) {
        if text.is_empty() {
            return Err(TraceError::EmptyPhase(*phase));
        }
    }

    let planning_text = texts[2];
    let plan_json = first_block_or_all(planning_text);
    let planning = OperationPlan::from_json(&plan_json).map_err(|e| TraceError::PlanSchema(e.to_string()))?;

    let generation = first_block_or_all(texts[4]);
    let generation_spec = parse_spec(&generation).map_err(|source| TraceError::GenerationParse { source })?;

    let interpretation_tags = match section(Label::Explanation) {
        None => Vec::new(),
        Some(text) => serde_json::from_str(&first_block_or_all(text))
            .map_err(|e| TraceError::ExplanationSchema(e.to_string()))?,
    };

    Ok(ReasoningTrace {
        observation: texts[0].to_string(),
        thinking: texts[1].to_string(),
        planning,
        planning_text: planning_text.to_string(),
        summary: texts[3].to_string(),
        generation,
        generation_spec,
        interpretation_tags,
    })
}

/// Writes a response in the five-phase layout `parse_trace` reads. Used to
/// author mock fixtures and scripted responses.
pub fn compose_response(
    observation: &str,
    thinking: &str,
    plan: &OperationPlan,
    summary: &str,
    generation: &serde_json::Value,
    tags: &[InterpretationTag],
) -> String {
    let spec = serde_json::to_string_pretty(generation).expect("spec serializes");
    let mut out = format!(
        "OBSERVATION: {observation}\nTHINKING: {thinking}\nPLANNING:\n```json\n{}\n```\nSUMMARY: {summary}\nGENERATION:\n```json\n{spec}\n```\n",
        plan.to_json()
    );
    if !tags.is_empty() {
        let tags = serde_json::to_string_pretty(tags).expect("tags serialize");
        out.push_str(&format!("EXPLANATION:\n```json\n{tags}\n```\n"));
    }
    out
}
