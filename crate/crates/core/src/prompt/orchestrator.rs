use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::envelope::{build_prompt, PromptConfig, PromptEnvelope, PromptError};
use super::input::MultimodalInput;
use super::provider::{ModelProvider, ProviderError};
use super::templates;
use super::trace::{fenced_blocks, parse_trace, ReasoningTrace, TraceError};
use crate::eval::count_mismatches;
use crate::ops::apply_plan;
use crate::spec::{canonicalize_with, parse_spec, validate_with, ColumnTable, Specification};

pub const MAX_ALTERNATIVES: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TurnError {
    #[error("no dataset has been ingested for this session")]
    NoDataset,
    #[error("no current specification to vary")]
    NoCurrentSpec,
    #[error("alternative count must be between 1 and {MAX_ALTERNATIVES}, got {0}")]
    AlternativeCount(usize),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

impl TurnError {
    pub fn kind(&self) -> &'static str {
        match self {
            TurnError::NoDataset => "no_dataset",
            TurnError::NoCurrentSpec => "no_current_spec",
            TurnError::AlternativeCount(_) => "alternative_count",
            TurnError::Prompt(PromptError::SketchTooLarge { .. }) => "sketch_too_large",
            TurnError::Prompt(PromptError::Input(_)) => "invalid_input",
            TurnError::Provider(e) => e.kind(),
            TurnError::Trace(e) => e.kind(),
        }
    }
}

/// What happened when the trace's plan was replayed on the prior spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PlanOutcome {
    Applied {
        notices: Vec<String>,
        /// Whether the plan result is component-equal to the canonical
        /// generation.
        matches_generation: bool,
    },
    Failed {
        index: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnResult {
    pub trace: ReasoningTrace,
    pub new_spec: Specification,
    /// The Summary phase; the only text shown to the user.
    pub display_text: String,
    pub plan: PlanOutcome,
    pub invocations: usize,
    pub envelope_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alternatives {
    pub specs: Vec<Specification>,
    /// Fewer than the requested number of usable alternatives came back.
    pub partial: bool,
    pub requested: usize,
}

/// Stateless driver: prompt, invoke, parse.
#[derive(Clone)]
pub struct Orchestrator {
    provider: Arc<dyn ModelProvider>,
    config: PromptConfig,
}

impl Orchestrator {
    pub fn new(provider: Arc<dyn ModelProvider>, config: PromptConfig) -> Self {
        Orchestrator { provider, config }
    }

    pub fn config(&self) -> &PromptConfig {
        &self.config
    }

    pub fn envelope(&self, input: &MultimodalInput) -> Result<PromptEnvelope, PromptError> {
        build_prompt(input, &self.config)
    }

    pub async fn run_turn(&self, input: &MultimodalInput) -> Result<TurnResult, TurnError> {
        let dataset = input.dataset.as_ref().ok_or(TurnError::NoDataset)?;
        let columns = dataset.column_table();
        let envelope = build_prompt(input, &self.config)?;
        let envelope_digest = envelope.digest();
        let mut invocations = 1;
        let raw = self.provider.complete(&envelope).await?;
        let trace = match parse_trace(&raw) {
            Ok(trace) => trace,
            Err(TraceError::GenerationParse { source }) => {
                tracing::info!(error = %source, "generation did not parse; asking once for a repair");
                let repair = envelope.with_instruction(templates::repair(&source.to_string()));
                invocations += 1;
                let raw = self.provider.complete(&repair).await?;
                parse_trace(&raw)?
            }
            Err(e) => return Err(e.into()),
        };

        let new_spec = canonicalize_with(&trace.generation_spec, Some(&columns));
        let base = input.current_spec.clone().unwrap_or_default();
        let plan = match apply_plan(&base, &trace.planning) {
            Ok(applied) => {
                let planned = canonicalize_with(&applied.spec, Some(&columns));
                PlanOutcome::Applied {
                    notices: applied.notices,
                    matches_generation: planned.components().equivalent(new_spec.components()),
                }
            }
            Err(e) => PlanOutcome::Failed { index: e.index, message: e.source.to_string() },
        };
        Ok(TurnResult {
            display_text: trace.summary.clone(),
            trace,
            new_spec,
            plan,
            invocations,
            envelope_digest,
        })
    }

    /// Asks for `k` alternative designs of `input.current_spec`.
    pub async fn request_alternatives(&self, input: &MultimodalInput, k: usize) -> Result<Alternatives, TurnError> {
        if !(1..=MAX_ALTERNATIVES).contains(&k) {
            return Err(TurnError::AlternativeCount(k));
        }
        let current = input.current_spec.as_ref().filter(|s| !s.is_empty()).ok_or(TurnError::NoCurrentSpec)?;
        let columns = input.dataset.as_ref().map(|d| d.column_table());
        let mut request = input.clone();
        if request.utterance.as_deref().is_none_or(|u| u.trim().is_empty()) {
            request.utterance = Some("Suggest alternative designs for the current chart.".into());
        }
        let envelope = build_prompt(&request, &self.config)?.with_instruction(templates::alternatives(k));
        let raw = self.provider.complete(&envelope).await?;
        let specs = usable_alternatives(&raw, current, columns.as_ref(), k);
        Ok(Alternatives { partial: specs.len() < k, specs, requested: k })
    }
}

fn usable_alternatives(
    raw: &str,
    current: &Specification,
    columns: Option<&ColumnTable>,
    k: usize,
) -> Vec<Specification> {
    let current = canonicalize_with(current, columns);
    let mut out: Vec<Specification> = Vec::new();
    for (_, block) in fenced_blocks(raw) {
        let Ok(spec) = parse_spec(&block) else { continue };
        let spec = canonicalize_with(&spec, columns);
        // Distinct as the evaluator sees it, so `circle` does not pass for a new `point`.
        if !validate_with(&spec, columns).is_empty() || count_mismatches(&spec, &current).count == 0 {
            continue;
        }
        if out.iter().any(|o| count_mismatches(o, &spec).count == 0) {
            continue;
        }
        out.push(spec);
        if out.len() == k {
            break;
        }
    }
    out
}
