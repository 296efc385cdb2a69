//! Multimodal prompt assembly, model invocation and five-phase response
//! parsing (Observation, Thinking, Planning, Summary, Generation).

mod envelope;
mod input;
mod orchestrator;
mod provider;
pub mod templates;
mod trace;

pub use envelope::{build_prompt, estimate_tokens, summary_text, Part, PromptConfig, PromptEnvelope, PromptError, ProviderHints};
pub use input::{BoundingBox, HistoryTurn, InputError, Modality, MultimodalInput, Role, SelectionItem, Sketch};
pub use orchestrator::{Alternatives, Orchestrator, PlanOutcome, TurnError, TurnResult, MAX_ALTERNATIVES};
pub use provider::{
    fixture_path, invoke, provider_from_config, CountingProvider, HttpProvider, MockProvider, ModelProvider,
    ProviderConfig, ProviderError, ProviderMode, RecordingProvider, ScriptedProvider, DEFAULT_CREDENTIAL_VAR,
};
pub use trace::{compose_response, fenced_blocks, parse_trace, Component, InterpretationTag, Phase, ReasoningTrace, Reference, TraceError};
