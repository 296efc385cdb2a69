//! Five-phase responses with a sentinel token planted in every section.

use proptest::prelude::*;
use sketchvis_core::prompt::{Phase, ReasoningTrace, TraceError};

const PLAN: &str = r#"[{"op": "SetMarkType", "mark": "bar"}, {"op": "BindCoordinate", "axis": "x", "field": {"field": "region"}}]"#;
const BROKEN_PLAN: &str = r#"[{"op": "Teleport", "mark": "bar"}]"#;
const BROKEN_SPEC: &str = r#"{"mark": "bar", "encoding": {"x": {"field": "region"}"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Colon,
    Hash,
    Bold,
    Bare,
}

#[derive(Debug, Clone)]
pub struct Section {
    pub phase: Phase,
    pub style: Style,
    /// Emitted twice when set.
    pub duplicated: bool,
}

#[derive(Debug, Clone)]
pub struct FuzzCase {
    pub nonce: u32,
    pub sections: Vec<Section>,
    pub preamble: bool,
    pub fence_label: &'static str,
    pub broken_plan: bool,
    pub broken_spec: bool,
}

pub fn sentinel(nonce: u32, phase: Phase) -> String {
    format!("ZX{}Q{nonce}", phase.heading())
}

pub fn preamble_sentinel(nonce: u32) -> String {
    format!("ZXPREAMBLEQ{nonce}")
}

fn heading(phase: Phase, style: Style) -> String {
    let name = phase.heading();
    match style {
        Style::Colon => format!("{name}:"),
        Style::Hash => format!("## {name}"),
        Style::Bold => format!("**{name}:**"),
        Style::Bare => name.to_string(),
    }
}

fn body(case: &FuzzCase, phase: Phase) -> String {
    let token = sentinel(case.nonce, phase);
    let fence = |content: &str| format!("```{}\n{content}\n```", case.fence_label);
    match phase {
        Phase::Planning => {
            let plan = if case.broken_plan { BROKEN_PLAN } else { PLAN };
            format!("Steps follow ({token}); the plan mentions SUMMARY: only mid-line.\n{}\nThat is all, {token}.", fence(plan))
        }
        Phase::Generation => {
            let spec = if case.broken_spec {
                BROKEN_SPEC.to_string()
            } else {
                format!(r#"{{"description": "{token}", "mark": "bar", "encoding": {{"x": {{"field": "region"}}}}}}"#)
            };
            format!("Here is the chart.\n{}\nTrailing prose after the block.", fence(&spec))
        }
        _ => format!(
            "{token} first line\n```text\nTHINKING: quoted inside a fence\n```\n  note {token} OBSERVATION: not a heading here"
        ),
    }
}

impl FuzzCase {
    pub fn render(&self) -> String {
        let mut out = String::new();
        if self.preamble {
            out.push_str(&format!("Sure. {} Let me walk through it.\n\n", preamble_sentinel(self.nonce)));
        }
        for section in &self.sections {
            let copies = if section.duplicated { 2 } else { 1 };
            for _ in 0..copies {
                let head = heading(section.phase, section.style);
                match section.style {
                    // A bare heading must sit alone on its line.
                    Style::Bare | Style::Hash => out.push_str(&format!("{head}\n{}\n\n", body(self, section.phase))),
                    _ => out.push_str(&format!("{head} {}\n\n", body(self, section.phase))),
                }
            }
        }
        out
    }

    /// Error kind the parser must report, or `None` for success.
    pub fn expected_kind(&self) -> Option<&'static str> {
        if self.sections.iter().any(|s| s.duplicated) {
            return Some("phase_duplicate");
        }
        if Phase::ALL.iter().any(|p| !self.sections.iter().any(|s| s.phase == *p)) {
            return Some("phase_missing");
        }
        if self.broken_plan {
            return Some("plan_schema");
        }
        if self.broken_spec {
            return Some("generation_parse");
        }
        None
    }

    /// Checks a parse outcome against the planted sentinels. Returns a
    /// description of the first problem found.
    pub fn check(&self, raw: &str, outcome: &Result<ReasoningTrace, TraceError>) -> Result<(), String> {
        match (outcome, self.expected_kind()) {
            (Err(e), Some(kind)) if e.kind() == kind => {
                if let TraceError::MissingPhase(phase) = e {
                    if self.sections.iter().any(|s| s.phase == *phase) {
                        return Err(format!("reported {phase} missing but it is present"));
                    }
                }
                Ok(())
            }
            (Err(e), expected) => Err(format!("error {} ({e}), expected {expected:?}", e.kind())),
            (Ok(_), Some(kind)) => Err(format!("parsed, expected {kind}")),
            (Ok(trace), None) => {
                for phase in Phase::ALL {
                    let text = trace.phase_text(phase);
                    if text.trim().is_empty() {
                        return Err(format!("{phase} is empty"));
                    }
                    if !raw.contains(text) {
                        return Err(format!("{phase} text is not a slice of the response"));
                    }
                    if !text.contains(&sentinel(self.nonce, phase)) {
                        return Err(format!("{phase} lost its sentinel"));
                    }
                    if text.contains(&preamble_sentinel(self.nonce)) {
                        return Err(format!("{phase} absorbed the preamble"));
                    }
                    for other in Phase::ALL.iter().filter(|o| **o != phase) {
                        if text.contains(&sentinel(self.nonce, *other)) {
                            return Err(format!("{phase} holds text from {other}"));
                        }
                    }
                }
                if trace.planning.len() != 2 {
                    return Err(format!("plan has {} ops", trace.planning.len()));
                }
                Ok(())
            }
        }
    }
}

fn arb_style() -> impl Strategy<Value = Style> {
    prop::sample::select(vec![Style::Colon, Style::Hash, Style::Bold, Style::Bare])
}

pub fn arb_case() -> impl Strategy<Value = FuzzCase> {
    (
        any::<u32>(),
        Just(Phase::ALL.to_vec()).prop_shuffle(),
        prop::collection::vec((arb_style(), prop::bool::weighted(0.08), prop::bool::weighted(0.03)), 5),
        any::<bool>(),
        prop::sample::select(vec!["json", "JSON", "", "jsonc", "vega-lite"]),
        prop::bool::weighted(0.08),
        prop::bool::weighted(0.08),
    )
        .prop_map(|(nonce, order, flags, preamble, fence_label, broken_plan, broken_spec)| {
            let sections = order
                .into_iter()
                .zip(flags)
                .filter(|(_, (_, dropped, _))| !dropped)
                .map(|(phase, (style, _, duplicated))| Section { phase, style, duplicated })
                .collect();
            FuzzCase { nonce, sections, preamble, fence_label, broken_plan, broken_spec }
        })
}
