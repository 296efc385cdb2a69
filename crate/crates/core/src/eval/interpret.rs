use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::prompt::{Component, InterpretationTag, ReasoningTrace, Reference};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationReport {
    pub items: Vec<InterpretationTag>,
    /// A component is implicit when at least one of its items is.
    pub implicit_components: BTreeMap<Component, bool>,
    pub implicit_count: usize,
}

impl InterpretationReport {
    pub fn is_implicit(&self, component: Component) -> bool {
        self.implicit_components.get(&component).copied().unwrap_or(false)
    }
}

pub fn classify_interpretation(trace: &ReasoningTrace) -> Result<InterpretationReport, EvalError> {
    classify_tags(&trace.interpretation_tags)
}

pub fn classify_tags(tags: &[InterpretationTag]) -> Result<InterpretationReport, EvalError> {
    if tags.is_empty() {
        return Err(EvalError::NotClassifiable);
    }
    let mut implicit_components: BTreeMap<Component, bool> = Component::ALL.iter().map(|c| (*c, false)).collect();
    let mut implicit_count = 0;
    for tag in tags {
        if tag.label == Reference::Implicit {
            implicit_count += 1;
            implicit_components.insert(tag.component, true);
        }
    }
    Ok(InterpretationReport { items: tags.to_vec(), implicit_components, implicit_count })
}
