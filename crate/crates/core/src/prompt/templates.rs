//! Prompt template texts. The same texts are reproduced in
//! `docs/prompt-templates.md`.

pub const SYSTEM: &str = include_str!("../../templates/system.txt");
pub const PHASE_SCHEMA: &str = include_str!("../../templates/phase_schema.txt");
pub const REPAIR: &str = include_str!("../../templates/repair.txt");
pub const ALTERNATIVES: &str = include_str!("../../templates/alternatives.txt");

pub fn repair(error: &str) -> String {
    REPAIR.replace("{error}", error)
}

pub fn alternatives(k: usize) -> String {
    ALTERNATIVES.replace("{k}", &k.to_string())
}
