//! Core engine for sketch-driven chart authoring: the chart specification
//! model, the specification operation algebra, multimodal prompt
//! orchestration, and generated-chart evaluation.

pub mod api;
pub mod dataset;
pub mod digest;
pub mod eval;
pub mod ops;
pub mod prompt;
pub mod spec;
