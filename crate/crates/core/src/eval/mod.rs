//! Accuracy accounting for generated charts: hard/soft constraint matching,
//! mismatch counting, explicit/implicit interpretation tallies and corpus
//! aggregation.

mod compare;
mod corpus;
mod interpret;

use thiserror::Error;

pub use compare::{compare_specs, compare_specs_with, count_mismatches, MatchReport, MismatchCount};
pub use corpus::{
    aggregate, load_corpus, parse_corpus, run_corpus, ComponentAccuracy, Corpus, CorpusError, CorpusOptions, CorpusRecord,
    CorpusReport, ImplicitStats, InvalidRecord, RecordError, RecordOutcome,
};
pub use interpret::{classify_interpretation, classify_tags, InterpretationReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("trace has no interpretation tags; re-prompt with the explanation instruction")]
    NotClassifiable,
}
