use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::compare::{compare_specs_with, MatchReport};
use super::interpret::{classify_interpretation, InterpretationReport};
use crate::dataset::{ingest, DataFormat, DataTable, DatasetError};
use crate::prompt::{ModelProvider, MultimodalInput, Orchestrator, PromptConfig};
use crate::spec::{parse_spec, spec_from_tree, validate, Specification};

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRecord {
    pub id: String,
    pub utterance: String,
    pub dataset: PathBuf,
    pub ground_truth: Specification,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordError {
    pub kind: String,
    pub message: String,
}

/// A corpus line that could not become a record.
#[derive(Debug, Clone, PartialEq)]
pub struct InvalidRecord {
    pub id: String,
    pub error: RecordError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub entries: Vec<Result<CorpusRecord, InvalidRecord>>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus {0} has no records")]
    Empty(String),
}

#[derive(Deserialize)]
struct WireRecord {
    id: Value,
    utterance: String,
    dataset: PathBuf,
    spec: Value,
}

/// Reads one JSON record per line: `{id, utterance, dataset, spec}`.
/// `dataset` is resolved against the corpus file's directory; `spec` is a
/// dialect object or a string holding one.
pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CorpusError::Unreadable { path: path.display().to_string(), source })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let corpus = parse_corpus(&text, &base);
    if corpus.entries.is_empty() {
        return Err(CorpusError::Empty(path.display().to_string()));
    }
    Ok(corpus)
}

pub fn parse_corpus(text: &str, base: &Path) -> Corpus {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let invalid = |id: String, kind: &str, message: String| InvalidRecord {
            id,
            error: RecordError { kind: kind.into(), message },
        };
        let wire: WireRecord = match serde_json::from_str(line) {
            Ok(w) => w,
            Err(e) => {
                entries.push(Err(invalid(format!("line-{}", i + 1), "corpus_line", e.to_string())));
                continue;
            }
        };
        let id = match wire.id {
            Value::String(s) => s,
            other => other.to_string(),
        };
        let parsed = match wire.spec {
            Value::String(text) => parse_spec(&text),
            tree => spec_from_tree(tree).map(|(s, _)| s),
        };
        let truth = match parsed {
            Ok(spec) => spec,
            Err(e) => {
                entries.push(Err(invalid(id, "ground_truth", e.to_string())));
                continue;
            }
        };
        let violations = validate(&truth);
        if !violations.is_empty() {
            let message = violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
            entries.push(Err(invalid(id, "ground_truth", message)));
            continue;
        }
        entries.push(Ok(CorpusRecord { id, utterance: wire.utterance, dataset: base.join(wire.dataset), ground_truth: truth }));
    }
    Corpus { entries }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordOutcome {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched: Option<MatchReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpretation: Option<InterpretationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<RecordError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentAccuracy {
    pub data: f64,
    pub mark: f64,
    pub encoding: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicitStats {
    /// Records whose trace carried interpretation tags.
    pub classified: usize,
    pub mean: Option<f64>,
    /// Population standard deviation.
    pub stddev: Option<f64>,
    /// Item path to the number of records that inferred it implicitly.
    pub frequency: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub n: usize,
    pub errors: usize,
    pub overall_accuracy: f64,
    pub accuracy: ComponentAccuracy,
    pub mean_design_similarity: f64,
    pub implicit: ImplicitStats,
    pub records: Vec<RecordOutcome>,
}

#[derive(Debug, Clone)]
pub struct CorpusOptions {
    pub parallelism: usize,
    pub prompt: PromptConfig,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions { parallelism: 4, prompt: PromptConfig::default() }
    }
}

fn format_for(path: &Path) -> Result<DataFormat, DatasetError> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("csv") => Ok(DataFormat::Csv),
        Some("tsv") | Some("tab") => Ok(DataFormat::Tsv),
        Some("json") | Some("jsonl") | Some("ndjson") => Ok(DataFormat::JsonRows),
        other => Err(DatasetError::UnknownFormat(other.unwrap_or("").to_string())),
    }
}

fn load_table(path: &Path) -> Result<DataTable, RecordError> {
    let err = |kind: &str, message: String| RecordError { kind: kind.into(), message };
    let format = format_for(path).map_err(|e| err("dataset", format!("{}: {e}", path.display())))?;
    let bytes = std::fs::read(path).map_err(|e| err("dataset", format!("{}: {e}", path.display())))?;
    ingest(&bytes, format).map_err(|e| err("dataset", format!("{}: {e}", path.display())))
}

/// Evaluates every record with a text-only prompt. Record failures become
/// error entries that count as misses; the run itself never aborts.
pub async fn run_corpus(corpus: &Corpus, provider: Arc<dyn ModelProvider>, options: &CorpusOptions) -> CorpusReport {
    let mut tables: HashMap<PathBuf, Result<Arc<DataTable>, RecordError>> = HashMap::new();
    for record in corpus.entries.iter().flatten() {
        tables.entry(record.dataset.clone()).or_insert_with(|| load_table(&record.dataset).map(Arc::new));
    }
    let orchestrator = Orchestrator::new(provider, options.prompt.clone());
    let tables = &tables;
    let orchestrator = &orchestrator;
    let outcomes: Vec<RecordOutcome> = stream::iter(corpus.entries.iter())
        .map(|entry| async move {
            match entry {
                Err(invalid) => RecordOutcome {
                    id: invalid.id.clone(),
                    matched: None,
                    interpretation: None,
                    error: Some(invalid.error.clone()),
                },
                Ok(record) => evaluate_record(record, tables, orchestrator).await,
            }
        })
        .buffered(options.parallelism.max(1))
        .collect()
        .await;
    aggregate(outcomes)
}

async fn evaluate_record(
    record: &CorpusRecord,
    tables: &HashMap<PathBuf, Result<Arc<DataTable>, RecordError>>,
    orchestrator: &Orchestrator,
) -> RecordOutcome {
    let failed = |error: RecordError| RecordOutcome { id: record.id.clone(), matched: None, interpretation: None, error: Some(error) };
    let table = match &tables[&record.dataset] {
        Ok(t) => t.clone(),
        Err(e) => return failed(e.clone()),
    };
    let input = MultimodalInput {
        utterance: Some(record.utterance.clone()),
        dataset: Some(table.summary()),
        ..Default::default()
    };
    match orchestrator.run_turn(&input).await {
        Ok(turn) => {
            let columns = table.column_table();
            let matched = compare_specs_with(&turn.new_spec, &record.ground_truth, Some(&columns));
            RecordOutcome {
                id: record.id.clone(),
                matched: Some(matched),
                interpretation: classify_interpretation(&turn.trace).ok(),
                error: None,
            }
        }
        Err(e) => failed(RecordError { kind: e.kind().into(), message: e.to_string() }),
    }
}

/// Fractions are over all records; errored records count as misses.
pub fn aggregate(records: Vec<RecordOutcome>) -> CorpusReport {
    let n = records.len();
    let frac = |count: usize| if n == 0 { 0.0 } else { count as f64 / n as f64 };
    let matched: Vec<&MatchReport> = records.iter().filter_map(|r| r.matched.as_ref()).collect();
    let count = |f: fn(&MatchReport) -> bool| matched.iter().filter(|m| f(m)).count();
    let similarity_sum: f64 = matched.iter().map(|m| m.design_similarity).sum();

    let counts: Vec<f64> = records.iter().filter_map(|r| r.interpretation.as_ref()).map(|i| i.implicit_count as f64).collect();
    let mut frequency: BTreeMap<String, usize> = BTreeMap::new();
    for interpretation in records.iter().filter_map(|r| r.interpretation.as_ref()) {
        let mut seen = std::collections::BTreeSet::new();
        for item in interpretation.items.iter().filter(|t| t.label == crate::prompt::Reference::Implicit) {
            if seen.insert(&item.item) {
                *frequency.entry(item.item.clone()).or_default() += 1;
            }
        }
    }
    let (mean, stddev) = if counts.is_empty() {
        (None, None)
    } else {
        let k = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / k;
        let variance = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / k;
        (Some(mean), Some(variance.sqrt()))
    };

    CorpusReport {
        n,
        errors: records.iter().filter(|r| r.error.is_some()).count(),
        overall_accuracy: frac(count(|m| m.overall == 1)),
        accuracy: ComponentAccuracy {
            data: frac(count(|m| m.data_match)),
            mark: frac(count(|m| m.mark_match)),
            encoding: frac(count(|m| m.encoding_match)),
        },
        mean_design_similarity: if n == 0 { 0.0 } else { similarity_sum / n as f64 },
        implicit: ImplicitStats { classified: counts.len(), mean, stddev, frequency },
        records,
    }
}

impl CorpusReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// One row per record: id, overall, data, mark, encoding, design
    /// similarity, implicit count, error kind.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["id", "overall", "data", "mark", "encoding", "design_similarity", "implicit_count", "error"])
            .expect("in-memory write");
        for r in &self.records {
            let m = r.matched.as_ref();
            let flag = |f: fn(&MatchReport) -> bool| m.map_or(String::new(), |m| u8::from(f(m)).to_string());
            writer
                .write_record([
                    r.id.clone(),
                    m.map_or(String::new(), |m| m.overall.to_string()),
                    flag(|m| m.data_match),
                    flag(|m| m.mark_match),
                    flag(|m| m.encoding_match),
                    m.map_or(String::new(), |m| m.design_similarity.to_string()),
                    r.interpretation.as_ref().map_or(String::new(), |i| i.implicit_count.to_string()),
                    r.error.as_ref().map_or(String::new(), |e| e.kind.clone()),
                ])
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8 csv")
    }
}
