#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use sketchvis_core::dataset::{ingest, DataFormat, DataTable};
use sketchvis_core::prompt::{build_prompt, compose_response, MultimodalInput, PromptConfig};
use sketchvis_core::ops::OperationPlan;

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn demo_dir() -> PathBuf {
    repo_root().join("fixtures/demo")
}

pub fn sketchvis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sketchvis"))
        .args(args)
        .env_remove("SKETCHVIS_MOCK_FIXTURES")
        .env("SKETCHVIS_LOG", "error")
        .output()
        .expect("binary runs")
}

pub fn stdout_json(output: &Output) -> Value {
    let text = String::from_utf8_lossy(&output.stdout);
    serde_json::from_str(text.lines().last().unwrap_or("null")).unwrap_or_else(|e| panic!("{e}: {text}"))
}

pub fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        std::fs::copy(entry.path(), to.join(entry.file_name())).unwrap();
    }
}

/// Envelope digest the evaluator will look up for `utterance` on `table`.
pub fn eval_digest(utterance: &str, table: &DataTable) -> String {
    let input = MultimodalInput {
        utterance: Some(utterance.into()),
        dataset: Some(table.summary()),
        ..Default::default()
    };
    build_prompt(&input, &PromptConfig::default()).unwrap().digest()
}

pub fn chart_response(spec: &Value) -> String {
    compose_response("obs", "think", &OperationPlan::default(), "summary", spec, &[])
}

pub fn cars_csv() -> Vec<u8> {
    let mut out = String::from("Name,Horsepower,Miles_per_Gallon,Origin,Year\n");
    for i in 0..30 {
        let origin = ["USA", "Europe", "Japan"][i % 3];
        out.push_str(&format!("car {i},{},{},{origin},{}\n", 60 + i * 5, 40 - i, 1970 + i % 12));
    }
    out.into_bytes()
}

pub struct Case {
    pub id: String,
    pub utterance: String,
    pub truth: Value,
    /// What the mock model answers; `None` leaves the fixture out.
    pub answer: Option<Value>,
}

/// Writes `corpus.jsonl`, `cars.csv` and `fixtures/` under `dir`.
pub fn write_corpus(dir: &Path, cases: &[Case]) -> PathBuf {
    std::fs::create_dir_all(dir.join("fixtures")).unwrap();
    std::fs::write(dir.join("cars.csv"), cars_csv()).unwrap();
    let table = ingest(&cars_csv(), DataFormat::Csv).unwrap();
    let mut lines = String::new();
    for case in cases {
        lines.push_str(&json!({ "id": case.id, "utterance": case.utterance, "dataset": "cars.csv", "spec": case.truth }).to_string());
        lines.push('\n');
        if let Some(answer) = &case.answer {
            let path = dir.join("fixtures").join(format!("{}.txt", eval_digest(&case.utterance, &table)));
            std::fs::write(path, chart_response(answer)).unwrap();
        }
    }
    let corpus = dir.join("corpus.jsonl");
    std::fs::write(&corpus, lines).unwrap();
    corpus
}

pub fn scatter() -> Value {
    json!({"mark": "point", "encoding": {"x": {"field": "Horsepower", "type": "quantitative"}, "y": {"field": "Miles_per_Gallon", "type": "quantitative"}}})
}

pub fn bar() -> Value {
    json!({"mark": "bar", "encoding": {"x": {"field": "Origin", "type": "nominal"}, "y": {"aggregate": "count", "type": "quantitative"}}})
}

pub fn line() -> Value {
    json!({"mark": "line", "encoding": {"x": {"field": "Year", "type": "temporal"}, "y": {"field": "Horsepower", "aggregate": "mean", "type": "quantitative"}}})
}

/// Three records; the model gets the third one wrong.
pub fn three_cases() -> Vec<Case> {
    let mut wrong = line();
    wrong["mark"] = json!("bar");
    vec![
        Case { id: "r1".into(), utterance: "horsepower against mileage".into(), truth: scatter(), answer: Some(scatter()) },
        Case { id: "r2".into(), utterance: "how many cars per origin".into(), truth: bar(), answer: Some(bar()) },
        Case { id: "r3".into(), utterance: "average horsepower by year".into(), truth: line(), answer: Some(wrong) },
    ]
}
