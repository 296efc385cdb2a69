use std::path::Path;

use serde_json::json;
use sketchvis_core::eval::{load_corpus, run_corpus, CorpusOptions, CorpusReport};
use sketchvis_core::prompt::{provider_from_config, ProviderConfig};

use crate::{emit, emit_error, exit, EvalArgs};

pub const JSON_REPORT: &str = "report.json";
pub const CSV_REPORT: &str = "report.csv";

pub fn write_reports(report: &CorpusReport, out: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join(JSON_REPORT), report.to_json())?;
    std::fs::write(out.join(CSV_REPORT), report.to_csv())
}

pub async fn run(args: EvalArgs, lookup: impl Fn(&str) -> Option<String>) -> u8 {
    let corpus = match load_corpus(&args.corpus) {
        Ok(c) => c,
        Err(e) => {
            emit_error("corpus", e);
            return exit::INPUT;
        }
    };
    if args.parallel == 0 {
        emit_error("config", "--parallel must be at least 1");
        return exit::INPUT;
    }
    let default_fixtures = args.corpus.parent().map(|p| p.join("fixtures"));
    let provider = ProviderConfig::from_lookup(&lookup)
        .and_then(|base| args.provider.apply(base, default_fixtures))
        .and_then(|cfg| provider_from_config(&cfg));
    let provider = match provider {
        Ok(p) => p,
        Err(e) => {
            emit_error("provider", e);
            return exit::STARTUP;
        }
    };
    let options = CorpusOptions { parallelism: args.parallel, ..Default::default() };
    let report = run_corpus(&corpus, provider, &options).await;
    if let Err(e) = write_reports(&report, &args.out) {
        emit_error("output", format!("{}: {e}", args.out.display()));
        return exit::INPUT;
    }
    emit(&json!({
        "command": "eval",
        "n": report.n,
        "errors": report.errors,
        "overall_accuracy": report.overall_accuracy,
        "json": args.out.join(JSON_REPORT),
        "csv": args.out.join(CSV_REPORT),
    }));
    if report.errors == 0 {
        exit::OK
    } else {
        exit::FAILED
    }
}
