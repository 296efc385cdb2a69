//! Independent re-derivations used to check the evaluator.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};
use sketchvis_core::eval::MatchReport;
use sketchvis_core::spec::{canonicalize, normalize_attribute, Specification};

/// Every comparable property of a canonical specification as one flat
/// `path -> value` map. Marks fold `circle` into `point`.
pub fn flatten(spec: &Specification, labels: &BTreeMap<String, String>) -> BTreeMap<String, Value> {
    let spec = canonicalize(spec);
    let c = spec.components();
    let mut out = BTreeMap::new();
    for f in &c.data_schema.fields {
        let identity = identity(&f.without_sort().label());
        let label = labels.get(&identity).cloned().unwrap_or_else(|| f.without_sort().label());
        out.insert(format!("data.fields[{label}]"), json!(f.sort.map(|s| s.to_string())));
    }
    let mut filters: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for f in &c.data_schema.filters {
        filters.entry(normalize_attribute(&f.attribute)).or_default().insert(f.predicate.to_string());
    }
    for (attr, preds) in filters {
        out.insert(format!("data.filters[{attr}]"), json!(preds));
    }
    let marks: BTreeSet<String> =
        c.mark_set.marks.iter().map(|m| if m.as_str() == "circle" { "point".to_string() } else { m.to_string() }).collect();
    out.insert("mark.type".into(), json!(marks));
    for e in &c.encoding.entries {
        out.insert(format!("encoding.{}", e.channel), json!(identity(&e.field.label())));
    }
    for (path, value) in &c.design.properties {
        out.insert(path.clone(), value.clone());
    }
    out
}

/// Case/whitespace/underscore-folded label, so `Sales` and `sales` agree.
fn identity(label: &str) -> String {
    label.chars().filter(|c| !c.is_whitespace() && *c != '_').flat_map(char::to_lowercase).collect()
}

/// What [`compare_specs`](sketchvis_core::eval::compare_specs) should
/// report, computed from the flattened property maps.
pub fn expected_report(generated: &Specification, truth: &Specification) -> MatchReport {
    // Mismatched fields are named after the truth spelling when it has one.
    let mut labels = BTreeMap::new();
    for spec in [generated, truth] {
        for f in &canonicalize(spec).components().data_schema.fields {
            labels.insert(identity(&f.without_sort().label()), f.without_sort().label());
        }
    }
    let g = flatten(generated, &labels);
    let t = flatten(truth, &labels);
    let paths: BTreeSet<&String> = g.keys().chain(t.keys()).collect();
    let differing: Vec<String> = paths.iter().filter(|p| g.get(**p) != t.get(**p)).map(|p| (*p).clone()).collect();
    let is_design = |p: &str| !(p.starts_with("data.") || p == "mark.type" || p.starts_with("encoding."));
    let design_union = paths.iter().filter(|p| is_design(p)).count();
    let design_diff = differing.iter().filter(|p| is_design(p)).count();
    let data_match = !differing.iter().any(|p| p.starts_with("data."));
    let mark_match = !differing.iter().any(|p| p == "mark.type");
    let encoding_match = !differing.iter().any(|p| p.starts_with("encoding."));
    MatchReport {
        data_match,
        mark_match,
        encoding_match,
        design_similarity: if design_union == 0 { 1.0 } else { (design_union - design_diff) as f64 / design_union as f64 },
        mismatch_paths: differing,
        overall: u8::from(data_match && mark_match && encoding_match),
    }
}

/// Two-pass population mean and standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mut sum = 0.0;
    for v in values {
        sum += v;
    }
    let mean = sum / n;
    let mut squares = 0.0;
    for v in values {
        let d = v - mean;
        squares += d * d;
    }
    (mean, (squares / n).sqrt())
}
