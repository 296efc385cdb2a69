use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::spec::{canonicalize_with, normalize_attribute, Channel, ColumnTable, FieldKey, FieldRef, Mark, Specification};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub data_match: bool,
    pub mark_match: bool,
    pub encoding_match: bool,
    pub design_similarity: f64,
    pub mismatch_paths: Vec<String>,
    /// 1 iff data, mark and encoding all match; design is excluded.
    pub overall: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MismatchCount {
    pub count: usize,
    pub paths: Vec<String>,
}

pub fn compare_specs(generated: &Specification, truth: &Specification) -> MatchReport {
    compare_specs_with(generated, truth, None)
}

/// Hard constraints on data, mark and encoding; a union ratio on design.
pub fn compare_specs_with(generated: &Specification, truth: &Specification, columns: Option<&ColumnTable>) -> MatchReport {
    let g = canonicalize_with(generated, columns);
    let t = canonicalize_with(truth, columns);
    let (g, t) = (g.components(), t.components());
    let mut paths = Vec::new();

    let fields = |c: &crate::spec::Components| -> BTreeMap<FieldKey, FieldRef> {
        c.data_schema.fields.iter().map(|f| (f.key(), f.clone())).collect()
    };
    let (gf, tf) = (fields(g), fields(t));
    let mut field_paths = BTreeSet::new();
    for key in gf.keys().chain(tf.keys()).collect::<BTreeSet<_>>() {
        let (a, b) = (gf.get(key), tf.get(key));
        if a.map(|f| f.sort) != b.map(|f| f.sort) {
            let label = b.or(a).expect("key from one side").label();
            field_paths.insert(format!("data.fields[{label}]"));
        }
    }
    let filters = |c: &crate::spec::Components| -> BTreeMap<String, BTreeSet<String>> {
        let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for f in &c.data_schema.filters {
            out.entry(normalize_attribute(&f.attribute)).or_default().insert(f.predicate.to_string());
        }
        out
    };
    let (gq, tq) = (filters(g), filters(t));
    for attr in gq.keys().chain(tq.keys()).collect::<BTreeSet<_>>() {
        if gq.get(attr) != tq.get(attr) {
            field_paths.insert(format!("data.filters[{attr}]"));
        }
    }
    let data_match = field_paths.is_empty();
    paths.extend(field_paths);

    let marks = |c: &crate::spec::Components| -> BTreeSet<Mark> { c.mark_set.marks.iter().map(|m| m.class()).collect() };
    let mark_match = marks(g) == marks(t);
    if !mark_match {
        paths.push("mark.type".to_string());
    }

    let bindings = |c: &crate::spec::Components| -> BTreeMap<Channel, FieldKey> {
        c.encoding.entries.iter().map(|e| (e.channel, e.field.key())).collect()
    };
    let (ge, te) = (bindings(g), bindings(t));
    let mut encoding_match = true;
    for channel in Channel::ALL {
        if ge.get(&channel) != te.get(&channel) {
            encoding_match = false;
            paths.push(format!("encoding.{channel}"));
        }
    }

    let union: BTreeSet<&String> = g.design.properties.keys().chain(t.design.properties.keys()).collect();
    let mut matching = 0usize;
    for path in &union {
        let (a, b): (Option<&Value>, Option<&Value>) = (g.design.get(path), t.design.get(path));
        if a == b {
            matching += 1;
        } else {
            paths.push((*path).clone());
        }
    }
    let design_similarity = if union.is_empty() { 1.0 } else { matching as f64 / union.len() as f64 };

    MatchReport {
        data_match,
        mark_match,
        encoding_match,
        design_similarity,
        mismatch_paths: paths,
        overall: u8::from(data_match && mark_match && encoding_match),
    }
}

pub fn count_mismatches(generated: &Specification, truth: &Specification) -> MismatchCount {
    let paths = compare_specs(generated, truth).mismatch_paths;
    MismatchCount { count: paths.len(), paths }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::parse_spec;

    const BAR: &str = r#"{"mark":"bar","encoding":{"x":{"field":"region"},"y":{"field":"sales","aggregate":"mean"},
        "color":{"field":"region","legend":{"orient":"left"}}}}"#;

    #[test]
    fn identical_specs_match() {
        let s = parse_spec(BAR).unwrap();
        let report = compare_specs(&s, &s);
        assert_eq!(report.overall, 1);
        assert_eq!(report.design_similarity, 1.0);
        assert!(report.mismatch_paths.is_empty());
    }

    #[test]
    fn bar_instead_of_line() {
        let g = parse_spec(BAR).unwrap();
        let t = parse_spec(&BAR.replace("\"bar\"", "\"line\"")).unwrap();
        let report = compare_specs(&g, &t);
        assert!(!report.mark_match && report.data_match && report.encoding_match);
        assert_eq!(report.overall, 0);
        assert_eq!(report.mismatch_paths, vec!["mark.type"]);
    }

    #[test]
    fn point_and_circle_are_one_mark() {
        let g = parse_spec(&BAR.replace("\"bar\"", "\"point\"")).unwrap();
        let t = parse_spec(&BAR.replace("\"bar\"", "\"circle\"")).unwrap();
        assert!(compare_specs(&g, &t).mark_match);
    }

    #[test]
    fn legend_moved_and_title_removed() {
        let truth = parse_spec(
            r#"{"mark":"bar","encoding":{"x":{"field":"region","axis":{"title":"Area"}},"y":{"field":"sales"},
                "color":{"field":"region","legend":{"orient":"left"}}}}"#,
        )
        .unwrap();
        let generated = parse_spec(
            r#"{"mark":"bar","encoding":{"x":{"field":"region"},"y":{"field":"sales"},
                "color":{"field":"region","legend":{"orient":"top-right"}}}}"#,
        )
        .unwrap();
        let count = count_mismatches(&generated, &truth);
        assert_eq!(count.count, 2);
        assert_eq!(count.paths, vec!["axis.x.title", "legend.orient"]);
        assert_eq!(compare_specs(&generated, &truth).overall, 1);
    }
}
