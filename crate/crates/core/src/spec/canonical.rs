use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::catalog;
use super::field::{normalize_attribute, Aggregate, Channel, FieldKey, FieldRef};
use super::{Components, Specification};

/// Column names of the dataset a specification is drawn against.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnTable {
    pub columns: Vec<String>,
    /// Inferred measurement type per column, when known.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub types: BTreeMap<String, String>,
}

impl ColumnTable {
    pub fn new<I, S>(columns: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ColumnTable { columns: columns.into_iter().map(Into::into).collect(), types: BTreeMap::new() }
    }

    pub fn with_types<I, S, T>(columns: I) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let (columns, types): (Vec<String>, Vec<String>) =
            columns.into_iter().map(|(c, t)| (c.into(), t.into())).unzip();
        let types = columns.iter().cloned().zip(types).collect();
        ColumnTable { columns, types }
    }

    /// Type a renderer would infer for `field` from the data alone.
    pub fn implied_type(&self, field: &FieldRef) -> Option<&str> {
        if field.time_unit.is_some() {
            return Some("temporal");
        }
        if field.aggregate.is_some() || field.bin.is_some() {
            return Some("quantitative");
        }
        self.types.get(self.resolve(&field.attribute)?).map(String::as_str)
    }

    /// Exact column spelling matching `name` case/whitespace/underscore
    /// insensitively.
    pub fn resolve(&self, name: &str) -> Option<&str> {
        let wanted = normalize_attribute(name);
        self.columns.iter().find(|c| normalize_attribute(c) == wanted).map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.resolve(name).is_some()
    }
}

/// Title a renderer shows when no explicit axis title is set.
pub fn default_axis_title(field: &FieldRef) -> String {
    match field.aggregate {
        Some(Aggregate::Count) if field.attribute.is_empty() => "Count of Records".into(),
        Some(agg) => {
            let name = agg.as_str();
            let mut chars = name.chars();
            let capitalized: String = chars.next().map(|c| c.to_ascii_uppercase()).into_iter().chain(chars).collect();
            format!("{capitalized} of {}", field.attribute)
        }
        None => field.attribute.clone(),
    }
}

pub fn canonicalize(spec: &Specification) -> Specification {
    canonicalize_with(spec, None)
}

/// Normalizes a specification so that lexical variants compare equal:
/// attribute spelling follows the column table, properties equal to the
/// default table are dropped, and fields/channels take canonical order.
pub fn canonicalize_with(spec: &Specification, columns: Option<&ColumnTable>) -> Specification {
    let mut c: Components = spec.components().clone();

    if let Some(table) = columns {
        let fix = |field: &mut FieldRef| {
            if let Some(name) = table.resolve(&field.attribute) {
                field.attribute = name.to_string();
            }
        };
        c.data_schema.fields.iter_mut().for_each(fix);
        c.encoding.entries.iter_mut().for_each(|e| fix(&mut e.field));
        for filter in &mut c.data_schema.filters {
            if let Some(name) = table.resolve(&filter.attribute) {
                filter.attribute = name.to_string();
            }
        }
    }

    let mut fields = std::mem::take(&mut c.data_schema.fields);
    fields.sort_by_key(FieldRef::key);
    let mut seen: BTreeSet<FieldKey> = BTreeSet::new();
    for field in fields {
        if seen.insert(field.key()) {
            c.data_schema.fields.push(field);
        } else {
            c.data_schema.upsert(field);
        }
    }

    let mut seen_filters = BTreeSet::new();
    c.data_schema
        .filters
        .retain(|f| seen_filters.insert((normalize_attribute(&f.attribute), f.predicate.to_string())));

    strip_defaults(&mut c);
    if let Some(table) = columns {
        strip_implied_types(&mut c, table);
    }
    Specification::rebuild_with_envelope(c, spec.envelope().clone())
}

fn strip_defaults(c: &mut Components) {
    for default in &catalog::dialect().defaults {
        let applies = match &default.when_mark {
            None => true,
            Some(mark) => c.mark_set.marks.len() == 1 && c.mark_set.marks[0].class().as_str() == mark,
        };
        if applies && c.design.properties.get(&default.path) == Some(&default.value) {
            c.design.properties.remove(&default.path);
        }
    }
    for channel in [Channel::X, Channel::Y] {
        let path = format!("axis.{channel}.title");
        let (Some(Value::String(title)), Some(field)) = (c.design.properties.get(&path), c.encoding.get(channel)) else {
            continue;
        };
        if title.eq_ignore_ascii_case(&default_axis_title(field)) {
            c.design.properties.remove(&path);
        }
    }
}

/// A declared field type equal to what the data implies carries no
/// information.
fn strip_implied_types(c: &mut Components, table: &ColumnTable) {
    for entry in &c.encoding.entries {
        let path = format!("field_type.{}", entry.channel);
        let Some(Value::String(declared)) = c.design.properties.get(&path) else { continue };
        if table.implied_type(&entry.field) == Some(declared.as_str()) {
            c.design.properties.remove(&path);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::parse_spec;
    use serde_json::json;

    #[test]
    fn average_becomes_mean() {
        let spec = parse_spec(r#"{"mark":"bar","encoding":{"y":{"field":"sales","aggregate":"average"}}}"#).unwrap();
        let canon = canonicalize(&spec);
        assert_eq!(canon.encoding().get(Channel::Y).unwrap().aggregate, Some(Aggregate::Mean));
        assert_eq!(canon.dialect_tree()["encoding"]["y"]["aggregate"], json!("mean"));
    }

    #[test]
    fn explicit_defaults_are_removed() {
        let spec = parse_spec(
            r#"{"mark":{"type":"point","filled":true},"config":{"axis":{"grid":true}},
                "encoding":{"x":{"field":"a","axis":{"title":"A"}},"y":{"field":"b","aggregate":"sum","title":"Sum of b"},
                "color":{"field":"c","legend":{"orient":"right"}}}}"#,
        )
        .unwrap();
        let canon = canonicalize(&spec);
        assert!(canon.design().is_empty(), "{:?}", canon.design());
    }

    #[test]
    fn column_table_fixes_spelling() {
        let spec = parse_spec(r#"{"mark":"bar","encoding":{"x":{"field":"release_year"}}}"#).unwrap();
        let table = ColumnTable::new(["Release Year", "Budget"]);
        let canon = canonicalize_with(&spec, Some(&table));
        assert_eq!(canon.encoding().get(Channel::X).unwrap().attribute, "Release Year");
    }

    #[test]
    fn default_titles() {
        assert_eq!(default_axis_title(&FieldRef::new("sales").with_aggregate(Aggregate::Mean)), "Mean of sales");
        assert_eq!(default_axis_title(&FieldRef::count()), "Count of Records");
        assert_eq!(default_axis_title(&FieldRef::new("region")), "region");
    }
}
