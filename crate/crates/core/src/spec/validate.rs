use std::collections::{BTreeMap, BTreeSet};

use super::catalog::{self, EXTRA_PREFIX};
use super::field::{Aggregate, FieldKey, FieldRef};
use super::{ColumnTable, SpecViolation, Specification, ViolationKind};

pub fn validate(spec: &Specification) -> Vec<SpecViolation> {
    validate_with(spec, None)
}

/// All invariant violations of `spec`. With a column table, data fields and
/// filters must also name dataset columns.
pub fn validate_with(spec: &Specification, columns: Option<&ColumnTable>) -> Vec<SpecViolation> {
    let mut out = Vec::new();
    let mut push = |path: String, kind, message: String| out.push(SpecViolation { path, kind, message });
    let c = spec.components();

    let mut keys: BTreeSet<FieldKey> = BTreeSet::new();
    for field in &c.data_schema.fields {
        let path = format!("data.field.{}", field.label());
        if let Some(message) = field_problem(field) {
            push(path.clone(), ViolationKind::TypeMismatch, message);
        }
        if !keys.insert(field.key()) {
            push(path.clone(), ViolationKind::DuplicateField, "field appears more than once in the data schema".into());
        }
        if let Some(table) = columns {
            if !field.attribute.is_empty() && !table.contains(&field.attribute) {
                push(path, ViolationKind::DanglingField, format!("`{}` is not a dataset column", field.attribute));
            }
        }
    }
    for filter in &c.data_schema.filters {
        if let Some(table) = columns {
            if !table.contains(&filter.attribute) {
                push(
                    format!("data.filter.{}", filter.attribute),
                    ViolationKind::DanglingField,
                    format!("filter on `{}` which is not a dataset column", filter.attribute),
                );
            }
        }
    }

    match c.mark_set.marks.len() {
        0 => push("mark".into(), ViolationKind::EmptyMark, "no mark type".into()),
        1 => {}
        _ => push("mark".into(), ViolationKind::UnknownProperty, "multiple marks need layering, which is not supported".into()),
    }

    let mut per_channel: BTreeMap<_, usize> = BTreeMap::new();
    for entry in &c.encoding.entries {
        *per_channel.entry(entry.channel).or_default() += 1;
        let path = format!("encoding.{}", entry.channel);
        if let Some(message) = field_problem(&entry.field) {
            push(path.clone(), ViolationKind::TypeMismatch, message);
        }
        if !keys.contains(&entry.field.key()) {
            push(
                path,
                ViolationKind::DanglingField,
                format!("`{}` is not in the data schema", entry.field.label()),
            );
        }
    }
    for (channel, count) in per_channel {
        if count > 1 {
            push(
                format!("encoding.{channel}"),
                ViolationKind::DuplicateChannel,
                format!("{count} bindings on one channel"),
            );
        }
    }

    let rejected = &catalog::dialect().top_level.rejected_by_validate;
    for (path, value) in &c.design.properties {
        if let Some(rest) = path.strip_prefix(EXTRA_PREFIX) {
            let head = rest.split(['.', '[']).next().unwrap_or_default();
            let top = &catalog::dialect().top_level;
            if !top.projected.iter().chain(&top.retained).any(|k| k == head) {
                push(path.clone(), ViolationKind::UnknownProperty, format!("`{head}` is not a dialect key"));
                continue;
            }
            if rejected.iter().any(|r| r == head) {
                push(
                    path.clone(),
                    ViolationKind::UnknownProperty,
                    format!("`{head}` composition is retained but not supported"),
                );
            }
            continue;
        }
        match catalog::design_property(path) {
            None => push(path.clone(), ViolationKind::UnknownProperty, "not a catalog design property".into()),
            Some(prop) if !prop.accepts(value) => push(
                path.clone(),
                ViolationKind::TypeMismatch,
                format!("expected {}, got {value}", prop.kind.describe()),
            ),
            Some(_) => {}
        }
    }
    out
}

fn field_problem(field: &FieldRef) -> Option<String> {
    if field.attribute.trim().is_empty() && field.aggregate != Some(Aggregate::Count) {
        return Some("empty attribute requires the count aggregate".into());
    }
    if field.bin.is_some() && field.time_unit.is_some() {
        return Some("bin and time unit are mutually exclusive".into());
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{parse_spec, Channel, Components, EncodingEntry, Mark};
    use serde_json::json;

    fn bar() -> Specification {
        parse_spec(r#"{"mark":"bar","encoding":{"x":{"field":"region"},"y":{"field":"sales","aggregate":"mean"}}}"#).unwrap()
    }

    #[test]
    fn well_formed_fixture_has_no_violations() {
        assert_eq!(validate(&bar()), vec![]);
    }

    #[test]
    fn dangling_encoding_field() {
        let mut c = bar().into_components();
        c.data_schema.fields.retain(|f| f.attribute != "region");
        let kinds: Vec<_> = validate(&Specification::from_components(c)).into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::DanglingField]);
    }

    #[test]
    fn duplicate_channel_detected() {
        let mut c = bar().into_components();
        c.data_schema.fields.push(FieldRef::new("profit"));
        c.encoding.entries.push(EncodingEntry { field: FieldRef::new("profit"), channel: Channel::X });
        let violations = validate(&Specification::from_components(c));
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].kind, ViolationKind::DuplicateChannel);
        assert_eq!(violations[0].path, "encoding.x");
    }

    #[test]
    fn design_type_mismatch_and_unknown_path() {
        let mut c = Components::default();
        c.mark_set.marks.push(Mark::Bar);
        c.design.properties.insert("legend.orient".into(), json!("sideways"));
        c.design.properties.insert("axis.z.title".into(), json!("?"));
        let kinds: Vec<_> = validate(&Specification::from_components(c)).into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::UnknownProperty, ViolationKind::TypeMismatch]);
    }

    #[test]
    fn filters_checked_against_columns() {
        let spec = parse_spec(
            r#"{"mark":"bar","encoding":{"x":{"field":"region"}},"transform":[{"filter":{"field":"yr","equal":1}}]}"#,
        )
        .unwrap();
        let table = ColumnTable::new(["Region", "Year"]);
        let violations = validate_with(&spec, Some(&table));
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].path, "data.filter.yr");
    }
}
