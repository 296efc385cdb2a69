use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

use crate::spec::{canonicalize, normalize_attribute, Channel, FieldKey, FieldRef, Filter, Specification};

use super::{Arrangement, Axis, MarkStyle, OperationPlan, SpecOperation, Transform};

/// Plan that turns `before` into `canonicalize(after)`.
///
/// Both inputs are expected to be valid specifications. Design changes are
/// expressed with `Edit`/`Delete`; data, mark and encoding changes with the
/// typed creative operations. Operations come in a fixed order: removals
/// first (design, encoding, data fields, filters), then mark, data
/// additions, filters, bindings and finally design edits.
pub fn diff_to_plan(before: &Specification, after: &Specification) -> OperationPlan {
    let target = canonicalize(after);
    let b = before.components();
    let t = target.components();
    let mut ops = Vec::new();

    for path in b.design.properties.keys() {
        if !t.design.properties.contains_key(path) {
            ops.push(SpecOperation::Delete { path: path.clone() });
        }
    }

    let target_binding: BTreeMap<Channel, FieldKey> = t.encoding.entries.iter().map(|e| (e.channel, e.field.key())).collect();
    let mut kept_channels = BTreeSet::new();
    for entry in &b.encoding.entries {
        if target_binding.get(&entry.channel) == Some(&entry.field.key()) {
            kept_channels.insert(entry.channel);
        } else {
            ops.push(SpecOperation::Delete { path: format!("encoding.{}", entry.channel) });
        }
    }

    let target_fields: BTreeMap<FieldKey, &FieldRef> = t.data_schema.fields.iter().map(|f| (f.key(), f)).collect();
    let mut before_fields: BTreeMap<FieldKey, &FieldRef> = BTreeMap::new();
    for field in &b.data_schema.fields {
        before_fields.entry(field.key()).or_insert(field);
    }
    for (key, field) in &before_fields {
        if !target_fields.contains_key(key) {
            ops.push(SpecOperation::Delete { path: format!("data.field.{}", field.label()) });
        }
    }

    let before_filters = filters_by_attribute(&b.data_schema.filters);
    let target_filters = filters_by_attribute(&t.data_schema.filters);
    let mut filter_adds = Vec::new();
    let attributes: BTreeSet<&String> = before_filters.keys().chain(target_filters.keys()).collect();
    for attribute in attributes {
        let old = before_filters.get(attribute);
        let new = target_filters.get(attribute);
        if old.map(|v| sorted_predicates(v)) == new.map(|v| sorted_predicates(v)) {
            continue;
        }
        if let Some(old) = old {
            ops.push(SpecOperation::Delete { path: format!("data.filter.{}", old[0].attribute) });
        }
        if let Some(new) = new {
            filter_adds.extend(new.iter().copied());
        }
    }

    let before_marks: BTreeSet<_> = b.mark_set.marks.iter().copied().collect();
    let target_marks: BTreeSet<_> = t.mark_set.marks.iter().copied().collect();
    if before_marks != target_marks {
        match t.mark_set.marks.first() {
            Some(mark) => ops.push(SpecOperation::SetMarkType { mark: *mark }),
            None => ops.push(SpecOperation::Delete { path: "mark".into() }),
        }
    }

    let mut added = Vec::new();
    let mut resorted = Vec::new();
    for field in &t.data_schema.fields {
        match before_fields.get(&field.key()) {
            None => added.push(field.clone()),
            Some(old) if old.sort != field.sort => resorted.push(field),
            Some(_) => {}
        }
    }
    if !added.is_empty() {
        ops.push(SpecOperation::SelectData { fields: added });
    }
    for field in resorted {
        ops.push(SpecOperation::TransformData {
            field: field.without_sort(),
            transform: Transform::Sort { order: field.sort },
        });
    }

    for filter in filter_adds {
        ops.push(SpecOperation::TransformData {
            field: FieldRef::new(filter.attribute.clone()),
            transform: Transform::Filter { predicate: filter.predicate.clone() },
        });
    }

    let mut entries: Vec<_> = t.encoding.entries.iter().filter(|e| !kept_channels.contains(&e.channel)).collect();
    entries.sort_by_key(|e| e.channel);
    for entry in entries {
        ops.push(bind_op(entry.channel, entry.field.without_sort()));
    }

    for (path, value) in &t.design.properties {
        if b.design.properties.get(path) != Some(value) {
            ops.push(SpecOperation::Edit { path: path.clone(), value: value.clone() });
        }
    }

    OperationPlan::new(ops)
}

fn bind_op(channel: Channel, field: FieldRef) -> SpecOperation {
    match channel {
        Channel::X => SpecOperation::BindCoordinate { axis: Axis::X, field },
        Channel::Y => SpecOperation::BindCoordinate { axis: Axis::Y, field },
        Channel::Theta => SpecOperation::BindCoordinate { axis: Axis::Theta, field },
        Channel::Color | Channel::Size | Channel::Shape | Channel::Opacity => {
            SpecOperation::SetMarkStyle(MarkStyle::Encoding { field, channel })
        }
        Channel::Column => SpecOperation::Layout { arrangement: Arrangement::FacetColumn, field: Some(field) },
        Channel::Row => SpecOperation::Layout { arrangement: Arrangement::FacetRow, field: Some(field) },
        Channel::Facet => SpecOperation::Layout { arrangement: Arrangement::Grid, field: Some(field) },
        Channel::Text | Channel::Tooltip => SpecOperation::Edit {
            path: format!("encoding.{channel}"),
            value: serde_json::to_value(&field).expect("field serializes"),
        },
    }
}

fn filters_by_attribute(filters: &[Filter]) -> BTreeMap<String, Vec<&Filter>> {
    let mut out: BTreeMap<String, Vec<&Filter>> = BTreeMap::new();
    for filter in filters {
        out.entry(normalize_attribute(&filter.attribute)).or_default().push(filter);
    }
    out
}

fn sorted_predicates(filters: &[&Filter]) -> Vec<String> {
    let mut v: Vec<String> = filters.iter().map(|f| Value::to_string(&f.predicate)).collect();
    v.sort();
    v.dedup();
    v
}
