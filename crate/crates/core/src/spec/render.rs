use std::collections::{BTreeMap, BTreeSet};

use serde_json::{Map, Value};

use super::catalog::{self, Location, EXTRA_PREFIX, FALLBACK_PREFIX};
use super::field::{Channel, FieldKey};
use super::Components;

/// Renders components (plus envelope keys) into a dialect tree.
pub(crate) fn render(c: &Components, envelope: &BTreeMap<String, Value>) -> Value {
    let mut root: Map<String, Value> = envelope.iter().map(|(k, v)| (k.clone(), v.clone())).collect();

    let mut entries: Vec<_> = c.encoding.entries.iter().collect();
    entries.sort_by_key(|e| e.channel);
    let present: Vec<Channel> = entries.iter().map(|e| e.channel).collect();
    let mut sorted: BTreeSet<FieldKey> = BTreeSet::new();
    let mut encoding = Map::new();
    for entry in &entries {
        let mut def = entry.field.to_channel_def();
        let key = entry.field.key();
        if sorted.insert(key.clone()) {
            if let Some(sort) = c.data_schema.find(&key).and_then(|f| f.sort) {
                def.insert("sort".into(), Value::String(sort.to_string()));
            }
        }
        encoding.insert(entry.channel.as_str().into(), Value::Object(def));
    }
    if !encoding.is_empty() {
        root.insert("encoding".into(), Value::Object(encoding));
    }

    if let Some(first) = c.mark_set.marks.first() {
        root.insert("mark".into(), Value::String(first.as_str().into()));
    }
    if c.mark_set.marks.len() > 1 {
        let rest = c.mark_set.marks[1..].iter().map(|m| Value::String(m.as_str().into())).collect();
        set_path(&mut root, "usermeta.extraMarks", Value::Array(rest));
    }

    let filters: Vec<Value> = c
        .data_schema
        .filters
        .iter()
        .map(|f| {
            let mut predicate = Map::new();
            predicate.insert("field".into(), Value::String(f.attribute.clone()));
            if let Value::Object(p) = &f.predicate {
                predicate.extend(p.iter().map(|(k, v)| (k.clone(), v.clone())));
            }
            let mut item = Map::new();
            item.insert("filter".into(), Value::Object(predicate));
            Value::Object(item)
        })
        .collect();
    if !filters.is_empty() {
        root.insert("transform".into(), Value::Array(filters));
    }

    let bound: BTreeSet<FieldKey> = entries.iter().map(|e| e.field.key()).collect();
    let unbound: Vec<Value> = c
        .data_schema
        .fields
        .iter()
        .filter(|f| !bound.contains(&f.key()))
        .map(|f| serde_json::to_value(f).expect("field serializes"))
        .collect();
    if !unbound.is_empty() {
        set_path(&mut root, "usermeta.selectedFields", Value::Array(unbound));
    }

    let has_mark = !c.mark_set.marks.is_empty();
    for (path, value) in &c.design.properties {
        if path.starts_with(EXTRA_PREFIX) {
            continue;
        }
        let Some(prop) = catalog::design_property(path) else { continue };
        let fallback = format!("{FALLBACK_PREFIX}.{path}");
        let target = match &prop.location {
            Location::Absolute(loc) if loc.starts_with("mark.") && !has_mark => fallback,
            Location::Absolute(loc) => loc.to_string(),
            Location::Channel { rel, .. } => match prop.binding_channel(&present) {
                Some(ch) => format!("encoding.{ch}.{rel}"),
                None => fallback,
            },
        };
        if target.starts_with("mark.") {
            expand_mark(&mut root);
        }
        set_path(&mut root, &target, value.clone());
    }

    for (path, value) in &c.design.properties {
        let Some(rest) = path.strip_prefix(EXTRA_PREFIX) else { continue };
        if rest == "transform" {
            match (root.get_mut("transform"), value) {
                (Some(Value::Array(items)), Value::Array(extra)) => items.extend(extra.iter().cloned()),
                (None, _) => {
                    root.insert("transform".into(), value.clone());
                }
                _ => {}
            }
            continue;
        }
        if rest.starts_with("mark.") {
            if !has_mark {
                continue;
            }
            expand_mark(&mut root);
        }
        if rest.starts_with("title.") {
            expand_title(&mut root);
        }
        set_path(&mut root, rest, value.clone());
    }

    if let Some(Value::Object(title)) = root.get("title") {
        if title.len() == 1 {
            if let Some(text @ Value::String(_)) = title.get("text") {
                let text = text.clone();
                root.insert("title".into(), text);
            }
        }
    }
    Value::Object(root)
}

fn expand_mark(root: &mut Map<String, Value>) {
    if let Some(Value::String(name)) = root.get("mark") {
        let mut obj = Map::new();
        obj.insert("type".into(), Value::String(name.clone()));
        root.insert("mark".into(), Value::Object(obj));
    }
}

fn expand_title(root: &mut Map<String, Value>) {
    if let Some(Value::String(text)) = root.get("title") {
        let mut obj = Map::new();
        obj.insert("text".into(), Value::String(text.clone()));
        root.insert("title".into(), Value::Object(obj));
    }
}

/// Sets a dotted path, creating intermediate objects. Leaves existing
/// values untouched and returns false on any conflict.
pub(crate) fn set_path(root: &mut Map<String, Value>, path: &str, value: Value) -> bool {
    let mut segments: Vec<&str> = path.split('.').collect();
    let Some(last) = segments.pop() else { return false };
    let mut node = root;
    for seg in segments {
        let next = node.entry(seg.to_string()).or_insert_with(|| Value::Object(Map::new()));
        match next {
            Value::Object(map) => node = map,
            _ => return false,
        }
    }
    if node.contains_key(last) {
        return false;
    }
    node.insert(last.to_string(), value);
    true
}
