//! Projection of a dialect tree into the four components.
//!
//! Every leaf of the tree (outside the envelope keys) is claimed by exactly
//! one component. Leaves the catalog does not know land in the design set
//! under `extra.<source path>`.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{Map, Value};

use super::catalog::{self, FALLBACK_PREFIX};
use super::field::{parse_bin, Aggregate, Channel, FieldKey, FieldRef, Mark, Sort, TimeUnit};
use super::{Components, Filter, ParseWarning, SpecError};

/// Records which component claimed a tree leaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafClaim {
    /// Dotted source path in the tree; array elements of `transform` are
    /// addressed as `transform[i]`.
    pub source: String,
    /// `data.fields`, `data.filters`, `mark`, `encoding.<channel>`, or a
    /// design path (possibly `extra.`-prefixed).
    pub target: String,
}

pub fn project_components(tree: &Value) -> Result<Components, SpecError> {
    project_with_warnings(tree).map(|(c, _)| c)
}

pub fn project_components_traced(tree: &Value) -> Result<(Components, Vec<LeafClaim>), SpecError> {
    let projector = run(tree)?;
    Ok((projector.components, projector.claims))
}

pub(crate) fn project_with_warnings(tree: &Value) -> Result<(Components, Vec<ParseWarning>), SpecError> {
    let projector = run(tree)?;
    Ok((projector.components, projector.warnings))
}

pub(crate) fn envelope_of(root: &Map<String, Value>) -> BTreeMap<String, Value> {
    let envelope = &catalog::dialect().top_level.envelope;
    root.iter()
        .filter(|(k, _)| envelope.contains(k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

/// Leaves of `value` under `prefix`: scalars, arrays and empty objects.
pub(crate) fn leaves<'a>(prefix: &str, value: &'a Value, out: &mut Vec<(String, &'a Value)>) {
    match value {
        Value::Object(map) if !map.is_empty() => {
            for (k, v) in map {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                leaves(&path, v, out);
            }
        }
        _ => out.push((prefix.to_string(), value)),
    }
}

#[derive(Default)]
struct Projector {
    components: Components,
    claims: Vec<LeafClaim>,
    warnings: Vec<ParseWarning>,
}

struct ChannelDef<'a> {
    channel: Channel,
    field: FieldRef,
    def: &'a Map<String, Value>,
    aggregate_claimed: bool,
    bin_claimed: bool,
    time_unit_claimed: bool,
}

fn run(tree: &Value) -> Result<Projector, SpecError> {
    let Value::Object(root) = tree else {
        return Err(SpecError::NotAnObject);
    };
    let top = &catalog::dialect().top_level;
    for key in root.keys() {
        let known = top.envelope.contains(key) || top.projected.contains(key) || top.retained.contains(key);
        if !known {
            return Err(SpecError::Unsupported {
                path: key.clone(),
                reason: "not part of the supported dialect subset".into(),
            });
        }
    }

    let mut p = Projector::default();
    if let Some(encoding) = root.get("encoding") {
        p.encoding(encoding);
    }
    if let Some(mark) = root.get("mark") {
        p.mark(mark)?;
    }
    if let Some(title) = root.get("title") {
        p.title(title);
    }
    for key in ["width", "height", "background", "config"] {
        if let Some(value) = root.get(key) {
            p.generic(key, value);
        }
    }
    if let Some(transform) = root.get("transform") {
        p.transform(transform);
    }
    if let Some(usermeta) = root.get("usermeta") {
        p.usermeta(usermeta);
    }
    for key in &top.retained {
        if let Some(value) = root.get(key) {
            p.warnings.push(ParseWarning {
                path: key.clone(),
                message: "construct retained opaquely; not projected".into(),
            });
            p.extra_walk(key, value);
        }
    }
    Ok(p)
}

impl Projector {
    fn claim(&mut self, source: impl Into<String>, target: impl Into<String>) {
        self.claims.push(LeafClaim { source: source.into(), target: target.into() });
    }

    fn claim_design(&mut self, source: &str, path: &str, value: &Value) -> bool {
        if self.components.design.properties.contains_key(path) {
            return false;
        }
        self.components.design.properties.insert(path.to_string(), value.clone());
        self.claim(source, path);
        true
    }

    fn extra(&mut self, source: &str, value: &Value) {
        let path = format!("{}{source}", catalog::EXTRA_PREFIX);
        self.components.design.properties.insert(path.clone(), value.clone());
        self.claim(source, path);
    }

    fn extra_walk(&mut self, prefix: &str, value: &Value) {
        let mut out = Vec::new();
        leaves(prefix, value, &mut out);
        for (path, leaf) in out {
            self.extra(&path, leaf);
        }
    }

    /// Catalog property at an absolute location, else an extra.
    fn generic(&mut self, prefix: &str, value: &Value) {
        let mut out = Vec::new();
        leaves(prefix, value, &mut out);
        for (path, leaf) in out {
            let claimed = match catalog::absolute_property(&path) {
                Some(prop) if prop.accepts(leaf) => self.claim_design(&path, &prop.path, leaf),
                _ => false,
            };
            if !claimed {
                self.extra(&path, leaf);
            }
        }
    }

    fn encoding(&mut self, encoding: &Value) {
        let Value::Object(map) = encoding else {
            self.extra("encoding", encoding);
            return;
        };
        let mut defs = Vec::new();
        for channel in Channel::ALL {
            let Some(def) = map.get(channel.as_str()) else { continue };
            match def.as_object().and_then(|d| channel_field(channel, d)) {
                Some(parsed) => defs.push(parsed),
                None => self.extra_walk(&format!("encoding.{channel}"), def),
            }
        }
        for (name, def) in map {
            if Channel::parse(name).is_none() {
                self.warnings.push(ParseWarning {
                    path: format!("encoding.{name}"),
                    message: "channel outside the supported set; kept as extra".into(),
                });
                self.extra_walk(&format!("encoding.{name}"), def);
            }
        }

        let present: Vec<Channel> = defs.iter().map(|d| d.channel).collect();
        let mut sorted_keys: BTreeSet<FieldKey> = BTreeSet::new();
        for def in &defs {
            let key = def.field.key();
            let first_for_key = sorted_keys.insert(key.clone());
            let sort = def
                .def
                .get("sort")
                .and_then(Value::as_str)
                .and_then(Sort::parse)
                .filter(|_| first_for_key);
            let mut data_field = def.field.clone();
            data_field.sort = sort;
            if !self.components.data_schema.contains(&key) {
                self.components.data_schema.fields.push(data_field);
            }
            self.components.encoding.bind(def.channel, def.field.clone());

            let ch = def.channel;
            let def_value = Value::Object(def.def.clone());
            let mut out = Vec::new();
            leaves("", &def_value, &mut out);
            for (rel, leaf) in out {
                let source = format!("encoding.{ch}.{rel}");
                let target = format!("encoding.{ch}");
                let claimed = match rel.as_str() {
                    "field" => true,
                    "aggregate" => def.aggregate_claimed,
                    "bin" | "bin.maxbins" => def.bin_claimed,
                    "timeUnit" => def.time_unit_claimed,
                    "sort" => {
                        if sort.is_some() {
                            self.claim(&source, "data.fields");
                            continue;
                        }
                        false
                    }
                    _ => {
                        let design = catalog::channel_property(ch, &rel)
                            .filter(|(prop, _)| prop.binding_channel(&present) == Some(ch) && prop.accepts(leaf));
                        match design {
                            Some((prop, _)) => {
                                if self.claim_design(&source, &prop.path, leaf) {
                                    continue;
                                }
                                false
                            }
                            None => false,
                        }
                    }
                };
                if claimed {
                    self.claim(&source, &target);
                } else {
                    self.extra(&source, leaf);
                }
            }
        }
    }

    fn mark(&mut self, mark: &Value) -> Result<(), SpecError> {
        let unsupported = |path: &str, what: &Value| SpecError::Unsupported {
            path: path.into(),
            reason: format!("mark `{what}` is not in the supported mark set"),
        };
        match mark {
            Value::String(name) => {
                let m = Mark::parse(name).ok_or_else(|| unsupported("mark", mark))?;
                self.components.mark_set.marks.push(m);
                self.claim("mark", "mark");
            }
            Value::Object(map) => {
                let ty = map.get("type").ok_or_else(|| SpecError::Unsupported {
                    path: "mark.type".into(),
                    reason: "mark definition without a type".into(),
                })?;
                let m = ty.as_str().and_then(Mark::parse).ok_or_else(|| unsupported("mark.type", ty))?;
                self.components.mark_set.marks.push(m);
                self.claim("mark.type", "mark");
                let rest: Map<String, Value> = map.iter().filter(|(k, _)| *k != "type").map(|(k, v)| (k.clone(), v.clone())).collect();
                if !rest.is_empty() {
                    self.generic("mark", &Value::Object(rest));
                }
            }
            other => return Err(unsupported("mark", other)),
        }
        Ok(())
    }

    fn title(&mut self, title: &Value) {
        match title {
            Value::String(_) => {
                self.claim_design("title", "title.text", title);
            }
            Value::Object(_) => self.generic("title", title),
            other => self.extra("title", other),
        }
    }

    fn transform(&mut self, transform: &Value) {
        let Value::Array(items) = transform else {
            self.extra("transform", transform);
            return;
        };
        let mut rest = Vec::new();
        for (i, item) in items.iter().enumerate() {
            let source = format!("transform[{i}]");
            match field_filter(item) {
                Some(filter) => {
                    self.components.data_schema.filters.push(filter);
                    self.claim(source, "data.filters");
                }
                None => {
                    rest.push(item.clone());
                    self.claim(source, "extra.transform");
                }
            }
        }
        if !rest.is_empty() {
            self.components.design.properties.insert("extra.transform".into(), Value::Array(rest));
        }
    }

    fn usermeta(&mut self, usermeta: &Value) {
        let Value::Object(map) = usermeta else {
            self.extra("usermeta", usermeta);
            return;
        };
        for (key, value) in map {
            let source = format!("usermeta.{key}");
            match key.as_str() {
                "selectedFields" => match selected_fields(value) {
                    Some(fields) => {
                        for field in fields {
                            self.components.data_schema.upsert(field);
                        }
                        self.claim(source, "data.fields");
                    }
                    None => self.extra(&source, value),
                },
                "extraMarks" => match extra_marks(value) {
                    Some(marks) => {
                        self.components.mark_set.marks.extend(marks);
                        self.claim(source, "mark");
                    }
                    None => self.extra(&source, value),
                },
                "design" => {
                    let mut out = Vec::new();
                    leaves(&source, value, &mut out);
                    for (path, leaf) in out {
                        let design_path = path.strip_prefix(FALLBACK_PREFIX).and_then(|p| p.strip_prefix('.'));
                        let claimed = match design_path.and_then(catalog::design_property) {
                            Some(prop) if prop.accepts(leaf) => self.claim_design(&path, &prop.path, leaf),
                            _ => false,
                        };
                        if !claimed {
                            self.extra(&path, leaf);
                        }
                    }
                }
                _ => self.extra_walk(&source, value),
            }
        }
    }
}

fn channel_field(channel: Channel, def: &Map<String, Value>) -> Option<ChannelDef<'_>> {
    let aggregate = def.get("aggregate").and_then(Value::as_str).and_then(Aggregate::resolve);
    let attribute = match def.get("field") {
        Some(Value::String(s)) => {
            if s.trim() == "*" {
                String::new()
            } else {
                s.clone()
            }
        }
        Some(_) => return None,
        None if aggregate == Some(Some(Aggregate::Count)) => String::new(),
        None => return None,
    };
    if attribute.trim().is_empty() && aggregate != Some(Some(Aggregate::Count)) {
        return None;
    }
    let mut field = FieldRef::new(attribute);
    field.aggregate = aggregate.flatten();
    let bin_claimed = match def.get("bin") {
        None => false,
        Some(Value::Bool(false)) | Some(Value::Null) => true,
        Some(value) => match parse_bin(value) {
            Some(bin) => {
                field.bin = Some(bin);
                true
            }
            None => false,
        },
    };
    let time_unit = def.get("timeUnit").and_then(Value::as_str).and_then(TimeUnit::parse);
    let time_unit_claimed = time_unit.is_some() && field.bin.is_none();
    if time_unit_claimed {
        field.time_unit = time_unit;
    }
    Some(ChannelDef {
        channel,
        field,
        def,
        aggregate_claimed: aggregate.is_some(),
        bin_claimed,
        time_unit_claimed,
    })
}

fn field_filter(item: &Value) -> Option<Filter> {
    let filter = item.as_object()?;
    if filter.len() != 1 {
        return None;
    }
    let predicate = filter.get("filter")?.as_object()?;
    let attribute = predicate.get("field")?.as_str()?;
    let rest: Map<String, Value> = predicate.iter().filter(|(k, _)| *k != "field").map(|(k, v)| (k.clone(), v.clone())).collect();
    if rest.is_empty() || attribute.is_empty() {
        return None;
    }
    Some(Filter { attribute: attribute.to_string(), predicate: Value::Object(rest) })
}

fn selected_fields(value: &Value) -> Option<Vec<FieldRef>> {
    let items = value.as_array()?;
    if items.is_empty() {
        return None;
    }
    items.iter().map(|item| serde_json::from_value(item.clone()).ok()).collect()
}

fn extra_marks(value: &Value) -> Option<Vec<Mark>> {
    let items = value.as_array()?;
    if items.is_empty() {
        return None;
    }
    items.iter().map(|item| item.as_str().and_then(Mark::parse)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn mark_only_tree_projects_to_mark_only() {
        let components = project_components(&json!({"mark": "bar"})).unwrap();
        assert!(components.data_schema.is_empty());
        assert_eq!(components.mark_set.marks, vec![Mark::Bar]);
        assert!(components.encoding.is_empty());
        assert!(components.design.is_empty());
    }

    #[test]
    fn unknown_leaves_become_extras() {
        let tree = json!({"mark": {"type": "bar", "cornerRadius": 4},
            "encoding": {"x": {"field": "a", "axis": {"tickCount": 5, "title": "A"}}}});
        let c = project_components(&tree).unwrap();
        assert_eq!(c.design.get("extra.mark.cornerRadius"), Some(&json!(4)));
        assert_eq!(c.design.get("extra.encoding.x.axis.tickCount"), Some(&json!(5)));
        assert_eq!(c.design.get("axis.x.title"), Some(&json!("A")));
    }

    #[test]
    fn facet_channels_are_encodings() {
        let tree = json!({"mark": "bar", "encoding": {
            "x": {"field": "a"}, "y": {"field": "b", "aggregate": "sum"},
            "column": {"field": "c"}}});
        let c = project_components(&tree).unwrap();
        assert_eq!(c.encoding.get(Channel::Column).map(FieldRef::label), Some("c".into()));
        assert!(c.design.properties.keys().all(|k| !k.contains("column")));
    }

    #[test]
    fn sort_belongs_to_the_first_binding_channel() {
        let tree = json!({"mark": "bar", "encoding": {
            "x": {"field": "genre", "sort": "-y"},
            "tooltip": {"field": "genre", "sort": "ascending"}}});
        let c = project_components(&tree).unwrap();
        assert_eq!(c.data_schema.fields.len(), 1);
        assert_eq!(c.data_schema.fields[0].sort, Some(Sort::ByChannel { channel: Channel::Y, descending: true }));
        assert_eq!(c.design.get("extra.encoding.tooltip.sort"), Some(&json!("ascending")));
    }

    #[test]
    fn filters_and_other_transforms_split() {
        let tree = json!({"mark": "bar", "transform": [
            {"filter": {"field": "year", "equal": 2019}},
            {"calculate": "datum.a * 2", "as": "b"}]});
        let c = project_components(&tree).unwrap();
        assert_eq!(c.data_schema.filters, vec![Filter { attribute: "year".into(), predicate: json!({"equal": 2019}) }]);
        assert_eq!(c.design.get("extra.transform"), Some(&json!([{"calculate": "datum.a * 2", "as": "b"}])));
    }
}
