//! Chart specification model.
//!
//! A [`Specification`] pairs the four-component abstraction (data schema,
//! marks, encodings, design) with the concrete dialect tree it was
//! projected from. The dialect is a Vega-Lite compatible JSON subset.
//! Parsing keeps the tree verbatim; every component-level change renders
//! a fresh tree and re-projects it, so the two views never drift apart.

pub mod catalog;
mod canonical;
pub mod field;
mod project;
mod render;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use canonical::{canonicalize, canonicalize_with, default_axis_title, ColumnTable};
pub use field::{normalize_attribute, Aggregate, Bin, Channel, FieldKey, FieldRef, Mark, Sort, TimeUnit};
pub use project::{project_components, project_components_traced, LeafClaim};
pub use validate::{validate, validate_with};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Filter {
    pub attribute: String,
    /// Predicate object without its `field` key, e.g. `{"equal": "Pop"}`.
    pub predicate: Value,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataSchema {
    pub fields: Vec<FieldRef>,
    pub filters: Vec<Filter>,
}

impl DataSchema {
    pub fn is_empty(&self) -> bool {
        self.fields.is_empty() && self.filters.is_empty()
    }

    pub fn find(&self, key: &FieldKey) -> Option<&FieldRef> {
        self.fields.iter().find(|f| &f.key() == key)
    }

    pub fn contains(&self, key: &FieldKey) -> bool {
        self.find(key).is_some()
    }

    /// Inserts `field`, replacing the sort of an existing field with the
    /// same identity. Returns true when the schema changed.
    pub fn upsert(&mut self, field: FieldRef) -> bool {
        let key = field.key();
        match self.fields.iter_mut().find(|f| f.key() == key) {
            Some(existing) if *existing == field => false,
            Some(existing) => {
                if field.sort.is_some() || existing.sort.is_none() {
                    *existing = field;
                    true
                } else {
                    false
                }
            }
            None => {
                self.fields.push(field);
                true
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarkSet {
    pub marks: Vec<Mark>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingEntry {
    pub field: FieldRef,
    pub channel: Channel,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EncodingMap {
    pub entries: Vec<EncodingEntry>,
}

impl EncodingMap {
    pub fn get(&self, channel: Channel) -> Option<&FieldRef> {
        self.entries.iter().find(|e| e.channel == channel).map(|e| &e.field)
    }

    pub fn channels(&self) -> Vec<Channel> {
        self.entries.iter().map(|e| e.channel).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Binds `field` to `channel`, returning the previous binding.
    pub fn bind(&mut self, channel: Channel, field: FieldRef) -> Option<FieldRef> {
        let field = field.without_sort();
        match self.entries.iter_mut().find(|e| e.channel == channel) {
            Some(entry) => Some(std::mem::replace(&mut entry.field, field)),
            None => {
                self.entries.push(EncodingEntry { field, channel });
                None
            }
        }
    }

    pub fn unbind(&mut self, channel: Channel) -> Option<FieldRef> {
        let idx = self.entries.iter().position(|e| e.channel == channel)?;
        Some(self.entries.remove(idx).field)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DesignSet {
    /// Dotted property path to value. Paths come from the design catalog or
    /// carry the `extra.` prefix for dialect leaves outside the catalog.
    pub properties: BTreeMap<String, Value>,
}

impl DesignSet {
    pub fn get(&self, path: &str) -> Option<&Value> {
        self.properties.get(path)
    }

    pub fn is_empty(&self) -> bool {
        self.properties.is_empty()
    }
}

/// The four components of a chart.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Components {
    pub data_schema: DataSchema,
    pub mark_set: MarkSet,
    pub encoding: EncodingMap,
    pub design: DesignSet,
}

impl Components {
    pub fn is_empty(&self) -> bool {
        self.data_schema.is_empty() && self.mark_set.marks.is_empty() && self.encoding.is_empty() && self.design.is_empty()
    }

    /// Order-insensitive equality of all four components. Repeated filters
    /// count once.
    pub fn equivalent(&self, other: &Components) -> bool {
        fn fields(c: &Components) -> BTreeSet<(FieldKey, Option<Sort>)> {
            c.data_schema.fields.iter().map(|f| (f.key(), f.sort)).collect()
        }
        fn filters(c: &Components) -> BTreeSet<(String, String)> {
            c.data_schema.filters.iter().map(|f| (normalize_attribute(&f.attribute), f.predicate.to_string())).collect()
        }
        fn marks(c: &Components) -> BTreeSet<Mark> {
            c.mark_set.marks.iter().copied().collect()
        }
        fn encoding(c: &Components) -> Vec<(Channel, FieldKey)> {
            let mut v: Vec<_> = c.encoding.entries.iter().map(|e| (e.channel, e.field.key())).collect();
            v.sort();
            v
        }
        fields(self) == fields(other)
            && filters(self) == filters(other)
            && marks(self) == marks(other)
            && encoding(self) == encoding(other)
            && self.design == other.design
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    UnknownProperty,
    TypeMismatch,
    DanglingField,
    DuplicateChannel,
    DuplicateField,
    EmptyMark,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecViolation {
    pub path: String,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for SpecViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at `{}`: {}", self.kind, self.path, self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("malformed document at line {line}, column {column}: {message}")]
    Malformed { line: usize, column: usize, message: String },
    #[error("document root must be an object")]
    NotAnObject,
    #[error("unsupported construct at `{path}`: {reason}")]
    Unsupported { path: String, reason: String },
    #[error("empty_mark: document has no mark")]
    EmptyMark,
    #[error("specification has {} violation(s): {}", .0.len(), join_violations(.0))]
    Invalid(Vec<SpecViolation>),
}

fn join_violations(violations: &[SpecViolation]) -> String {
    violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Non-fatal observation made while parsing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Specification {
    components: Components,
    envelope: BTreeMap<String, Value>,
    tree: Value,
}

impl Specification {
    pub fn empty() -> Self {
        Specification::from_components(Components::default())
    }

    /// Builds a specification from components as given, rendering its tree.
    /// Components are not normalized, so the result may fail [`validate`].
    pub fn from_components(components: Components) -> Self {
        Specification::with_envelope(components, BTreeMap::new())
    }

    fn with_envelope(components: Components, envelope: BTreeMap<String, Value>) -> Self {
        let tree = render::render(&components, &envelope);
        Specification { components, envelope, tree }
    }

    /// Renders `components` and re-projects the tree, yielding the
    /// normalized form (canonical ordering, deduplicated fields).
    pub fn rebuild(components: Components) -> Self {
        Specification::rebuild_with_envelope(components, BTreeMap::new())
    }

    pub(crate) fn rebuild_with_envelope(components: Components, envelope: BTreeMap<String, Value>) -> Self {
        let tree = render::render(&components, &envelope);
        match project::project_components(&tree) {
            Ok(projected) => Specification::with_envelope(projected, envelope),
            Err(_) => Specification { components, envelope, tree },
        }
    }

    /// Same envelope (data source, schema url), new components.
    pub fn replace_components(&self, components: Components) -> Self {
        Specification::rebuild_with_envelope(components, self.envelope.clone())
    }

    pub fn components(&self) -> &Components {
        &self.components
    }

    pub fn into_components(self) -> Components {
        self.components
    }

    pub fn data_schema(&self) -> &DataSchema {
        &self.components.data_schema
    }

    pub fn mark_set(&self) -> &MarkSet {
        &self.components.mark_set
    }

    pub fn encoding(&self) -> &EncodingMap {
        &self.components.encoding
    }

    pub fn design(&self) -> &DesignSet {
        &self.components.design
    }

    pub fn dialect_tree(&self) -> &Value {
        &self.tree
    }

    pub fn envelope(&self) -> &BTreeMap<String, Value> {
        &self.envelope
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Hex SHA-256 of the compact dialect tree. Stable across runs.
    pub fn digest(&self) -> String {
        crate::digest::sha256_hex(serde_json::to_string(&self.tree).expect("tree serializes").as_bytes())
    }
}

impl Default for Specification {
    fn default() -> Self {
        Specification::empty()
    }
}

/// Parses a dialect document.
pub fn parse_spec(text: &str) -> Result<Specification, SpecError> {
    parse_spec_with_warnings(text).map(|(spec, _)| spec)
}

pub fn parse_spec_with_warnings(text: &str) -> Result<(Specification, Vec<ParseWarning>), SpecError> {
    let tree: Value = serde_json::from_str(text).map_err(|e| SpecError::Malformed {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    spec_from_tree(tree)
}

pub fn spec_from_tree(tree: Value) -> Result<(Specification, Vec<ParseWarning>), SpecError> {
    let Value::Object(root) = &tree else {
        return Err(SpecError::NotAnObject);
    };
    let (components, warnings) = project::project_with_warnings(&tree)?;
    let retained_composite = root.keys().any(|k| catalog::dialect().top_level.rejected_by_validate.contains(k));
    if components.mark_set.marks.is_empty() && !retained_composite {
        return Err(SpecError::EmptyMark);
    }
    let envelope = project::envelope_of(root);
    Ok((Specification { components, envelope, tree }, warnings))
}

/// Deterministic text form: sorted keys, two-space indentation, trailing
/// newline. Refuses specifications with violations.
pub fn serialize_spec(spec: &Specification) -> Result<String, SpecError> {
    let violations = validate(spec);
    if !violations.is_empty() {
        return Err(SpecError::Invalid(violations));
    }
    Ok(render_text(spec))
}

/// Text form without validation, for logs and staged specifications.
pub fn render_text(spec: &Specification) -> String {
    let mut text = serde_json::to_string_pretty(&spec.tree).expect("tree serializes");
    text.push('\n');
    text
}

impl Serialize for Specification {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.tree.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Specification {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let tree = Value::deserialize(deserializer)?;
        if tree.as_object().is_some_and(|o| o.is_empty()) {
            return Ok(Specification::empty());
        }
        spec_from_tree(tree).map(|(s, _)| s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn bar_doc() -> &'static str {
        r#"{"mark": "bar", "encoding": {
            "x": {"field": "region", "type": "nominal"},
            "y": {"field": "sales", "aggregate": "mean", "type": "quantitative"}}}"#
    }

    #[test]
    fn parses_average_sales_by_region() {
        let spec = parse_spec(bar_doc()).unwrap();
        let data: BTreeSet<_> = spec.data_schema().fields.iter().map(FieldRef::label).collect();
        assert_eq!(data, BTreeSet::from(["mean(sales)".to_string(), "region".to_string()]));
        assert_eq!(spec.mark_set().marks, vec![Mark::Bar]);
        assert_eq!(spec.encoding().get(Channel::X).unwrap().label(), "region");
        assert_eq!(spec.encoding().get(Channel::Y).unwrap().label(), "mean(sales)");
        assert_eq!(spec.design().get("field_type.x"), Some(&json!("nominal")));
    }

    #[test]
    fn empty_object_is_empty_mark() {
        assert_eq!(parse_spec("{}"), Err(SpecError::EmptyMark));
    }

    #[test]
    fn malformed_reports_location() {
        match parse_spec("{\n  \"mark\": }") {
            Err(SpecError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_top_level_key_is_unsupported() {
        let err = parse_spec(r#"{"mark": "bar", "wibble": 1}"#).unwrap_err();
        assert!(matches!(err, SpecError::Unsupported { ref path, .. } if path == "wibble"), "{err}");
    }

    #[test]
    fn unknown_mark_is_unsupported() {
        let err = parse_spec(r#"{"mark": "geoshape"}"#).unwrap_err();
        assert!(matches!(err, SpecError::Unsupported { ref path, .. } if path == "mark"));
    }

    #[test]
    fn layered_documents_are_retained_with_warning() {
        let (spec, warnings) =
            parse_spec_with_warnings(r#"{"layer": [{"mark": "bar"}, {"mark": "text"}]}"#).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(spec.design().get("extra.layer").is_some());
        assert!(serialize_spec(&spec).is_err());
    }

    #[test]
    fn serialization_is_stable_under_reparse() {
        let spec = parse_spec(bar_doc()).unwrap();
        let text = serialize_spec(&spec).unwrap();
        let again = parse_spec(&text).unwrap();
        assert_eq!(serialize_spec(&again).unwrap(), text);
        assert_eq!(again.components(), spec.components());
    }

    #[test]
    fn title_block_appears_once() {
        let mut components = parse_spec(bar_doc()).unwrap().into_components();
        components.design.properties.insert("title.text".into(), json!("Top 20 Genres"));
        let spec = Specification::rebuild(components);
        let text = serialize_spec(&spec).unwrap();
        assert_eq!(text.matches("\"title\"").count(), 1);
        assert_eq!(text.matches("Top 20 Genres").count(), 1);
    }

    #[test]
    fn spec_serde_uses_dialect_document() {
        let spec = parse_spec(bar_doc()).unwrap();
        let value = serde_json::to_value(&spec).unwrap();
        let back: Specification = serde_json::from_value(value).unwrap();
        assert_eq!(back, spec);
    }
}
