//! Creative and iterative specification operations.
//!
//! Creative operations (`SelectData`, `TransformData`, `SetMarkType`,
//! `SetMarkStyle`, `BindCoordinate`, `Layout`) build a chart from scratch;
//! iterative ones (`Edit`, `Delete`) refine an existing chart. Every
//! operation is a pure function from one [`Specification`] to the next.
//!
//! | operation | components touched |
//! |---|---|
//! | SelectData | data |
//! | TransformData | data, plus encodings bound to the transformed field |
//! | SetMarkType | mark |
//! | SetMarkStyle (design) | design |
//! | SetMarkStyle (encoding), BindCoordinate, Layout | encoding, data |
//! | Edit / Delete | the component the path resolves to |

mod diff;
mod path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::spec::catalog;
use crate::spec::{Aggregate, Bin, Channel, Components, FieldRef, Filter, Mark, Sort, Specification, TimeUnit};

pub use diff::diff_to_plan;
pub use path::{resolve_path, ResolvedPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Theta,
}

impl Axis {
    pub fn channel(self) -> Channel {
        match self {
            Axis::X => Channel::X,
            Axis::Y => Channel::Y,
            Axis::Theta => Channel::Theta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arrangement {
    FacetColumn,
    FacetRow,
    Grid,
}

impl Arrangement {
    pub fn channel(self) -> Channel {
        match self {
            Arrangement::FacetColumn => Channel::Column,
            Arrangement::FacetRow => Channel::Row,
            Arrangement::Grid => Channel::Facet,
        }
    }
}

/// A data transformation carried by `TransformData`. `None` payloads clear
/// the corresponding transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    Aggregate { aggregate: Option<Aggregate> },
    Sort { order: Option<Sort> },
    Bin {
        #[serde(default)]
        maxbins: Option<u32>,
        #[serde(default = "enabled")]
        enabled: bool,
    },
    TimeUnit { unit: Option<TimeUnit> },
    Filter { predicate: Value },
}

fn enabled() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scope", rename_all = "lowercase")]
pub enum MarkStyle {
    Design { path: String, value: Value },
    Encoding { field: FieldRef, channel: Channel },
}

/// One machine-interpretable intent. The wire form is an object whose `op`
/// key carries the operation name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum SpecOperation {
    SelectData {
        fields: Vec<FieldRef>,
    },
    TransformData {
        field: FieldRef,
        transform: Transform,
    },
    SetMarkType {
        mark: Mark,
    },
    SetMarkStyle(MarkStyle),
    BindCoordinate {
        axis: Axis,
        field: FieldRef,
    },
    Layout {
        arrangement: Arrangement,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        field: Option<FieldRef>,
    },
    Edit {
        path: String,
        value: Value,
    },
    Delete {
        path: String,
    },
}

impl SpecOperation {
    pub fn name(&self) -> &'static str {
        match self {
            SpecOperation::SelectData { .. } => "SelectData",
            SpecOperation::TransformData { .. } => "TransformData",
            SpecOperation::SetMarkType { .. } => "SetMarkType",
            SpecOperation::SetMarkStyle(_) => "SetMarkStyle",
            SpecOperation::BindCoordinate { .. } => "BindCoordinate",
            SpecOperation::Layout { .. } => "Layout",
            SpecOperation::Edit { .. } => "Edit",
            SpecOperation::Delete { .. } => "Delete",
        }
    }

    pub fn is_iterative(&self) -> bool {
        matches!(self, SpecOperation::Edit { .. } | SpecOperation::Delete { .. })
    }
}

/// Ordered list of operations. `base_required` is derived: it is true
/// exactly when the plan contains an `Edit` or `Delete`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OperationPlan {
    ops: Vec<SpecOperation>,
    base_required: bool,
}

impl OperationPlan {
    pub fn new(ops: Vec<SpecOperation>) -> Self {
        let base_required = ops.iter().any(SpecOperation::is_iterative);
        OperationPlan { ops, base_required }
    }

    pub fn ops(&self) -> &[SpecOperation] {
        &self.ops
    }

    pub fn base_required(&self) -> bool {
        self.base_required
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct WirePlan {
    #[serde(default)]
    base_required: Option<bool>,
    ops: Vec<SpecOperation>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WirePlanForm {
    Bare(Vec<SpecOperation>),
    Wrapped(WirePlan),
}

impl Serialize for OperationPlan {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        WirePlan { base_required: Some(self.base_required), ops: self.ops.clone() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OperationPlan {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (ops, declared) = match WirePlanForm::deserialize(deserializer)? {
            WirePlanForm::Bare(ops) => (ops, None),
            WirePlanForm::Wrapped(plan) => (plan.ops, plan.base_required),
        };
        let plan = OperationPlan::new(ops);
        if let Some(declared) = declared {
            if declared != plan.base_required {
                return Err(serde::de::Error::custom(format!(
                    "base_required is {declared} but the plan {} iterative operations",
                    if plan.base_required { "contains" } else { "has no" }
                )));
            }
        }
        Ok(plan)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpError {
    #[error("`{path}` does not resolve to a specification property")]
    UnresolvablePath { path: String },
    #[error("value for `{path}` must be {expected}")]
    TypeMismatch { path: String, expected: String },
    #[error("duplicate_channel: {channel} is already bound to {existing}")]
    DuplicateChannel { channel: Channel, existing: String },
    #[error("{op} requires an existing specification")]
    BaseRequired { op: &'static str },
    #[error("layout {0:?} requires a facet field")]
    LayoutFieldRequired(Arrangement),
    #[error("{0} is not a mark style channel")]
    NotStyleChannel(Channel),
    #[error("invalid field: {0}")]
    InvalidField(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("operation {index} failed: {source}")]
pub struct PlanError {
    pub index: usize,
    #[source]
    pub source: OpError,
}

/// Result of applying operations: the new specification plus notices such
/// as axis re-bindings.
#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub spec: Specification,
    pub notices: Vec<String>,
}

pub fn apply(base: &Specification, op: &SpecOperation) -> Result<Applied, OpError> {
    if op.is_iterative() && base.is_empty() {
        return Err(OpError::BaseRequired { op: op.name() });
    }
    let mut c = base.components().clone();
    let mut notices = Vec::new();
    match op {
        SpecOperation::SelectData { fields } => {
            for field in fields {
                check_field(field)?;
                c.data_schema.upsert(field.clone());
            }
        }
        SpecOperation::TransformData { field, transform } => transform_data(&mut c, field, transform)?,
        SpecOperation::SetMarkType { mark } => c.mark_set.marks = vec![*mark],
        SpecOperation::SetMarkStyle(MarkStyle::Design { path, value }) => set_design(&mut c, path, value)?,
        SpecOperation::SetMarkStyle(MarkStyle::Encoding { field, channel }) => {
            if !Channel::STYLE.contains(channel) {
                return Err(OpError::NotStyleChannel(*channel));
            }
            check_field(field)?;
            if let Some(existing) = c.encoding.get(*channel) {
                if existing.key() != field.key() {
                    return Err(OpError::DuplicateChannel { channel: *channel, existing: existing.label() });
                }
            }
            bind(&mut c, *channel, field, &mut notices);
        }
        SpecOperation::BindCoordinate { axis, field } => {
            check_field(field)?;
            bind(&mut c, axis.channel(), field, &mut notices);
        }
        SpecOperation::Layout { arrangement, field } => {
            let field = field.as_ref().ok_or(OpError::LayoutFieldRequired(*arrangement))?;
            check_field(field)?;
            bind(&mut c, arrangement.channel(), field, &mut notices);
        }
        SpecOperation::Edit { path, value } => edit(&mut c, path, value, &mut notices)?,
        SpecOperation::Delete { path } => delete(&mut c, path)?,
    }
    Ok(Applied { spec: base.replace_components(c), notices })
}

/// Left fold of [`apply`], stopping at the first failing operation.
pub fn apply_plan(base: &Specification, plan: &OperationPlan) -> Result<Applied, PlanError> {
    if plan.base_required() && base.is_empty() {
        let index = plan.ops().iter().position(SpecOperation::is_iterative).unwrap_or(0);
        return Err(PlanError {
            index,
            source: OpError::BaseRequired { op: plan.ops()[index].name() },
        });
    }
    let mut current = Applied { spec: base.clone(), notices: Vec::new() };
    for (index, op) in plan.ops().iter().enumerate() {
        let step = apply(&current.spec, op).map_err(|source| PlanError { index, source })?;
        current.spec = step.spec;
        current.notices.extend(step.notices);
    }
    Ok(current)
}

fn check_field(field: &FieldRef) -> Result<(), OpError> {
    if field.attribute.trim().is_empty() && field.aggregate != Some(Aggregate::Count) {
        return Err(OpError::InvalidField("empty attribute requires the count aggregate".into()));
    }
    if field.bin.is_some() && field.time_unit.is_some() {
        return Err(OpError::InvalidField("bin and time unit are mutually exclusive".into()));
    }
    Ok(())
}

fn bind(c: &mut Components, channel: Channel, field: &FieldRef, notices: &mut Vec<String>) {
    if field.sort.is_some() || !c.data_schema.contains(&field.key()) {
        c.data_schema.upsert(field.clone());
    }
    if let Some(previous) = c.encoding.bind(channel, field.clone()) {
        if previous.key() != field.key() {
            notices.push(format!("{channel} re-bound from {} to {}", previous.label(), field.label()));
        }
    }
}

/// Data field matching `field`: same identity first, else the only field
/// with the same attribute.
fn locate(c: &Components, field: &FieldRef) -> Option<usize> {
    let key = field.key();
    if let Some(i) = c.data_schema.fields.iter().position(|f| f.key() == key) {
        return Some(i);
    }
    let mut same_name = c
        .data_schema
        .fields
        .iter()
        .enumerate()
        .filter(|(_, f)| f.key().attribute == key.attribute);
    match (same_name.next(), same_name.next()) {
        (Some((i, _)), None) => Some(i),
        _ => None,
    }
}

fn replace_field(c: &mut Components, old: Option<FieldRef>, new: FieldRef) {
    match old {
        Some(old) => {
            let old_key = old.key();
            c.data_schema.fields.retain(|f| f.key() != old_key);
            for entry in &mut c.encoding.entries {
                if entry.field.key() == old_key {
                    entry.field = new.without_sort();
                }
            }
            c.data_schema.upsert(new);
        }
        None => {
            c.data_schema.upsert(new);
        }
    }
}

fn transform_data(c: &mut Components, field: &FieldRef, transform: &Transform) -> Result<(), OpError> {
    check_field(field)?;
    if let Transform::Filter { predicate } = transform {
        if field.attribute.trim().is_empty() {
            return Err(OpError::InvalidField("a filter needs a named attribute".into()));
        }
        if !predicate.as_object().is_some_and(|p| !p.is_empty()) {
            return Err(OpError::TypeMismatch {
                path: "transform.predicate".into(),
                expected: "a non-empty predicate object".into(),
            });
        }
        let filter = Filter { attribute: field.attribute.clone(), predicate: predicate.clone() };
        if !c.data_schema.filters.contains(&filter) {
            c.data_schema.filters.push(filter);
        }
        return Ok(());
    }
    let old = locate(c, field).map(|i| c.data_schema.fields[i].clone());
    let mut new = old.clone().unwrap_or_else(|| field.clone());
    match transform {
        Transform::Aggregate { aggregate } => new.aggregate = *aggregate,
        Transform::Sort { order } => new.sort = *order,
        Transform::Bin { maxbins, enabled } => {
            new.bin = enabled.then_some(Bin { maxbins: *maxbins });
            if new.bin.is_some() {
                new.time_unit = None;
            }
        }
        Transform::TimeUnit { unit } => {
            new.time_unit = *unit;
            if unit.is_some() {
                new.bin = None;
            }
        }
        Transform::Filter { .. } => unreachable!(),
    }
    check_field(&new)?;
    replace_field(c, old, new);
    Ok(())
}

fn set_design(c: &mut Components, path: &str, value: &Value) -> Result<(), OpError> {
    let prop = catalog::design_property(path).ok_or_else(|| OpError::UnresolvablePath { path: path.into() })?;
    if !prop.accepts(value) {
        return Err(OpError::TypeMismatch { path: path.into(), expected: prop.kind.describe() });
    }
    c.design.properties.insert(path.to_string(), value.clone());
    Ok(())
}

fn parse_field(path: &str, value: &Value) -> Result<FieldRef, OpError> {
    serde_json::from_value(value.clone()).map_err(|e| OpError::TypeMismatch {
        path: path.into(),
        expected: format!("a field reference ({e})"),
    })
}

fn edit(c: &mut Components, path: &str, value: &Value, notices: &mut Vec<String>) -> Result<(), OpError> {
    match resolve_path(path)? {
        ResolvedPath::Mark => {
            let mark = value.as_str().and_then(Mark::parse).ok_or_else(|| OpError::TypeMismatch {
                path: path.into(),
                expected: "a mark type".into(),
            })?;
            c.mark_set.marks = vec![mark];
        }
        ResolvedPath::Channel(channel) => {
            if value.is_null() {
                c.encoding.unbind(channel);
            } else {
                let field = parse_field(path, value)?;
                check_field(&field)?;
                bind(c, channel, &field, notices);
            }
        }
        ResolvedPath::DataField(target) => {
            let field = parse_field(path, value)?;
            check_field(&field)?;
            let old = c.data_schema.find(&target.key()).cloned();
            replace_field(c, old, field);
        }
        ResolvedPath::Design(prop) => set_design(c, &prop.path, value)?,
        ResolvedPath::Extra(_) => {
            c.design.properties.insert(path.to_string(), value.clone());
        }
        ResolvedPath::DataFilter(_) | ResolvedPath::DesignPrefix(_) => {
            return Err(OpError::UnresolvablePath { path: path.into() })
        }
    }
    Ok(())
}

fn delete(c: &mut Components, path: &str) -> Result<(), OpError> {
    match resolve_path(path)? {
        ResolvedPath::Mark => c.mark_set.marks.clear(),
        ResolvedPath::Channel(channel) => {
            c.encoding.unbind(channel);
        }
        ResolvedPath::DataField(target) => {
            let key = target.key();
            c.data_schema.fields.retain(|f| f.key() != key);
            c.encoding.entries.retain(|e| e.field.key() != key);
        }
        ResolvedPath::DataFilter(attribute) => {
            let wanted = crate::spec::normalize_attribute(&attribute);
            c.data_schema.filters.retain(|f| crate::spec::normalize_attribute(&f.attribute) != wanted);
        }
        ResolvedPath::Design(prop) => {
            c.design.properties.remove(&prop.path);
        }
        ResolvedPath::DesignPrefix(prefix) | ResolvedPath::Extra(prefix) => {
            let nested = format!("{prefix}.");
            c.design.properties.retain(|k, _| k != &prefix && !k.starts_with(&nested));
        }
    }
    Ok(())
}
