use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::catalog;

/// Aggregation functions in their canonical spelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Sum,
    Mean,
    Median,
    Count,
    Min,
    Max,
}

impl Aggregate {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregate::Sum => "sum",
            Aggregate::Mean => "mean",
            Aggregate::Median => "median",
            Aggregate::Count => "count",
            Aggregate::Min => "min",
            Aggregate::Max => "max",
        }
    }

    fn from_canonical(s: &str) -> Option<Self> {
        Some(match s {
            "sum" => Aggregate::Sum,
            "mean" => Aggregate::Mean,
            "median" => Aggregate::Median,
            "count" => Aggregate::Count,
            "min" => Aggregate::Min,
            "max" => Aggregate::Max,
            _ => return None,
        })
    }

    /// Resolves a spelled aggregate through the synonym table.
    ///
    /// `Some(None)` means the text is an explicit "no aggregate" marker
    /// (`none`, `raw`); `None` means the text is not recognised at all.
    pub fn resolve(text: &str) -> Option<Option<Aggregate>> {
        let lowered = text.trim().to_ascii_lowercase();
        let dialect = catalog::dialect();
        if dialect.no_aggregate_markers.iter().any(|m| *m == lowered) {
            return Some(None);
        }
        dialect
            .aggregate_synonyms
            .get(&lowered)
            .and_then(|canonical| Aggregate::from_canonical(canonical))
            .map(Some)
    }
}

impl<'de> Deserialize<'de> for Aggregate {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        match Aggregate::resolve(&text) {
            Some(Some(agg)) => Ok(agg),
            _ => Err(serde::de::Error::custom(format!("unknown aggregate `{text}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Year,
    Month,
    Day,
    #[serde(rename = "yearmonth")]
    YearMonth,
}

impl TimeUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            TimeUnit::Year => "year",
            TimeUnit::Month => "month",
            TimeUnit::Day => "day",
            TimeUnit::YearMonth => "yearmonth",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "year" => TimeUnit::Year,
            "month" => TimeUnit::Month,
            "day" => TimeUnit::Day,
            "yearmonth" => TimeUnit::YearMonth,
            _ => return None,
        })
    }
}

/// Visual channels, declared in the fixed canonical channel order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    X,
    Y,
    Theta,
    Color,
    Size,
    Shape,
    Opacity,
    Text,
    Tooltip,
    Row,
    Column,
    Facet,
}

impl Channel {
    pub const ALL: [Channel; 12] = [
        Channel::X,
        Channel::Y,
        Channel::Theta,
        Channel::Color,
        Channel::Size,
        Channel::Shape,
        Channel::Opacity,
        Channel::Text,
        Channel::Tooltip,
        Channel::Row,
        Channel::Column,
        Channel::Facet,
    ];

    /// Channels that carry a legend, in binding priority.
    pub const LEGEND: [Channel; 4] = [Channel::Color, Channel::Size, Channel::Shape, Channel::Opacity];

    /// Channels a style gesture may bind.
    pub const STYLE: [Channel; 4] = Channel::LEGEND;

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::Y => "y",
            Channel::Theta => "theta",
            Channel::Color => "color",
            Channel::Size => "size",
            Channel::Shape => "shape",
            Channel::Opacity => "opacity",
            Channel::Text => "text",
            Channel::Tooltip => "tooltip",
            Channel::Row => "row",
            Channel::Column => "column",
            Channel::Facet => "facet",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Channel::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Bar,
    Line,
    Point,
    Circle,
    Area,
    Arc,
    Rect,
    Tick,
    Text,
    Boxplot,
}

impl Mark {
    /// Identity for matching and defaults: `circle` counts as `point`.
    pub fn class(self) -> Mark {
        match self {
            Mark::Circle => Mark::Point,
            other => other,
        }
    }

    pub const ALL: [Mark; 10] = [
        Mark::Bar,
        Mark::Line,
        Mark::Point,
        Mark::Circle,
        Mark::Area,
        Mark::Arc,
        Mark::Rect,
        Mark::Tick,
        Mark::Text,
        Mark::Boxplot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mark::Bar => "bar",
            Mark::Line => "line",
            Mark::Point => "point",
            Mark::Circle => "circle",
            Mark::Area => "area",
            Mark::Arc => "arc",
            Mark::Rect => "rect",
            Mark::Tick => "tick",
            Mark::Text => "text",
            Mark::Boxplot => "boxplot",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Mark::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Bin {
    pub maxbins: Option<u32>,
}

/// Sort order of a field. `ByChannel` sorts by the values encoded on
/// another channel, e.g. `-y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Ascending,
    Descending,
    ByChannel { channel: Channel, descending: bool },
}

impl Sort {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ascending" => Some(Sort::Ascending),
            "descending" => Some(Sort::Descending),
            _ => {
                let (descending, name) = match s.strip_prefix('-') {
                    Some(rest) => (true, rest),
                    None => (false, s),
                };
                Channel::parse(name).map(|channel| Sort::ByChannel { channel, descending })
            }
        }
    }
}

impl Serialize for Sort {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Sort {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Sort::parse(&text).ok_or_else(|| serde::de::Error::custom(format!("unknown sort `{text}`")))
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Ascending => f.write_str("ascending"),
            Sort::Descending => f.write_str("descending"),
            Sort::ByChannel { channel, descending } => {
                write!(f, "{}{}", if *descending { "-" } else { "" }, channel)
            }
        }
    }
}

/// A data attribute plus the transforms applied to it before encoding.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "WireFieldRef", into = "WireFieldRef")]
pub struct FieldRef {
    pub attribute: String,
    pub aggregate: Option<Aggregate>,
    pub bin: Option<Bin>,
    pub sort: Option<Sort>,
    pub time_unit: Option<TimeUnit>,
}

/// Identity of a field inside a data schema: everything except sort, with
/// the attribute name folded for case/whitespace/underscore insensitivity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldKey {
    pub attribute: String,
    pub aggregate: Option<Aggregate>,
    pub bin: Option<Bin>,
    pub time_unit: Option<TimeUnit>,
}

/// Folds an attribute name for matching against dataset columns.
pub fn normalize_attribute(name: &str) -> String {
    let trimmed = name.trim();
    if trimmed == "*" {
        return String::new();
    }
    trimmed
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '_')
        .flat_map(char::to_lowercase)
        .collect()
}

impl FieldRef {
    pub fn new(attribute: impl Into<String>) -> Self {
        FieldRef {
            attribute: attribute.into(),
            aggregate: None,
            bin: None,
            sort: None,
            time_unit: None,
        }
    }

    pub fn count() -> Self {
        FieldRef::new("").with_aggregate(Aggregate::Count)
    }

    pub fn with_aggregate(mut self, aggregate: Aggregate) -> Self {
        self.aggregate = Some(aggregate);
        self
    }

    pub fn with_bin(mut self, maxbins: Option<u32>) -> Self {
        self.bin = Some(Bin { maxbins });
        self
    }

    pub fn with_sort(mut self, sort: Sort) -> Self {
        self.sort = Some(sort);
        self
    }

    pub fn with_time_unit(mut self, unit: TimeUnit) -> Self {
        self.time_unit = Some(unit);
        self
    }

    pub fn key(&self) -> FieldKey {
        FieldKey {
            attribute: normalize_attribute(&self.attribute),
            aggregate: self.aggregate,
            bin: self.bin,
            time_unit: self.time_unit,
        }
    }

    pub fn without_sort(&self) -> FieldRef {
        FieldRef { sort: None, ..self.clone() }
    }

    /// Identity label such as `mean(sales)`, `bin20(popularity)` or `count()`.
    pub fn label(&self) -> String {
        let mut inner = self.attribute.clone();
        if let Some(bin) = self.bin {
            inner = match bin.maxbins {
                Some(n) => format!("bin{n}({inner})"),
                None => format!("bin({inner})"),
            };
        }
        if let Some(unit) = self.time_unit {
            inner = format!("{}({inner})", unit.as_str());
        }
        match self.aggregate {
            Some(agg) => format!("{}({inner})", agg.as_str()),
            None => inner,
        }
    }

    /// Inverse of [`FieldRef::label`]. Sort is never part of a label.
    pub fn parse_label(label: &str) -> Option<FieldRef> {
        let mut field = FieldRef::new("");
        let mut rest = label.trim();
        loop {
            let Some(open) = rest.find('(') else { break };
            if !rest.ends_with(')') {
                break;
            }
            let head = &rest[..open];
            let inner = &rest[open + 1..rest.len() - 1];
            if let Some(agg) = Aggregate::from_canonical(head) {
                if field.aggregate.is_some() || field.bin.is_some() || field.time_unit.is_some() {
                    return None;
                }
                field.aggregate = Some(agg);
            } else if let Some(unit) = TimeUnit::parse(head) {
                if field.bin.is_some() || field.time_unit.is_some() {
                    return None;
                }
                field.time_unit = Some(unit);
            } else if let Some(count) = head.strip_prefix("bin") {
                if field.bin.is_some() || field.time_unit.is_some() {
                    return None;
                }
                let maxbins = if count.is_empty() {
                    None
                } else {
                    Some(count.parse().ok()?)
                };
                field.bin = Some(Bin { maxbins });
            } else {
                break;
            }
            rest = inner;
        }
        field.attribute = rest.to_string();
        if field.attribute.is_empty() && field.aggregate != Some(Aggregate::Count) {
            return None;
        }
        Some(field)
    }

    /// Channel-definition object in the dialect (without `type` or sort).
    pub(crate) fn to_channel_def(&self) -> serde_json::Map<String, Value> {
        let mut def = serde_json::Map::new();
        if !self.attribute.is_empty() {
            def.insert("field".into(), Value::String(self.attribute.clone()));
        }
        if let Some(agg) = self.aggregate {
            def.insert("aggregate".into(), Value::String(agg.as_str().into()));
        }
        if let Some(bin) = self.bin {
            let value = match bin.maxbins {
                Some(n) => json!({ "maxbins": n }),
                None => Value::Bool(true),
            };
            def.insert("bin".into(), value);
        }
        if let Some(unit) = self.time_unit {
            def.insert("timeUnit".into(), Value::String(unit.as_str().into()));
        }
        def
    }
}

impl fmt::Display for FieldRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())?;
        if let Some(sort) = self.sort {
            write!(f, " sort={sort}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WireFieldRef {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    aggregate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bin: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sort: Option<String>,
    #[serde(default, rename = "timeUnit", skip_serializing_if = "Option::is_none")]
    time_unit: Option<String>,
}

impl TryFrom<WireFieldRef> for FieldRef {
    type Error = String;

    fn try_from(wire: WireFieldRef) -> Result<Self, Self::Error> {
        let aggregate = match &wire.aggregate {
            None => None,
            Some(text) => Aggregate::resolve(text).ok_or_else(|| format!("unknown aggregate `{text}`"))?,
        };
        let bin = match &wire.bin {
            None | Some(Value::Bool(false)) | Some(Value::Null) => None,
            Some(value) => Some(parse_bin(value).ok_or_else(|| format!("unsupported bin `{value}`"))?),
        };
        let sort = match &wire.sort {
            None => None,
            Some(text) => Some(Sort::parse(text).ok_or_else(|| format!("unknown sort `{text}`"))?),
        };
        let time_unit = match &wire.time_unit {
            None => None,
            Some(text) => Some(TimeUnit::parse(text).ok_or_else(|| format!("unknown time unit `{text}`"))?),
        };
        if bin.is_some() && time_unit.is_some() {
            return Err("a field cannot be both binned and time-unit bucketed".into());
        }
        let attribute = if wire.field.trim() == "*" { String::new() } else { wire.field };
        if attribute.trim().is_empty() && aggregate != Some(Aggregate::Count) {
            return Err("field name is required unless aggregate is count".into());
        }
        Ok(FieldRef { attribute, aggregate, bin, sort, time_unit })
    }
}

impl From<FieldRef> for WireFieldRef {
    fn from(field: FieldRef) -> Self {
        WireFieldRef {
            field: field.attribute,
            aggregate: field.aggregate.map(|a| a.as_str().to_string()),
            bin: field.bin.map(|b| match b.maxbins {
                Some(n) => json!({ "maxbins": n }),
                None => Value::Bool(true),
            }),
            sort: field.sort.map(|s| s.to_string()),
            time_unit: field.time_unit.map(|t| t.as_str().to_string()),
        }
    }
}

/// `true` or `{"maxbins": n}`; anything richer is not part of the subset.
pub(crate) fn parse_bin(value: &Value) -> Option<Bin> {
    match value {
        Value::Bool(true) => Some(Bin { maxbins: None }),
        Value::Object(map) if map.is_empty() => Some(Bin { maxbins: None }),
        Value::Object(map) if map.len() == 1 => map
            .get("maxbins")
            .and_then(Value::as_u64)
            .and_then(|n| u32::try_from(n).ok())
            .map(|n| Bin { maxbins: Some(n) }),
        _ => None,
    }
}
