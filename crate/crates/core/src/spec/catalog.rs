//! Closed catalog of design properties and the versioned dialect table
//! (top-level allowlist, aggregate synonyms, defaults) shipped in
//! `data/dialect-v1.json`.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use serde::Deserialize;
use serde_json::Value;

use super::field::Channel;

#[derive(Debug, Deserialize)]
pub struct DialectTable {
    pub version: u32,
    pub top_level: TopLevel,
    pub aggregate_synonyms: BTreeMap<String, String>,
    pub no_aggregate_markers: Vec<String>,
    pub defaults: Vec<DefaultEntry>,
}

#[derive(Debug, Deserialize)]
pub struct TopLevel {
    pub envelope: Vec<String>,
    pub projected: Vec<String>,
    pub retained: Vec<String>,
    pub rejected_by_validate: Vec<String>,
}

#[derive(Debug, Deserialize)]
pub struct DefaultEntry {
    pub path: String,
    pub value: Value,
    #[serde(default)]
    pub when_mark: Option<String>,
}

static DIALECT: LazyLock<DialectTable> = LazyLock::new(|| {
    serde_json::from_str(include_str!("../../data/dialect-v1.json")).expect("bundled dialect table is valid")
});

pub fn dialect() -> &'static DialectTable {
    &DIALECT
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Text,
    Number,
    Bool,
    Enum(&'static [&'static str]),
}

impl ValueKind {
    pub fn describe(self) -> String {
        match self {
            ValueKind::Text => "string".into(),
            ValueKind::Number => "number".into(),
            ValueKind::Bool => "boolean".into(),
            ValueKind::Enum(options) => format!("one of {}", options.join("|")),
        }
    }
}

/// Where a design property lives in the dialect tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    /// Fixed dotted location from the document root.
    Absolute(&'static str),
    /// Inside the definition of the first present channel among `channels`,
    /// at `rel` (or the shorthand `alt`). With no such channel present the
    /// property is parked under `usermeta.design.<path>`.
    Channel {
        channels: Vec<Channel>,
        rel: &'static str,
        alt: Option<&'static str>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignProperty {
    pub path: String,
    pub kind: ValueKind,
    pub nullable: bool,
    pub location: Location,
}

impl DesignProperty {
    pub fn accepts(&self, value: &Value) -> bool {
        match (self.kind, value) {
            (_, Value::Null) => self.nullable,
            (ValueKind::Text, Value::String(_)) => true,
            (ValueKind::Number, Value::Number(_)) => true,
            (ValueKind::Bool, Value::Bool(_)) => true,
            (ValueKind::Enum(options), Value::String(s)) => options.contains(&s.as_str()),
            _ => false,
        }
    }

    /// Channel this property binds to given the channels currently encoded.
    pub fn binding_channel(&self, present: &[Channel]) -> Option<Channel> {
        match &self.location {
            Location::Absolute(_) => None,
            Location::Channel { channels, .. } => channels.iter().copied().find(|c| present.contains(c)),
        }
    }
}

pub const FALLBACK_PREFIX: &str = "usermeta.design";
pub const EXTRA_PREFIX: &str = "extra.";

const INTERPOLATE: &[&str] = &[
    "linear", "linear-closed", "step", "step-before", "step-after", "basis", "cardinal", "monotone", "natural",
];
const ORIENT: &[&str] = &["horizontal", "vertical"];
const ANCHOR: &[&str] = &["start", "middle", "end"];
const LEGEND_ORIENT: &[&str] = &[
    "left", "right", "top", "bottom", "top-left", "top-right", "bottom-left", "bottom-right", "none",
];
const SCALE_TYPE: &[&str] = &["linear", "log", "pow", "sqrt", "symlog", "time", "utc", "band", "point", "ordinal"];
const STACK: &[&str] = &["zero", "center", "normalize"];
const MEASURE: &[&str] = &["quantitative", "nominal", "ordinal", "temporal"];

static CATALOG: LazyLock<Vec<DesignProperty>> = LazyLock::new(build_catalog);

fn build_catalog() -> Vec<DesignProperty> {
    let mut props = Vec::new();
    let mut abs = |path: &str, kind, location| {
        props.push(DesignProperty {
            path: path.to_string(),
            kind,
            nullable: false,
            location: Location::Absolute(location),
        })
    };
    abs("title.text", ValueKind::Text, "title.text");
    abs("title.subtitle", ValueKind::Text, "title.subtitle");
    abs("title.anchor", ValueKind::Enum(ANCHOR), "title.anchor");
    abs("mark.fill", ValueKind::Text, "mark.fill");
    abs("mark.color", ValueKind::Text, "mark.color");
    abs("mark.stroke", ValueKind::Text, "mark.stroke");
    abs("mark.filled", ValueKind::Bool, "mark.filled");
    abs("mark.opacity", ValueKind::Number, "mark.opacity");
    abs("mark.size", ValueKind::Number, "mark.size");
    abs("mark.innerRadius", ValueKind::Number, "mark.innerRadius");
    abs("mark.interpolate", ValueKind::Enum(INTERPOLATE), "mark.interpolate");
    abs("mark.point", ValueKind::Bool, "mark.point");
    abs("mark.orient", ValueKind::Enum(ORIENT), "mark.orient");
    abs("mark.tooltip", ValueKind::Bool, "mark.tooltip");
    abs("view.width", ValueKind::Number, "width");
    abs("view.height", ValueKind::Number, "height");
    abs("background", ValueKind::Text, "background");
    abs("grid.enabled", ValueKind::Bool, "config.axis.grid");

    let mut bound = |path: String, kind, nullable, channels: Vec<Channel>, rel, alt| {
        props.push(DesignProperty {
            path,
            kind,
            nullable,
            location: Location::Channel { channels, rel, alt },
        })
    };
    for ch in [Channel::X, Channel::Y] {
        bound(format!("axis.{ch}.title"), ValueKind::Text, true, vec![ch], "axis.title", Some("title"));
        bound(format!("axis.{ch}.format"), ValueKind::Text, false, vec![ch], "axis.format", None);
        bound(format!("axis.{ch}.labelAngle"), ValueKind::Number, false, vec![ch], "axis.labelAngle", None);
        bound(format!("scale.{ch}.zero"), ValueKind::Bool, false, vec![ch], "scale.zero", None);
        bound(format!("scale.{ch}.type"), ValueKind::Enum(SCALE_TYPE), false, vec![ch], "scale.type", None);
    }
    for ch in [Channel::X, Channel::Y, Channel::Theta] {
        bound(format!("stack.{ch}"), ValueKind::Enum(STACK), true, vec![ch], "stack", None);
    }
    let legend = Channel::LEGEND.to_vec();
    bound("legend.orient".into(), ValueKind::Enum(LEGEND_ORIENT), false, legend.clone(), "legend.orient", None);
    bound("legend.title".into(), ValueKind::Text, true, legend, "legend.title", Some("title"));
    bound("color.scheme".into(), ValueKind::Text, false, vec![Channel::Color], "scale.scheme", None);
    bound("color.reverse".into(), ValueKind::Bool, false, vec![Channel::Color], "scale.reverse", None);
    for ch in Channel::ALL {
        bound(format!("field_type.{ch}"), ValueKind::Enum(MEASURE), false, vec![ch], "type", None);
    }
    props
}

pub fn design_catalog() -> &'static [DesignProperty] {
    &CATALOG
}

pub fn design_property(path: &str) -> Option<&'static DesignProperty> {
    CATALOG.iter().find(|p| p.path == path)
}

/// Catalog entry that claims `rel` inside the definition of `channel`.
/// The boolean is true when the shorthand (`alt`) location matched.
pub fn channel_property(channel: Channel, rel: &str) -> Option<(&'static DesignProperty, bool)> {
    CATALOG.iter().find_map(|p| match &p.location {
        Location::Channel { channels, rel: r, alt } if channels.contains(&channel) => {
            if *r == rel {
                Some((p, false))
            } else if *alt == Some(rel) {
                Some((p, true))
            } else {
                None
            }
        }
        _ => None,
    })
}

pub fn absolute_property(location: &str) -> Option<&'static DesignProperty> {
    CATALOG
        .iter()
        .find(|p| matches!(p.location, Location::Absolute(l) if l == location))
}
