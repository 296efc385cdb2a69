use crate::spec::catalog::{self, DesignProperty, EXTRA_PREFIX};
use crate::spec::{Channel, FieldRef};

use super::OpError;

/// What an `Edit`/`Delete` path addresses.
#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedPath {
    /// `mark`
    Mark,
    /// `encoding.<channel>`
    Channel(Channel),
    /// `data.field.<label>`, e.g. `data.field.mean(sales)`
    DataField(FieldRef),
    /// `data.filter.<attribute>`
    DataFilter(String),
    /// A catalog design property such as `legend.orient`.
    Design(&'static DesignProperty),
    /// Prefix of one or more catalog paths (`legend`, `axis.x`). Delete only.
    DesignPrefix(String),
    /// `extra.<source path>`, exact or prefix.
    Extra(String),
}

pub fn resolve_path(path: &str) -> Result<ResolvedPath, OpError> {
    let unresolvable = || OpError::UnresolvablePath { path: path.to_string() };
    if path == "mark" {
        return Ok(ResolvedPath::Mark);
    }
    if let Some(name) = path.strip_prefix("encoding.") {
        return Channel::parse(name).map(ResolvedPath::Channel).ok_or_else(unresolvable);
    }
    if let Some(label) = path.strip_prefix("data.field.") {
        return FieldRef::parse_label(label).map(ResolvedPath::DataField).ok_or_else(unresolvable);
    }
    if let Some(attribute) = path.strip_prefix("data.filter.") {
        if attribute.is_empty() {
            return Err(unresolvable());
        }
        return Ok(ResolvedPath::DataFilter(attribute.to_string()));
    }
    if let Some(rest) = path.strip_prefix(EXTRA_PREFIX) {
        let head = rest.split(['.', '[']).next().unwrap_or_default();
        let top = &catalog::dialect().top_level;
        if !top.projected.iter().chain(&top.retained).any(|k| k == head) {
            return Err(unresolvable());
        }
        return Ok(ResolvedPath::Extra(path.to_string()));
    }
    if let Some(prop) = catalog::design_property(path) {
        return Ok(ResolvedPath::Design(prop));
    }
    let nested = format!("{path}.");
    if !path.is_empty() && catalog::design_catalog().iter().any(|p| p.path.starts_with(&nested)) {
        return Ok(ResolvedPath::DesignPrefix(path.to_string()));
    }
    Err(unresolvable())
}
