mod support;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use serde_json::{json, Value};
use sketchvis_core::ops::{
    apply, apply_plan, diff_to_plan, resolve_path, Arrangement, Axis, MarkStyle, OperationPlan, ResolvedPath, SpecOperation,
    Transform,
};
use sketchvis_core::spec::catalog::design_catalog;
use sketchvis_core::spec::{
    canonicalize, parse_spec, Aggregate, Channel, Components, DataSchema, DesignSet, EncodingEntry, EncodingMap, FieldRef,
    Mark, MarkSet, Specification, TimeUnit,
};
use support::{arb_design_entry, arb_field, arb_filter, arb_pair, arb_sort, arb_spec};

fn arb_transform() -> impl Strategy<Value = Transform> {
    prop_oneof![
        support::arb_aggregate().prop_map(|aggregate| Transform::Aggregate { aggregate }),
        arb_sort().prop_map(|order| Transform::Sort { order }),
        (prop::option::of(5u32..40), any::<bool>()).prop_map(|(maxbins, enabled)| Transform::Bin { maxbins, enabled }),
        prop::option::of(prop::sample::select(vec![TimeUnit::Year, TimeUnit::Month]))
            .prop_map(|unit| Transform::TimeUnit { unit }),
        arb_filter().prop_map(|f| Transform::Filter { predicate: f.predicate }),
    ]
}

fn arb_path() -> impl Strategy<Value = String> {
    let design: Vec<String> = design_catalog().iter().map(|p| p.path.clone()).collect();
    prop_oneof![
        3 => prop::sample::select(design),
        1 => prop::sample::select(Channel::ALL.to_vec()).prop_map(|c| format!("encoding.{c}")),
        1 => Just("mark".to_string()),
        1 => arb_field().prop_map(|f| format!("data.field.{}", f.label())),
        1 => Just("extra.usermeta.note".to_string()),
        1 => prop::sample::select(vec!["legend", "axis.x", "title"]).prop_map(String::from),
    ]
}

fn arb_op() -> impl Strategy<Value = SpecOperation> {
    let style_field = (arb_field(), prop::sample::select(Channel::STYLE.to_vec()))
        .prop_map(|(field, channel)| SpecOperation::SetMarkStyle(MarkStyle::Encoding { field, channel }));
    prop_oneof![
        prop::collection::vec(arb_field(), 1..3).prop_map(|fields| SpecOperation::SelectData { fields }),
        (arb_field(), arb_transform()).prop_map(|(field, transform)| SpecOperation::TransformData { field, transform }),
        prop::sample::select(Mark::ALL.to_vec()).prop_map(|mark| SpecOperation::SetMarkType { mark }),
        arb_design_entry()
            .prop_filter("catalog paths only", |(p, _)| !p.starts_with("extra."))
            .prop_map(|(path, value)| SpecOperation::SetMarkStyle(MarkStyle::Design { path, value })),
        style_field,
        (prop::sample::select(vec![Axis::X, Axis::Y, Axis::Theta]), arb_field())
            .prop_map(|(axis, field)| SpecOperation::BindCoordinate { axis, field }),
        (
            prop::sample::select(vec![Arrangement::FacetColumn, Arrangement::FacetRow, Arrangement::Grid]),
            prop::option::of(arb_field())
        )
            .prop_map(|(arrangement, field)| SpecOperation::Layout { arrangement, field }),
        (arb_path(), prop_oneof![
            arb_design_entry().prop_map(|(_, v)| v),
            arb_field().prop_map(|f| serde_json::to_value(f).unwrap()),
            prop::sample::select(vec!["bar", "line"]).prop_map(|m| json!(m)),
        ])
            .prop_map(|(path, value)| SpecOperation::Edit { path, value }),
        arb_path().prop_map(|path| SpecOperation::Delete { path }),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Part {
    Data,
    Mark,
    Encoding,
    Design,
}

/// Components an operation may change.
fn touched(op: &SpecOperation) -> BTreeSet<Part> {
    use Part::*;
    let set = |parts: &[Part]| parts.iter().copied().collect();
    match op {
        SpecOperation::SelectData { .. } => set(&[Data]),
        SpecOperation::TransformData { .. } => set(&[Data, Encoding]),
        SpecOperation::SetMarkType { .. } => set(&[Mark]),
        SpecOperation::SetMarkStyle(MarkStyle::Design { .. }) => set(&[Design]),
        SpecOperation::SetMarkStyle(MarkStyle::Encoding { .. })
        | SpecOperation::BindCoordinate { .. }
        | SpecOperation::Layout { .. } => set(&[Encoding, Data]),
        SpecOperation::Edit { path, .. } | SpecOperation::Delete { path } => match resolve_path(path) {
            Ok(ResolvedPath::Mark) => set(&[Mark]),
            Ok(ResolvedPath::Channel(_)) => set(&[Encoding, Data]),
            Ok(ResolvedPath::DataField(_)) => set(&[Data, Encoding]),
            Ok(ResolvedPath::DataFilter(_)) => set(&[Data]),
            _ => set(&[Design]),
        },
    }
}

fn unchanged(a: &Components, b: &Components) -> BTreeSet<Part> {
    let mut out = BTreeSet::new();
    if a.data_schema == b.data_schema {
        out.insert(Part::Data);
    }
    if a.mark_set == b.mark_set {
        out.insert(Part::Mark);
    }
    if a.encoding == b.encoding {
        out.insert(Part::Encoding);
    }
    if a.design == b.design {
        out.insert(Part::Design);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn diff_plan_reconstructs_the_target((before, after) in arb_pair()) {
        let plan = diff_to_plan(&before, &after);
        let out = apply_plan(&before, &plan).map_err(|e| TestCaseError::fail(format!("{e}: {}", plan.to_json())))?;
        let target = canonicalize(&after);
        let (got, want) = (items(&out.spec), items(&target));
        prop_assert!(out.spec.components().equivalent(target.components()), "plan {}: {:?} / {:?}", plan.to_json(),
            got.difference(&want).collect::<Vec<_>>(), want.difference(&got).collect::<Vec<_>>());
    }

    #[test]
    fn operations_only_touch_their_components(spec in arb_spec(), op in arb_op()) {
        if let Ok(applied) = apply(&spec, &op) {
            let same = unchanged(spec.components(), applied.spec.components());
            for part in [Part::Data, Part::Mark, Part::Encoding, Part::Design] {
                if !touched(&op).contains(&part) {
                    prop_assert!(same.contains(&part), "{:?} changed by {}", part, serde_json::to_string(&op).unwrap());
                }
            }
        }
    }

    #[test]
    fn delete_undoes_edit(spec in arb_spec(), (path, value) in arb_design_entry(), channel in prop::sample::select(Channel::ALL.to_vec()), field in arb_field()) {
        let edited = apply(&spec, &SpecOperation::Edit { path: path.clone(), value }).unwrap().spec;
        let deleted = apply(&edited, &SpecOperation::Delete { path: path.clone() }).unwrap().spec;
        prop_assert_eq!(deleted.design().get(&path), None);

        let path = format!("encoding.{channel}");
        let edited = apply(&spec, &SpecOperation::Edit { path: path.clone(), value: serde_json::to_value(&field).unwrap() }).unwrap().spec;
        prop_assert!(edited.encoding().get(channel).is_some());
        let deleted = apply(&edited, &SpecOperation::Delete { path }).unwrap().spec;
        prop_assert_eq!(deleted.encoding().get(channel), None);
    }

    #[test]
    fn plans_survive_the_wire(ops in prop::collection::vec(arb_op(), 0..8)) {
        let plan = OperationPlan::new(ops);
        prop_assert_eq!(OperationPlan::from_json(&plan.to_json()).unwrap(), plan.clone());
        let bare = serde_json::to_string(plan.ops()).unwrap();
        prop_assert_eq!(OperationPlan::from_json(&bare).unwrap(), plan.clone());
        let tagged: Vec<Value> = serde_json::from_str(&bare).unwrap();
        for (value, op) in tagged.iter().zip(plan.ops()) {
            prop_assert_eq!(value["op"].as_str(), Some(op.name()));
        }
    }

    #[test]
    fn creative_plans_match_monolithic_construction(ops in prop::collection::vec(arb_creative_op(), 5)) {
        let plan = OperationPlan::new(ops.clone());
        match (apply_plan(&Specification::empty(), &plan), monolithic(&ops)) {
            (Ok(out), Ok(expected)) => prop_assert!(out.spec.components().equivalent(expected.components()),
                "{:#?} vs {:#?}", out.spec.components(), expected.components()),
            (Err(e), Err(index)) => prop_assert_eq!(e.index, index),
            (got, want) => prop_assert!(false, "apply_plan {:?}, oracle {:?}", got.map(|a| a.spec), want.map(|s| s.digest())),
        }
    }
}

fn arb_creative_op() -> impl Strategy<Value = SpecOperation> {
    let catalog_design = arb_design_entry().prop_filter("catalog paths only", |(p, _)| !p.starts_with("extra."));
    prop_oneof![
        prop::collection::vec(arb_field(), 1..3).prop_map(|fields| SpecOperation::SelectData { fields }),
        prop::sample::select(Mark::ALL.to_vec()).prop_map(|mark| SpecOperation::SetMarkType { mark }),
        catalog_design.prop_map(|(path, value)| SpecOperation::SetMarkStyle(MarkStyle::Design { path, value })),
        (arb_field(), prop::sample::select(Channel::STYLE.to_vec()))
            .prop_map(|(field, channel)| SpecOperation::SetMarkStyle(MarkStyle::Encoding { field, channel })),
        (prop::sample::select(vec![Axis::X, Axis::Y, Axis::Theta]), arb_field())
            .prop_map(|(axis, field)| SpecOperation::BindCoordinate { axis, field }),
        (prop::sample::select(vec![Arrangement::FacetColumn, Arrangement::FacetRow]), arb_field())
            .prop_map(|(arrangement, field)| SpecOperation::Layout { arrangement, field: Some(field) }),
    ]
}

/// Builds the final state of a creative plan directly: the last mark wins,
/// bindings replace, style channels refuse a second field, selected
/// fields accumulate. Returns the failing op index on refusal.
fn monolithic(ops: &[SpecOperation]) -> Result<Specification, usize> {
    let mut mark = None;
    let mut fields: Vec<FieldRef> = Vec::new();
    let mut bindings: BTreeMap<Channel, FieldRef> = BTreeMap::new();
    let mut design = BTreeMap::new();
    let select = |fields: &mut Vec<FieldRef>, f: &FieldRef| {
        if !fields.iter().any(|g| g.key() == f.key()) {
            fields.push(f.clone());
        }
    };
    for (i, op) in ops.iter().enumerate() {
        match op {
            SpecOperation::SelectData { fields: fs } => fs.iter().for_each(|f| select(&mut fields, f)),
            SpecOperation::SetMarkType { mark: m } => mark = Some(*m),
            SpecOperation::SetMarkStyle(MarkStyle::Design { path, value }) => {
                design.insert(path.clone(), value.clone());
            }
            SpecOperation::SetMarkStyle(MarkStyle::Encoding { field, channel }) => {
                if bindings.get(channel).is_some_and(|b| b.key() != field.key()) {
                    return Err(i);
                }
                select(&mut fields, field);
                bindings.insert(*channel, field.clone());
            }
            SpecOperation::BindCoordinate { axis, field } => {
                select(&mut fields, field);
                bindings.insert(axis.channel(), field.clone());
            }
            SpecOperation::Layout { arrangement, field: Some(field) } => {
                select(&mut fields, field);
                bindings.insert(arrangement.channel(), field.clone());
            }
            other => panic!("not a creative op: {other:?}"),
        }
    }
    Ok(Specification::rebuild(Components {
        data_schema: DataSchema { fields, filters: Vec::new() },
        mark_set: MarkSet { marks: mark.into_iter().collect() },
        encoding: EncodingMap {
            entries: bindings.into_iter().map(|(channel, field)| EncodingEntry { field, channel }).collect(),
        },
        design: DesignSet { properties: design },
    }))
}

/// Items of a specification, one string per data field, filter, mark,
/// binding and design property.
fn items(spec: &Specification) -> BTreeSet<String> {
    let c = spec.components();
    let mut out = BTreeSet::new();
    out.extend(c.data_schema.fields.iter().map(|f| format!("data:{:?}:{:?}", f.key(), f.sort)));
    out.extend(c.data_schema.filters.iter().map(|f| format!("filter:{}:{}", f.attribute, f.predicate)));
    out.extend(c.mark_set.marks.iter().map(|m| format!("mark:{m}")));
    out.extend(c.encoding.entries.iter().map(|e| format!("encoding:{}:{:?}", e.channel, e.field.key())));
    out.extend(c.design.properties.iter().map(|(k, v)| format!("design:{k}={v}")));
    out
}

#[test]
fn speechiness_color_is_one_component_change() {
    let scatter = parse_spec(
        r#"{"mark": "point", "encoding": {"x": {"field": "speechiness", "type": "quantitative"},
            "y": {"field": "popularity", "type": "quantitative"}}}"#,
    )
    .unwrap();
    let op = SpecOperation::SetMarkStyle(MarkStyle::Encoding { field: FieldRef::new("speechiness"), channel: Channel::Color });
    let out = apply(&scatter, &op).unwrap().spec;
    let (before, after) = (items(&scatter), items(&out));
    let diff: Vec<_> = before.symmetric_difference(&after).collect();
    assert_eq!(diff.len(), 1, "{diff:?}");
    assert_eq!(out.encoding().get(Channel::Color), Some(&FieldRef::new("speechiness")));
}

#[test]
fn section_three_plan_builds_the_bar_chart() {
    let plan = OperationPlan::from_json(
        r#"[{"op": "SelectData", "fields": [{"field": "region"}, {"field": "sales", "aggregate": "mean"}]},
            {"op": "SetMarkType", "mark": "bar"},
            {"op": "BindCoordinate", "axis": "x", "field": {"field": "region"}},
            {"op": "BindCoordinate", "axis": "y", "field": {"field": "sales", "aggregate": "average"}}]"#,
    )
    .unwrap();
    assert!(!plan.base_required());
    let out = apply_plan(&Specification::empty(), &plan).unwrap().spec;
    let fixture = parse_spec(r#"{"mark":"bar","encoding":{"x":{"field":"region"},"y":{"field":"sales","aggregate":"mean"}}}"#).unwrap();
    assert!(out.components().equivalent(fixture.components()));
    assert_eq!(out.encoding().get(Channel::Y), Some(&FieldRef::new("sales").with_aggregate(Aggregate::Mean)));
}

#[test]
fn declared_base_required_must_agree() {
    let err = OperationPlan::from_json(r#"{"base_required": false, "ops": [{"op": "Delete", "path": "legend"}]}"#);
    assert!(err.is_err());
    let plan = OperationPlan::from_json(r#"{"base_required": true, "ops": [{"op": "Delete", "path": "legend"}]}"#).unwrap();
    assert!(plan.base_required());
    let failed = apply_plan(&Specification::empty(), &plan).unwrap_err();
    assert_eq!(failed.index, 0);
}
