//! Generators shared by the property tests and the acceptance suite.
#![allow(dead_code)]

pub mod fuzz;
pub mod oracle;
pub mod pairs;

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use serde_json::{json, Value};
use sketchvis_core::spec::catalog::{design_catalog, ValueKind};
use sketchvis_core::spec::{
    validate, Aggregate, Channel, Components, DataSchema, DesignSet, EncodingEntry, EncodingMap, FieldRef, Filter, Mark,
    MarkSet, Sort, Specification, TimeUnit,
};

pub const ATTRIBUTES: [&str; 8] = ["region", "sales", "profit", "year", "genre", "popularity", "speechiness", "Origin"];

const EXTRAS: [(&str, fn() -> Value); 3] = [
    ("extra.config.view.stroke", || json!("transparent")),
    ("extra.padding", || json!(5)),
    ("extra.usermeta.note", || json!(null)),
];

pub fn arb_aggregate() -> impl Strategy<Value = Option<Aggregate>> {
    prop_oneof![
        3 => Just(None),
        1 => prop::sample::select(vec![Aggregate::Sum, Aggregate::Mean, Aggregate::Median, Aggregate::Min, Aggregate::Max])
            .prop_map(Some),
    ]
}

pub fn arb_field() -> impl Strategy<Value = FieldRef> {
    let plain = (
        prop::sample::select(ATTRIBUTES.to_vec()),
        arb_aggregate(),
        prop_oneof![4 => Just(0u8), 1 => Just(1), 1 => Just(2)],
        prop::option::of(prop::sample::select(vec![10u32, 20, 30])),
        prop::sample::select(vec![TimeUnit::Year, TimeUnit::Month, TimeUnit::Day, TimeUnit::YearMonth]),
    )
        .prop_map(|(attr, agg, transform, maxbins, unit)| {
            let mut f = FieldRef::new(attr);
            f.aggregate = agg;
            match transform {
                1 => f.with_bin(maxbins),
                2 => f.with_time_unit(unit),
                _ => f,
            }
        });
    prop_oneof![6 => plain, 1 => Just(FieldRef::count())]
}

pub fn arb_sort() -> impl Strategy<Value = Option<Sort>> {
    prop_oneof![
        4 => Just(None),
        1 => Just(Some(Sort::Ascending)),
        1 => Just(Some(Sort::Descending)),
        1 => prop::sample::select(vec![Channel::X, Channel::Y]).prop_flat_map(|channel| {
            any::<bool>().prop_map(move |descending| Some(Sort::ByChannel { channel, descending }))
        }),
    ]
}

fn value_for(kind: ValueKind, nullable: bool) -> BoxedStrategy<Value> {
    let base: BoxedStrategy<Value> = match kind {
        ValueKind::Text => prop::sample::select(vec!["Top 20 Genres", "Sales", "%Y", "steelblue", "#ff0000", ""])
            .prop_map(|s| json!(s))
            .boxed(),
        ValueKind::Number => (0i64..400).prop_map(|n| json!(n)).boxed(),
        ValueKind::Bool => any::<bool>().prop_map(|b| json!(b)).boxed(),
        ValueKind::Enum(options) => prop::sample::select(options.to_vec()).prop_map(|s| json!(s)).boxed(),
    };
    if nullable {
        prop_oneof![4 => base, 1 => Just(Value::Null)].boxed()
    } else {
        base
    }
}

/// A catalog path with a value of the right type, or an `extra.` leaf.
pub fn arb_design_entry() -> impl Strategy<Value = (String, Value)> {
    let catalog: Vec<_> = design_catalog().iter().collect();
    let catalog_entry = prop::sample::select(catalog)
        .prop_flat_map(|p| value_for(p.kind, p.nullable).prop_map(move |v| (p.path.clone(), v)));
    let extra = prop::sample::select(EXTRAS.to_vec()).prop_map(|(path, value)| (path.to_string(), value()));
    prop_oneof![8 => catalog_entry, 1 => extra]
}

pub fn arb_filter() -> impl Strategy<Value = Filter> {
    (
        prop::sample::select(ATTRIBUTES.to_vec()),
        prop_oneof![
            prop::sample::select(vec!["Pop", "Rock", "West"]).prop_map(|v| json!({ "equal": v })),
            (0i64..100).prop_map(|n| json!({ "gte": n })),
            (0i64..50, 50i64..100).prop_map(|(a, b)| json!({ "range": [a, b] })),
        ],
    )
        .prop_map(|(attribute, predicate)| Filter { attribute: attribute.to_string(), predicate })
}

/// Components that satisfy every invariant once rebuilt: one mark, at most
/// one field per channel, every bound field in the data schema.
pub fn arb_components() -> impl Strategy<Value = Components> {
    (
        prop::sample::select(Mark::ALL.to_vec()),
        prop::collection::btree_map(prop::sample::select(Channel::ALL.to_vec()), arb_field(), 0..5),
        prop::collection::vec((arb_field(), arb_sort()), 0..3),
        prop::collection::vec(arb_filter(), 0..2),
        prop::collection::vec(arb_design_entry(), 0..6),
    )
        .prop_map(|(mark, bindings, extra_fields, filters, design)| {
            let mut data = DataSchema::default();
            let mut encoding = EncodingMap::default();
            for (channel, field) in bindings {
                data.upsert(field.clone());
                encoding.entries.push(EncodingEntry { field, channel });
            }
            for (field, sort) in extra_fields {
                let field = match sort {
                    Some(s) => field.with_sort(s),
                    None => field,
                };
                data.upsert(field);
            }
            data.filters = filters;
            Components {
                data_schema: data,
                mark_set: MarkSet { marks: vec![mark] },
                encoding,
                design: DesignSet { properties: design.into_iter().collect() },
            }
        })
}

/// Valid specifications in their rebuilt (normalized) form.
pub fn arb_spec() -> impl Strategy<Value = Specification> {
    arb_components()
        .prop_map(Specification::rebuild)
        .prop_filter("rebuilt specification validates", |s| validate(s).is_empty())
}

/// Edits `base` a little: the kind of change one authoring turn makes.
pub fn arb_successor(base: Specification) -> impl Strategy<Value = Specification> {
    let c = base.components().clone();
    (
        prop::option::weighted(0.3, prop::sample::select(Mark::ALL.to_vec())),
        prop::option::weighted(0.5, (prop::sample::select(Channel::ALL.to_vec()), arb_field())),
        prop::option::weighted(0.3, prop::sample::select(Channel::ALL.to_vec())),
        prop::collection::vec(arb_design_entry(), 0..3),
        prop::option::weighted(0.3, any::<prop::sample::Index>()),
        prop::option::weighted(0.2, arb_filter()),
        prop::option::weighted(0.2, arb_sort()),
    )
        .prop_map(move |(mark, bind, unbind, design, drop_design, filter, sort)| {
            let mut c = c.clone();
            if let Some(mark) = mark {
                c.mark_set.marks = vec![mark];
            }
            if let Some(channel) = unbind {
                c.encoding.unbind(channel);
            }
            if let Some((channel, field)) = bind {
                c.data_schema.upsert(field.clone());
                c.encoding.bind(channel, field);
            }
            if let Some(idx) = drop_design {
                if !c.design.properties.is_empty() {
                    let key = c.design.properties.keys().nth(idx.index(c.design.properties.len())).cloned().unwrap();
                    c.design.properties.remove(&key);
                }
            }
            c.design.properties.extend(design);
            if let Some(filter) = filter {
                c.data_schema.filters.push(filter);
            }
            if let (Some(sort), Some(first)) = (sort, c.data_schema.fields.first_mut()) {
                first.sort = sort;
            }
            // Drop schema fields no longer bound half of the time, as a
            // chart rewrite would.
            if c.design.properties.len() % 2 == 0 {
                let bound: Vec<_> = c.encoding.entries.iter().map(|e| e.field.key()).collect();
                c.data_schema.fields.retain(|f| bound.contains(&f.key()));
            }
            Specification::rebuild(c)
        })
        .prop_filter("successor validates", |s| validate(s).is_empty())
}

/// `(before, after)` pairs where `after` is either unrelated or a nearby
/// revision of `before`.
pub fn arb_pair() -> impl Strategy<Value = (Specification, Specification)> {
    prop_oneof![
        1 => (arb_spec(), arb_spec()),
        3 => arb_spec().prop_flat_map(|before| (Just(before.clone()), arb_successor(before))),
    ]
}

/// Deterministic draws from `strategy`, independent of proptest's
/// environment configuration.
pub fn sample<S: Strategy>(strategy: S, seed: u8, n: usize) -> Vec<S::Value> {
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]);
    let mut runner = TestRunner::new_with_rng(Config::default(), rng);
    (0..n)
        .map(|_| strategy.new_tree(&mut runner).expect("strategy produces values").current())
        .collect()
}
