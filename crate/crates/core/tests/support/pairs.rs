//! Handcrafted generated/truth pairs for the evaluator.

use serde_json::{json, Value};

pub struct Pair {
    pub name: &'static str,
    pub generated: Value,
    pub truth: Value,
}

fn sales_bar() -> Value {
    json!({"mark": "bar", "encoding": {
        "x": {"field": "region", "type": "nominal"},
        "y": {"field": "sales", "aggregate": "mean", "type": "quantitative"}}})
}

fn cpi_line() -> Value {
    json!({"mark": "line", "encoding": {
        "x": {"field": "year", "type": "temporal"},
        "y": {"field": "CPI", "type": "quantitative"},
        "color": {"field": "category", "type": "nominal"}}})
}

pub fn pairs() -> Vec<Pair> {
    let mut bar_for_line = cpi_line();
    bar_for_line["mark"] = json!("bar");

    let faceted_truth = json!({"mark": "point", "encoding": {
        "x": {"field": "Horsepower", "type": "quantitative"},
        "y": {"field": "Miles_per_Gallon", "type": "quantitative"},
        "column": {"field": "Origin", "type": "nominal"}}});
    let faceted_generated = json!({"mark": "circle", "encoding": {
        "x": {"field": "Horsepower", "type": "quantitative"},
        "y": {"field": "Miles_per_Gallon", "type": "quantitative"},
        "row": {"field": "Origin", "type": "nominal"}}});

    let mut legend_moved = cpi_line();
    legend_moved["encoding"]["color"]["legend"] = json!({"orient": "top-right"});
    legend_moved["encoding"]["x"]["axis"] = json!({"title": null});
    let mut titled = cpi_line();
    titled["encoding"]["x"]["axis"] = json!({"title": "Year"});

    let mut synonyms = sales_bar();
    synonyms["encoding"]["y"]["aggregate"] = json!("average");
    synonyms["encoding"]["x"]["field"] = json!("Region");
    synonyms["config"] = json!({"axis": {"grid": true}});

    let histogram = json!({"mark": "bar", "encoding": {
        "x": {"field": "popularity", "bin": true},
        "y": {"aggregate": "count"}}});
    let mut histogram_bins = histogram.clone();
    histogram_bins["encoding"]["x"]["bin"] = json!({"maxbins": 20});

    let top_genres = json!({"mark": "bar", "title": "Top 20 Genres", "encoding": {
        "x": {"field": "genre", "sort": "-y"},
        "y": {"aggregate": "count"}}});
    let mut unsorted = top_genres.clone();
    unsorted["encoding"]["x"]["sort"] = json!("ascending");
    unsorted["title"] = json!({"text": "Genres", "subtitle": "by track count"});

    let filtered = json!({"mark": "bar", "transform": [{"filter": {"field": "year", "gte": 2010}}], "encoding": {
        "x": {"field": "genre"}, "y": {"field": "popularity", "aggregate": "mean"}}});
    let mut filtered_other = filtered.clone();
    filtered_other["transform"] = json!([{"filter": {"field": "year", "gte": 2015}}]);

    let swapped = json!({"mark": "bar", "encoding": {
        "y": {"field": "region", "type": "nominal"},
        "x": {"field": "sales", "aggregate": "mean", "type": "quantitative"}}});

    let donut = json!({"mark": {"type": "arc", "innerRadius": 50}, "encoding": {
        "theta": {"aggregate": "count"},
        "color": {"field": "speechiness", "bin": true, "type": "ordinal", "scale": {"scheme": "blues"}}}});
    let mut pie = donut.clone();
    pie["mark"] = json!("arc");
    pie["encoding"]["color"]["scale"] = json!({"scheme": "greens", "reverse": true});

    vec![
        Pair { name: "identical bar chart", generated: sales_bar(), truth: sales_bar() },
        Pair { name: "bar instead of line", generated: bar_for_line, truth: cpi_line() },
        Pair { name: "faceted by row instead of column", generated: faceted_generated, truth: faceted_truth },
        Pair { name: "legend moved and axis title removed", generated: legend_moved, truth: cpi_line() },
        Pair { name: "default axis title and lexical variants", generated: synonyms, truth: sales_bar() },
        Pair { name: "explicit axis title", generated: titled, truth: cpi_line() },
        Pair { name: "bin count differs", generated: histogram_bins, truth: histogram },
        Pair { name: "sort and title differ", generated: unsorted, truth: top_genres },
        Pair { name: "filter threshold differs", generated: filtered_other, truth: filtered },
        Pair { name: "axes swapped", generated: swapped, truth: sales_bar() },
        Pair { name: "donut versus pie", generated: pie, truth: donut },
    ]
}
