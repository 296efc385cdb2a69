#![allow(dead_code)]

use std::io::Cursor;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use async_trait::async_trait;
use serde_json::{json, Value};
use sketchvis_client::Client;
use sketchvis_core::ops::{OperationPlan, SpecOperation};
use sketchvis_core::prompt::{compose_response, ModelProvider, PromptEnvelope, ProviderConfig, ProviderError};
use sketchvis_service::{spawn, AppState, RunningService, ServiceConfig};
use tokio::sync::Semaphore;

pub fn config(dir: &Path) -> ServiceConfig {
    ServiceConfig::new(dir, ProviderConfig::mock(dir.join("unused-fixtures")))
}

pub async fn start(dir: &Path, provider: Arc<dyn ModelProvider>) -> (RunningService, Client) {
    start_with(config(dir), provider).await
}

pub async fn start_with(cfg: ServiceConfig, provider: Arc<dyn ModelProvider>) -> (RunningService, Client) {
    let state = AppState::load(cfg, provider).expect("state loads");
    let running = spawn(state, SocketAddr::from(([127, 0, 0, 1], 0))).await.expect("service binds");
    let client = Client::new(running.base_url());
    (running, client)
}

/// Consumer price index per category, 2003 to 2021.
pub fn cpi_csv() -> Vec<u8> {
    let mut out = String::from("year,CPI,category\n");
    for (i, category) in ["Food", "Housing", "Transport"].iter().enumerate() {
        for year in 2003..=2021 {
            let cpi = 180.0 + (year - 2003) as f64 * 3.5 + i as f64 * 12.25;
            out.push_str(&format!("{year},{cpi},{category}\n"));
        }
    }
    out.into_bytes()
}

/// A small white canvas with a few dark bands, standing in for a
/// streamgraph drawing.
pub fn sketch_png() -> Vec<u8> {
    let img = image::RgbImage::from_fn(96, 64, |x, y| {
        let band = (y as i32 - 32 + ((x as f64 / 12.0).sin() * 10.0) as i32).abs();
        if band % 11 == 0 {
            image::Rgb([20, 20, 20])
        } else {
            image::Rgb([255, 255, 255])
        }
    });
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png).expect("png encodes");
    out.into_inner()
}

fn field(name: &str) -> Value {
    json!({ "field": name })
}

fn op(v: Value) -> SpecOperation {
    serde_json::from_value(v).expect("operation parses")
}

pub fn streamgraph_spec() -> Value {
    json!({
        "mark": "area",
        "encoding": {
            "x": { "field": "year", "type": "temporal" },
            "y": { "field": "CPI", "type": "quantitative", "stack": "center" },
            "color": { "field": "category", "type": "nominal" }
        }
    })
}

pub fn streamgraph_response() -> String {
    let plan = OperationPlan::new(vec![
        op(json!({ "op": "SelectData", "fields": [field("year"), field("CPI"), field("category")] })),
        op(json!({ "op": "SetMarkType", "mark": "area" })),
        op(json!({ "op": "BindCoordinate", "axis": "x", "field": field("year") })),
        op(json!({ "op": "BindCoordinate", "axis": "y", "field": field("CPI") })),
        op(json!({ "op": "SetMarkStyle", "scope": "encoding", "field": field("category"), "channel": "color" })),
        op(json!({ "op": "SetMarkStyle", "scope": "design", "path": "stack.y", "value": "center" })),
    ]);
    compose_response(
        "The sketch shows flowing bands stacked around a centre line over time.",
        "A streamgraph of CPI per category over the years.",
        &plan,
        "A streamgraph of CPI by category from 2003 to 2021.",
        &streamgraph_spec(),
        &[],
    )
}

pub fn line_response() -> String {
    let plan = OperationPlan::new(vec![
        op(json!({ "op": "SetMarkType", "mark": "line" })),
        op(json!({ "op": "Edit", "path": "stack.y", "value": null })),
    ]);
    let mut spec = streamgraph_spec();
    spec["mark"] = json!("line");
    spec["encoding"]["y"]["stack"] = Value::Null;
    compose_response("The user wants lines.", "Switch the mark.", &plan, "CPI lines per category.", &spec, &[])
}

pub fn ideas_response(specs: &[Value]) -> String {
    specs.iter().map(|s| format!("```json\n{s}\n```\n")).collect()
}

pub fn bar_idea() -> Value {
    json!({
        "mark": "bar",
        "encoding": {
            "x": { "field": "category", "type": "nominal" },
            "y": { "field": "CPI", "type": "quantitative", "aggregate": "mean" }
        }
    })
}

pub fn heatmap_idea() -> Value {
    json!({
        "mark": "rect",
        "encoding": {
            "x": { "field": "year", "type": "temporal" },
            "y": { "field": "category", "type": "nominal" },
            "color": { "field": "CPI", "type": "quantitative" }
        }
    })
}

/// Holds every call until a permit is released.
pub struct GatedProvider {
    pub gate: Semaphore,
    pub inner: Arc<dyn ModelProvider>,
}

impl GatedProvider {
    pub fn new(inner: Arc<dyn ModelProvider>) -> Arc<Self> {
        Arc::new(GatedProvider { gate: Semaphore::new(0), inner })
    }
}

#[async_trait]
impl ModelProvider for GatedProvider {
    async fn complete(&self, envelope: &PromptEnvelope) -> Result<String, ProviderError> {
        self.gate.acquire().await.expect("gate open").forget();
        self.inner.complete(envelope).await
    }
}
