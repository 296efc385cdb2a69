//! The Spotify top-tracks walkthrough: six sketch and text turns followed by
//! a design-idea request. Used to record the committed demo fixtures and by
//! tests that replay them.

use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sketchvis_client::{Client, TurnRequest};
use sketchvis_core::dataset::{ingest, DataFormat};
use sketchvis_core::ops::diff_to_plan;
use sketchvis_core::prompt::{compose_response, InterpretationTag, RecordingProvider, ScriptedProvider};
use sketchvis_core::spec::{canonicalize_with, spec_from_tree, Specification};
use sketchvis_service::store::log_path;
use sketchvis_service::{spawn, AppState, ServiceConfig};

pub const DATASET_FILE: &str = "spotify_top_tracks.csv";
pub const LOG_FILE: &str = "session.jsonl";
pub const FIXTURE_DIR: &str = "fixtures";

const GENRES: [&str; 15] = [
    "pop", "hip hop", "rock", "dance pop", "r&b", "latin", "edm", "country", "indie", "metal", "soul", "reggaeton",
    "k-pop", "folk", "trap",
];

/// 2000 synthetic tracks, 2000 to 2019, from a fixed seed.
pub fn dataset_csv() -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(2000);
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["song", "artist", "genre", "year", "popularity", "danceability", "energy", "tempo", "speechiness"])
        .expect("in-memory write");
    for i in 0..2000 {
        let genre = GENRES[rng.random_range(0..GENRES.len())];
        let speechiness: f64 = rng.random_range(0.02..0.2f64) + if genre.contains("hip hop") || genre == "trap" { 0.2 } else { 0.0 };
        let popularity = (rng.random_range(20.0..90.0f64) - speechiness * 25.0).round().max(0.0);
        writer
            .write_record([
                format!("Track {i:04}"),
                format!("Artist {:03}", rng.random_range(0..400)),
                genre.to_string(),
                rng.random_range(2000..2020).to_string(),
                popularity.to_string(),
                format!("{:.3}", rng.random_range(0.3..0.95f64)),
                format!("{:.3}", rng.random_range(0.2..1.0f64)),
                format!("{:.1}", rng.random_range(60.0..200.0f64)),
                format!("{speechiness:.3}"),
            ])
            .expect("in-memory write");
    }
    writer.into_inner().expect("flush")
}

struct Canvas(RgbImage);

impl Canvas {
    fn new() -> Self {
        Canvas(RgbImage::from_pixel(320, 240, Rgb([255, 255, 255])))
    }

    fn line(&mut self, (x0, y0): (i32, i32), (x1, y1): (i32, i32)) {
        let steps = (x1 - x0).abs().max((y1 - y0).abs()).max(1);
        for s in 0..=steps {
            let x = x0 + (x1 - x0) * s / steps;
            let y = y0 + (y1 - y0) * s / steps;
            if (0..320).contains(&x) && (0..240).contains(&y) {
                self.0.put_pixel(x as u32, y as u32, Rgb([30, 30, 30]));
            }
        }
    }

    fn axes(&mut self) {
        self.line((40, 20), (40, 200));
        self.line((40, 200), (300, 200));
    }

    fn rect(&mut self, x: i32, y: i32, w: i32, h: i32) {
        self.line((x, y), (x + w, y));
        self.line((x + w, y), (x + w, y + h));
        self.line((x + w, y + h), (x, y + h));
        self.line((x, y + h), (x, y));
    }

    fn circle(&mut self, cx: i32, cy: i32, r: i32) {
        let points: Vec<(i32, i32)> = (0..=72)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 72.0;
                (cx + (r as f64 * a.cos()).round() as i32, cy + (r as f64 * a.sin()).round() as i32)
            })
            .collect();
        for w in points.windows(2) {
            self.line(w[0], w[1]);
        }
    }

    /// A squiggle standing in for handwriting.
    fn scribble(&mut self, x: i32, y: i32, len: i32) {
        for i in 0..len / 6 {
            self.line((x + i * 6, y), (x + i * 6 + 3, y - 6));
            self.line((x + i * 6 + 3, y - 6), (x + i * 6 + 6, y));
        }
    }

    fn png(self) -> Vec<u8> {
        let mut out = Cursor::new(Vec::new());
        self.0.write_to(&mut out, image::ImageFormat::Png).expect("png encodes");
        out.into_inner()
    }
}

/// One drawing per sketch turn, in turn order.
pub fn sketches() -> Vec<Vec<u8>> {
    let mut axis = Canvas::new();
    axis.axes();
    axis.scribble(140, 225, 60);

    let mut ranked = Canvas::new();
    ranked.axes();
    for (i, h) in [160, 130, 110, 90, 70, 55].iter().enumerate() {
        ranked.rect(50 + i as i32 * 40, 200 - h, 28, *h);
    }
    ranked.scribble(120, 15, 80);
    ranked.scribble(150, 225, 36);

    let mut question = Canvas::new();
    question.axes();
    for (i, h) in [160, 130, 110, 90].iter().enumerate() {
        question.rect(50 + i as i32 * 40, 200 - h, 28, *h);
    }
    question.line((220, 100), (270, 100));
    question.line((270, 100), (262, 94));
    question.line((270, 100), (262, 106));
    question.circle(290, 80, 10);
    question.line((290, 90), (290, 100));

    let mut donut = Canvas::new();
    donut.circle(160, 115, 80);
    donut.circle(160, 115, 40);
    donut.line((160, 35), (160, 75));
    donut.line((230, 75), (195, 95));
    donut.scribble(120, 225, 72);

    let mut scatter = Canvas::new();
    scatter.axes();
    for (x, y) in [(70, 90), (90, 120), (120, 80), (150, 150), (180, 130), (220, 170), (260, 180)] {
        scatter.circle(x, y, 3);
    }
    scatter.scribble(140, 225, 66);
    scatter.scribble(4, 110, 30);

    let mut legend = Canvas::new();
    legend.axes();
    for (x, y) in [(70, 90), (90, 120), (120, 80), (150, 150)] {
        legend.circle(x, y, 3);
    }
    for i in 0..4 {
        legend.rect(270, 30 + i * 18, 12, 12);
    }
    legend.scribble(250, 18, 48);

    vec![axis.png(), ranked.png(), question.png(), donut.png(), scatter.png(), legend.png()]
}

pub struct DemoTurn {
    pub utterance: Option<&'static str>,
    /// Index into [`sketches`].
    pub sketch: Option<usize>,
    pub target: Value,
    pub observation: &'static str,
    pub thinking: &'static str,
    pub summary: &'static str,
    pub tags: Value,
}

fn tag(component: &str, item: &str, label: &str) -> Value {
    json!({ "component": component, "item": item, "label": label })
}

pub fn turns() -> Vec<DemoTurn> {
    vec![
        DemoTurn {
            utterance: Some("popularity"),
            sketch: Some(0),
            target: json!({
                "mark": "bar",
                "encoding": {
                    "x": { "field": "popularity", "bin": true, "type": "quantitative" },
                    "y": { "aggregate": "count", "type": "quantitative" }
                }
            }),
            observation: "An empty coordinate system with the word popularity under the horizontal axis.",
            thinking: "One quantitative field on x and nothing on y suggests its distribution.",
            summary: "A histogram of track popularity.",
            tags: json!([tag("data", "data.field.popularity", "explicit"), tag("mark", "mark", "implicit"), tag("encoding", "encoding.y", "implicit")]),
        },
        DemoTurn {
            utterance: Some("Top 20 Genres"),
            sketch: Some(1),
            target: json!({
                "title": "Top 20 Genres",
                "mark": "bar",
                "encoding": {
                    "x": { "field": "genre", "type": "nominal", "sort": "-y" },
                    "y": { "field": "popularity", "aggregate": "mean", "type": "quantitative" }
                }
            }),
            observation: "Bars of decreasing height, the x axis relabelled genre and a title Top 20 Genres.",
            thinking: "Rank genres by their mean popularity, highest first.",
            summary: "Genres ranked by mean popularity.",
            tags: json!([tag("encoding", "encoding.x", "explicit"), tag("data", "data.field.mean(popularity)", "implicit")]),
        },
        DemoTurn {
            utterance: None,
            sketch: Some(2),
            target: json!({
                "title": "Average Danceability of the Top 20 Genres",
                "mark": "bar",
                "encoding": {
                    "x": { "field": "genre", "type": "nominal", "sort": "-y" },
                    "y": { "field": "danceability", "aggregate": "mean", "type": "quantitative" }
                }
            }),
            observation: "An arrow from the bar chart to a question mark.",
            thinking: "The user asks what else characterises these genres; danceability is a natural next feature.",
            summary: "Average danceability per genre.",
            tags: json!([tag("data", "data.field.mean(danceability)", "implicit"), tag("design", "title.text", "implicit")]),
        },
        DemoTurn {
            utterance: Some("speechiness"),
            sketch: Some(3),
            target: json!({
                "mark": { "type": "arc", "innerRadius": 50 },
                "encoding": {
                    "theta": { "aggregate": "count", "type": "quantitative" },
                    "color": { "field": "speechiness", "bin": true, "type": "ordinal" }
                }
            }),
            observation: "A ring divided into slices, labelled speechiness.",
            thinking: "A donut of record counts per speechiness range.",
            summary: "A donut chart of tracks by speechiness range.",
            tags: json!([tag("mark", "mark", "explicit"), tag("encoding", "encoding.color", "implicit")]),
        },
        DemoTurn {
            utterance: Some("speechiness vs popularity"),
            sketch: Some(4),
            target: json!({
                "mark": "point",
                "encoding": {
                    "x": { "field": "speechiness", "type": "quantitative" },
                    "y": { "field": "popularity", "type": "quantitative" }
                }
            }),
            observation: "Axes labelled speechiness and popularity with scattered dots.",
            thinking: "A scatter plot of the two quantities.",
            summary: "Speechiness against popularity, one dot per track.",
            tags: json!([tag("encoding", "encoding.x", "explicit"), tag("encoding", "encoding.y", "explicit")]),
        },
        DemoTurn {
            utterance: Some("add a hip-hop style color legend for speechiness"),
            sketch: Some(5),
            target: json!({
                "mark": "point",
                "encoding": {
                    "x": { "field": "speechiness", "type": "quantitative" },
                    "y": { "field": "popularity", "type": "quantitative" },
                    "color": { "field": "speechiness", "type": "quantitative" }
                }
            }),
            observation: "The scatter plot with a stack of legend swatches at the top right.",
            thinking: "Keep the scatter plot and add a colour encoding for speechiness.",
            summary: "The scatter plot now colours tracks by speechiness.",
            tags: json!([tag("encoding", "encoding.color", "explicit")]),
        },
    ]
}

pub const IDEA_COUNT: usize = 2;

/// Alternative designs returned for the final chart.
pub fn idea_specs() -> Vec<Value> {
    vec![
        json!({
            "mark": "point",
            "encoding": {
                "x": { "field": "speechiness", "type": "quantitative" },
                "y": { "field": "popularity", "type": "quantitative" },
                "size": { "field": "speechiness", "type": "quantitative" }
            }
        }),
        json!({
            "mark": "rect",
            "encoding": {
                "x": { "field": "speechiness", "bin": true, "type": "quantitative" },
                "y": { "field": "popularity", "bin": true, "type": "quantitative" },
                "color": { "aggregate": "count", "type": "quantitative" }
            }
        }),
    ]
}

/// Model responses in call order: one per turn, then the idea list. Each
/// plan is the operation difference between consecutive charts.
pub fn responses() -> Vec<String> {
    let columns = ingest(&dataset_csv(), DataFormat::Csv).expect("demo data ingests").column_table();
    let mut previous = Specification::default();
    let mut out = Vec::new();
    for turn in turns() {
        let target = canonicalize_with(&spec_from_tree(turn.target.clone()).expect("demo spec parses").0, Some(&columns));
        let plan = diff_to_plan(&previous, &target);
        let tags: Vec<InterpretationTag> = serde_json::from_value(turn.tags).expect("demo tags parse");
        out.push(compose_response(turn.observation, turn.thinking, &plan, turn.summary, &turn.target, &tags));
        previous = target;
    }
    out.push(idea_specs().iter().map(|s| format!("```json\n{s:#}\n```\n")).collect());
    out
}

#[derive(Debug)]
pub struct Recorded {
    pub log: PathBuf,
    pub fixtures: PathBuf,
    pub dataset: PathBuf,
    /// Spec digest after each turn, then after the accepted idea.
    pub digests: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("service: {0}")]
    Start(#[from] sketchvis_service::StartError),
    #[error("client: {0}")]
    Client(#[from] sketchvis_client::ClientError),
}

/// Plays the walkthrough against a scripted model and writes the dataset,
/// the session log and one mock fixture per model call into `out`.
pub async fn record(out: &Path) -> Result<Recorded, DemoError> {
    std::fs::create_dir_all(out)?;
    let fixtures = out.join(FIXTURE_DIR);
    if fixtures.exists() {
        std::fs::remove_dir_all(&fixtures)?;
    }
    let dataset = out.join(DATASET_FILE);
    std::fs::write(&dataset, dataset_csv())?;

    let scratch = tempfile::tempdir()?;
    let provider = Arc::new(RecordingProvider::new(Arc::new(ScriptedProvider::new(responses())), &fixtures));
    let cfg = ServiceConfig::new(scratch.path(), sketchvis_core::prompt::ProviderConfig::mock(&fixtures));
    let state = AppState::load(cfg, provider)?;
    let svc = spawn(state, std::net::SocketAddr::from(([127, 0, 0, 1], 0))).await?;
    let client = Client::new(svc.base_url());

    let session = client.create_session().await?;
    client.upload_dataset(&session, DataFormat::Csv, dataset_csv()).await?;
    let sketches = sketches();
    let mut digests = Vec::new();
    for turn in turns() {
        let request = TurnRequest {
            utterance: turn.utterance.map(str::to_string),
            sketch: turn.sketch.map(|i| sketches[i].clone()),
            selection: None,
        };
        digests.push(client.turn(&session, request).await?.spec_digest);
    }
    client.ideas(&session, IDEA_COUNT).await?;
    digests.push(client.accept_idea(&session, 0).await?.digest.unwrap_or_default());
    svc.stop().await?;

    let log = out.join(LOG_FILE);
    std::fs::copy(log_path(scratch.path(), &session), &log)?;
    Ok(Recorded { log, fixtures, dataset, digests })
}
