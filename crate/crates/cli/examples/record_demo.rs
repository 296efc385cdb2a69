//! Regenerates the committed demo session under `fixtures/demo`.
//!
//! cargo run -p sketchvis-cli --example record_demo [-- <out dir>]

#[tokio::main]
async fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/demo").into());
    let recorded = sketchvis_cli::demo::record(std::path::Path::new(&out)).await.expect("demo records");
    for (i, digest) in recorded.digests.iter().enumerate() {
        println!("{} {digest}", i + 1);
    }
}
