use clap::Parser;

#[tokio::main]
async fn main() -> std::process::ExitCode {
    sketchvis_cli::init_tracing();
    let cli = sketchvis_cli::Cli::parse();
    std::process::ExitCode::from(sketchvis_cli::run(cli).await)
}
