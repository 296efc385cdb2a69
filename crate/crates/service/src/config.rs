use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;

use sketchvis_core::dataset::IngestConfig;
use sketchvis_core::prompt::{PromptConfig, ProviderConfig, ProviderError};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub bind: IpAddr,
    pub port: u16,
    pub provider: ProviderConfig,
    pub prompt: PromptConfig,
    pub ingest: IngestConfig,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>, provider: ProviderConfig) -> Self {
        ServiceConfig {
            data_dir: data_dir.into(),
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            provider,
            prompt: PromptConfig::default(),
            ingest: IngestConfig::default(),
        }
    }

    /// `SKETCHVIS_DATA_DIR` (default `./sketchvis-data`), `SKETCHVIS_PORT`
    /// (default 8080) and the provider variables.
    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ProviderError> {
        let provider = ProviderConfig::from_lookup(&lookup)?;
        let mut cfg = ServiceConfig::new(lookup("SKETCHVIS_DATA_DIR").unwrap_or_else(|| "sketchvis-data".into()), provider);
        if let Some(port) = lookup("SKETCHVIS_PORT") {
            cfg.port = port.parse().map_err(|_| ProviderError::Config(format!("bad SKETCHVIS_PORT `{port}`")))?;
        }
        Ok(cfg)
    }

    pub fn from_env() -> Result<Self, ProviderError> {
        ServiceConfig::from_lookup(|k| std::env::var(k).ok().filter(|v| !v.is_empty()))
    }

    pub fn addr(&self) -> SocketAddr {
        SocketAddr::new(self.bind, self.port)
    }
}
