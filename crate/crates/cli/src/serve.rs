use serde_json::json;
use sketchvis_service::{serve, AppState, ServiceConfig};
use tokio::net::TcpListener;

use crate::{emit, emit_error, exit, ServeArgs};

pub fn config(args: &ServeArgs, lookup: impl Fn(&str) -> Option<String>) -> Result<ServiceConfig, String> {
    let mut cfg = ServiceConfig::from_lookup(&lookup).map_err(|e| e.to_string())?;
    if let Some(port) = args.port {
        cfg.port = port;
    }
    if let Some(bind) = args.bind {
        cfg.bind = bind;
    }
    if let Some(dir) = &args.data_dir {
        cfg.data_dir = dir.clone();
    }
    cfg.provider = args.provider.apply(cfg.provider, None).map_err(|e| e.to_string())?;
    Ok(cfg)
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    tracing::info!("shutdown requested");
}

pub async fn run(args: ServeArgs, lookup: impl Fn(&str) -> Option<String>) -> u8 {
    let cfg = match config(&args, lookup) {
        Ok(cfg) => cfg,
        Err(e) => {
            emit_error("config", e);
            return exit::INPUT;
        }
    };
    let addr = cfg.addr();
    let state = match AppState::from_config(cfg) {
        Ok(state) => state,
        Err(e) => {
            emit_error("startup", e);
            return exit::STARTUP;
        }
    };
    let listener = match TcpListener::bind(addr).await {
        Ok(l) => l,
        Err(e) => {
            emit_error("bind", format!("{addr}: {e}"));
            return exit::STARTUP;
        }
    };
    let local = listener.local_addr().map_or(addr, |a| a);
    emit(&json!({ "command": "serve", "status": "listening", "addr": local.to_string(), "sessions": state.session_ids().len() }));
    match serve(state, listener, shutdown_signal()).await {
        Ok(()) => {
            emit(&json!({ "command": "serve", "status": "stopped" }));
            exit::OK
        }
        Err(e) => {
            emit_error("serve", e);
            exit::STARTUP
        }
    }
}
