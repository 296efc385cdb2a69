//! Session service: dataset ingestion, chart turns, design ideas and the
//! authoring-flow log, over HTTP/JSON.

mod config;
mod error;
mod handlers;
pub mod session;
pub mod store;

use std::collections::HashMap;
use std::future::Future;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::Router;
use sketchvis_core::prompt::{provider_from_config, ModelProvider, Orchestrator, ProviderError};
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub use config::ServiceConfig;
pub use error::ApiError;
use session::Session;

/// One session: its state and the flag that keeps mutations serial.
pub struct SessionHandle {
    pub state: Mutex<Session>,
    busy: AtomicBool,
}

/// Clears the busy flag when dropped.
pub(crate) struct BusyGuard(Arc<SessionHandle>);

impl Drop for BusyGuard {
    fn drop(&mut self) {
        self.0.busy.store(false, Ordering::SeqCst);
    }
}

impl SessionHandle {
    fn new(session: Session) -> Arc<Self> {
        Arc::new(SessionHandle { state: Mutex::new(session), busy: AtomicBool::new(false) })
    }

    /// Claims the session for one mutating operation, or fails at once.
    pub(crate) fn claim(self: &Arc<Self>) -> Result<BusyGuard, ApiError> {
        if self.busy.swap(true, Ordering::SeqCst) {
            return Err(ApiError::InFlight);
        }
        Ok(BusyGuard(self.clone()))
    }

    /// Whether a mutating operation currently holds the session.
    pub fn busy(&self) -> bool {
        self.busy.load(Ordering::SeqCst)
    }

    pub fn snapshot(&self) -> Session {
        self.state.lock().expect("session lock").clone()
    }
}

pub struct AppState {
    pub config: ServiceConfig,
    pub orchestrator: Orchestrator,
    sessions: RwLock<HashMap<String, Arc<SessionHandle>>>,
}

#[derive(Debug, thiserror::Error)]
pub enum StartError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("session store: {0}")]
    Store(String),
    #[error("bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
}

impl AppState {
    /// Loads every persisted session under `config.data_dir`.
    pub fn load(config: ServiceConfig, provider: Arc<dyn ModelProvider>) -> Result<Arc<Self>, StartError> {
        let dir = store::sessions_dir(&config.data_dir);
        std::fs::create_dir_all(&dir).map_err(|e| StartError::Store(format!("{}: {e}", dir.display())))?;
        let mut sessions = HashMap::new();
        let mut paths: Vec<_> = std::fs::read_dir(&dir)
            .map_err(|e| StartError::Store(e.to_string()))?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for path in paths {
            let entries = store::read_log(&path).map_err(|e| StartError::Store(e.to_string()))?;
            let session = Session::replay(&entries, &config.ingest)
                .map_err(|e| StartError::Store(format!("{}: {e}", path.display())))?;
            sessions.insert(session.id.clone(), SessionHandle::new(session));
        }
        tracing::info!(count = sessions.len(), dir = %dir.display(), "loaded sessions");
        let orchestrator = Orchestrator::new(provider, config.prompt.clone());
        Ok(Arc::new(AppState { config, orchestrator, sessions: RwLock::new(sessions) }))
    }

    pub fn from_config(config: ServiceConfig) -> Result<Arc<Self>, StartError> {
        let provider = provider_from_config(&config.provider)?;
        AppState::load(config, provider)
    }

    pub fn session(&self, id: &str) -> Result<Arc<SessionHandle>, ApiError> {
        self.sessions
            .read()
            .expect("registry lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::UnknownSession(id.to_string()))
    }

    pub(crate) fn insert(&self, session: Session) {
        let id = session.id.clone();
        self.sessions.write().expect("registry lock").insert(id, SessionHandle::new(session));
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().expect("registry lock").keys().cloned().collect();
        ids.sort();
        ids
    }
}

/// Upper bound on request bodies; the dataset cap is enforced separately.
const BODY_LIMIT: usize = 16 * 1024 * 1024;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(handlers::health))
        .route("/sessions", post(handlers::create_session))
        .route("/sessions/{id}/dataset", post(handlers::ingest_dataset))
        .route("/sessions/{id}/turn", post(handlers::handle_turn))
        .route("/sessions/{id}/flow", get(handlers::get_flow))
        .route("/sessions/{id}/spec", get(handlers::get_spec))
        .route("/sessions/{id}/ideas", post(handlers::request_ideas))
        .route("/sessions/{id}/ideas/{index}/accept", post(handlers::accept_idea))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Serves until `shutdown` resolves. Every log append is synced as it
/// happens, so there is nothing left to flush afterwards.
pub async fn serve(state: Arc<AppState>, listener: TcpListener, shutdown: impl Future<Output = ()> + Send + 'static) -> std::io::Result<()> {
    tracing::info!(addr = ?listener.local_addr().ok(), "serving");
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

/// A service running on a background task.
pub struct RunningService {
    pub addr: SocketAddr,
    pub state: Arc<AppState>,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl RunningService {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub async fn stop(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.task.await.map_err(std::io::Error::other)?
    }
}

/// Binds `addr` (port 0 picks a free port) and serves in the background.
pub async fn spawn(state: Arc<AppState>, addr: SocketAddr) -> Result<RunningService, StartError> {
    let listener = TcpListener::bind(addr).await.map_err(|source| StartError::Bind { addr, source })?;
    let addr = listener.local_addr().map_err(|source| StartError::Bind { addr, source })?;
    let (tx, rx) = oneshot::channel();
    let task = tokio::spawn(serve(state.clone(), listener, async {
        let _ = rx.await;
    }));
    Ok(RunningService { addr, state, shutdown: Some(tx), task })
}
