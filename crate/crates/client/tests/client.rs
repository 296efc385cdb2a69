use std::net::SocketAddr;
use std::sync::Arc;

use sketchvis_client::{Client, ClientError, TurnRequest};
use sketchvis_core::prompt::{ProviderConfig, ScriptedProvider};
use sketchvis_service::{spawn, AppState, ServiceConfig};

#[tokio::test]
async fn typed_errors_and_base_url() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ServiceConfig::new(dir.path(), ProviderConfig::mock(dir.path()));
    let state = AppState::load(cfg, Arc::new(ScriptedProvider::default())).unwrap();
    let svc = spawn(state, SocketAddr::from(([127, 0, 0, 1], 0))).await.unwrap();

    let client = Client::new(format!("{}/", svc.base_url()));
    assert_eq!(client.base_url(), svc.base_url());
    assert_eq!(client.health().await.unwrap().status, "ok");

    let err = client.turn("missing", TurnRequest::text("hi")).await.unwrap_err();
    match &err {
        ClientError::Api { status, detail } => {
            assert_eq!(status.as_u16(), 404);
            assert_eq!(detail.kind, "unknown_session");
        }
        other => panic!("unexpected {other:?}"),
    }

    // A route the service does not know answers without an error body.
    let err = client.accept_idea("a/b", 0).await.unwrap_err();
    assert!(matches!(err, ClientError::Decode { .. }), "{err:?}");
    assert_eq!(err.kind(), None);

    let addr = svc.addr;
    svc.stop().await.unwrap();
    let err = Client::new(format!("http://{addr}")).health().await.unwrap_err();
    assert!(matches!(err, ClientError::Transport(_)), "{err:?}");
}
