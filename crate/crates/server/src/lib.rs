//! HTTP/JSON service running participant sessions, cohort administration
//! and the manual review queue.

pub mod config;
pub mod routes;
pub mod store;

use std::future::Future;
use std::sync::Arc;

use axum::http::{HeaderValue, Method};
use axum::Router;
use beliefminer_core::collection::ConfigError;
use tokio::net::TcpListener;
use tower_http::cors::{Any, CorsLayer};

pub use config::ServerConfig;
pub use routes::{router, AppState};
pub use store::{Store, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("invalid CORS origin {0:?}")]
    Cors(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn open_store(cfg: &ServerConfig) -> Result<Store, StartupError> {
    let protocol = cfg.protocol()?;
    let credibility = cfg.credibility(&protocol.catalog)?;
    Ok(Store::open(
        protocol,
        credibility,
        cfg.saturation_epsilon,
        cfg.data_dir.as_deref(),
    )?)
}

/// Router with CORS for `origin`, or for any origin when unset.
pub fn app(store: AppState, origin: Option<&str>) -> Result<Router, StartupError> {
    let cors = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST])
        .allow_headers(Any);
    let cors = match origin {
        Some(o) => cors.allow_origin(
            o.parse::<HeaderValue>()
                .map_err(|_| StartupError::Cors(o.to_string()))?,
        ),
        None => cors.allow_origin(Any),
    };
    Ok(router(store).layer(cors))
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await
}

/// Opens the store from `cfg`, binds and serves until Ctrl-C.
pub async fn run(cfg: ServerConfig) -> Result<(), StartupError> {
    let store = Arc::new(open_store(&cfg)?);
    let app = app(store, cfg.cors_origin.as_deref())?;
    let listener = TcpListener::bind(cfg.bind_addr).await?;
    tracing::info!(addr = %listener.local_addr()?, profile = ?cfg.profile.name, "listening");
    serve(listener, app, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    Ok(())
}
