//! HTTP authentication service for the CAPTCHA graphical password scheme.
//!
//! State lives in an append-only JSON-lines file and is rebuilt by replay
//! at startup. Profiles are stored in recoverable form, because every login
//! derives the expected answer from fresh random strings; protect the store
//! file accordingly.

pub mod config;
pub mod http;
pub mod images;
pub mod service;
pub mod store;

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use thiserror::Error;

pub use config::ServerConfig;
pub use service::AuthService;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Service(#[from] service::ServiceError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Binds the configured address and serves until Ctrl-C. `on_ready`
/// receives the bound address once the listener is up.
pub async fn serve(
    config: ServerConfig,
    on_ready: impl FnOnce(SocketAddr),
) -> Result<(), ServeError> {
    serve_until(config, on_ready, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}

/// Like [`serve`], stopping when `shutdown` completes.
pub async fn serve_until(
    config: ServerConfig,
    on_ready: impl FnOnce(SocketAddr),
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    let addr = format!("{}:{}", config.bind, config.port);
    let svc = Arc::new(Mutex::new(AuthService::open(config)?));
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|source| ServeError::Bind {
            addr: addr.clone(),
            source,
        })?;
    on_ready(listener.local_addr()?);
    axum::serve(listener, http::router(svc.clone()))
        .with_graceful_shutdown(shutdown)
        .await?;
    svc.lock()
        .unwrap_or_else(|e| e.into_inner())
        .flush()
        .map_err(ServeError::Service)?;
    Ok(())
}
