//! HTTP service for RPYS analyses.
//!
//! Uploads are parsed and analyzed in memory, then released; only the
//! derived session data is kept, and only until the session is deleted or
//! sits idle past its TTL.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/api/sessions?mode=&from=&to=` | multipart field `file` |
//! | GET | `/api/sessions/{id}/spectrogram` | standard mode |
//! | GET | `/api/sessions/{id}/heatmap` | multi mode |
//! | GET | `/api/sessions/{id}/table?q=&sort=&dir=&limit=` | |
//! | DELETE | `/api/sessions/{id}` | idempotent |
//! | GET | `/api/metrics` | live session count |

mod api;
pub mod config;
pub mod session;

use std::sync::Arc;
use std::time::Duration;

pub use api::{router, ApiError, AppState};
pub use config::ServiceConfig;

/// Periodically drop idle sessions.
pub fn spawn_expiry(state: Arc<AppState>) -> tokio::task::JoinHandle<()> {
    let period = (state.sessions.ttl() / 4).clamp(Duration::from_millis(100), Duration::from_secs(60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let expired = state.sessions.expire();
            if expired > 0 {
                tracing::info!(expired, "expired idle sessions");
            }
        }
    })
}

pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    let state = AppState::new(config);
    spawn_expiry(Arc::clone(&state));
    axum::serve(listener, router(state)).await
}
