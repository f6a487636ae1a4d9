use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use rpys_core::index::DEFAULT_ROW_LIMIT;
use rpys_core::DEFAULT_MAX_BYTES;
use thiserror::Error;

#[derive(Debug, Error)]
#[error("invalid value {value:?} for {var}")]
pub struct ConfigError {
    pub var: &'static str,
    pub value: String,
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub max_upload_bytes: u64,
    /// Idle time after which a session is dropped.
    pub session_ttl: Duration,
    /// Directory of web client assets served at `/`.
    pub static_dir: Option<PathBuf>,
    /// Upper bound on rows returned by one table query.
    pub max_table_rows: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            max_upload_bytes: DEFAULT_MAX_BYTES,
            session_ttl: Duration::from_secs(60 * 60),
            static_dir: None,
            max_table_rows: DEFAULT_ROW_LIMIT,
        }
    }
}

fn parse_var<T: std::str::FromStr>(
    lookup: &impl Fn(&str) -> Option<String>,
    var: &'static str,
) -> Result<Option<T>, ConfigError> {
    match lookup(var) {
        None => Ok(None),
        Some(value) => value.trim().parse().map(Some).map_err(|_| ConfigError { var, value }),
    }
}

impl ServiceConfig {
    /// Read `RPYS_BIND`, `RPYS_MAX_UPLOAD_BYTES`, `RPYS_SESSION_TTL_SECS` and
    /// `RPYS_STATIC_DIR`, falling back to defaults for unset variables.
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|var| std::env::var(var).ok())
    }

    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut config = ServiceConfig::default();
        if let Some(bind) = parse_var(&lookup, "RPYS_BIND")? {
            config.bind = bind;
        }
        if let Some(max) = parse_var(&lookup, "RPYS_MAX_UPLOAD_BYTES")? {
            config.max_upload_bytes = max;
        }
        if let Some(secs) = parse_var(&lookup, "RPYS_SESSION_TTL_SECS")? {
            config.session_ttl = Duration::from_secs(secs);
        }
        if let Some(dir) = lookup("RPYS_STATIC_DIR").filter(|d| !d.is_empty()) {
            config.static_dir = Some(PathBuf::from(dir));
        }
        Ok(config)
    }
}
