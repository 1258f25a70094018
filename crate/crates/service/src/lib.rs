//! HTTP campaign server: hands out arguments batch by batch, enforces the
//! annotation protocol and pacing, stores records durably and exposes the
//! analysis exports.

pub mod api;
pub mod campaign;
mod error;
pub mod export;
pub mod journal;
pub mod plan;
pub mod store;

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Duration, Utc};

pub use api::{router, AppState};
pub use campaign::{Ack, CampaignSpec, Next, Progress, RosterEntry};
pub use error::{Result, ServiceError};
pub use plan::{plan_batches, BatchPlan};
pub use store::Registry;

/// Storage directory for campaigns.
pub const DATA_DIR_ENV: &str = "APPROPRIATENESS_DATA_DIR";
/// Pacing window in seconds; 24 hours when unset.
pub const PACING_ENV: &str = "APPROPRIATENESS_PACING_SECS";
/// Bearer token that may create campaigns. Creation is open when unset.
pub const ADMIN_TOKEN_ENV: &str = "APPROPRIATENESS_ADMIN_TOKEN";

pub trait Clock: Send + Sync + 'static {
    fn now(&self) -> DateTime<Utc>;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock that only moves when told to. For tests and simulations.
pub struct ManualClock(Mutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        ManualClock(Mutex::new(start))
    }

    pub fn advance(&self, by: Duration) {
        *self.0.lock().unwrap_or_else(|e| e.into_inner()) += by;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub data_dir: PathBuf,
    pub pacing_window: Duration,
    pub admin_token: Option<String>,
}

impl Config {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Config {
            data_dir: data_dir.into(),
            pacing_window: Duration::hours(24),
            admin_token: None,
        }
    }

    /// Reads the environment; `data_dir` is the fallback storage location.
    pub fn from_env(data_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut config = Config::new(
            std::env::var_os(DATA_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| data_dir.into()),
        );
        if let Ok(secs) = std::env::var(PACING_ENV) {
            let secs: i64 = secs
                .trim()
                .parse()
                .map_err(|_| ServiceError::BadRequest(format!("{PACING_ENV} must be a whole number of seconds")))?;
            config.pacing_window = Duration::seconds(secs);
        }
        config.admin_token = std::env::var(ADMIN_TOKEN_ENV).ok().filter(|t| !t.is_empty());
        Ok(config)
    }

    /// Opens the campaigns under `data_dir` and builds the application.
    pub fn app(&self, clock: Arc<dyn Clock>) -> Result<axum::Router> {
        let registry = Registry::open(&self.data_dir, clock, self.pacing_window)?;
        Ok(router(AppState {
            registry: Arc::new(registry),
            admin_token: self.admin_token.clone(),
        }))
    }
}

/// Serves until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, app: axum::Router) -> Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
