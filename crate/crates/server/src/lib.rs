//! HTTP service for live timing: model storage, race lifecycle, event
//! ingestion and results.
//!
//! State lives in memory and is mirrored to a data directory, one append-only
//! event log per race. On startup every race is rebuilt by replaying its log.

mod api;
mod error;
mod store;

use std::collections::HashMap;
use std::io;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::Mutex;

use easytime::compiler::{compile, CompiledProgram};
use easytime::model::{from_exchange, AgentId};
use easytime::runtime::{init_race, RaceConfig, RaceState};

pub use api::router;
pub use error::ApiError;

use store::{LoggedEvent, ModelMeta, RaceMeta, Store};

pub const TOKEN_VAR: &str = "EASYTIME_TOKEN";
pub const DATA_DIR_VAR: &str = "EASYTIME_DATA_DIR";
pub const DEFAULT_DATA_DIR: &str = "./easytime-data";

#[derive(Debug, Clone)]
pub struct Config {
    pub token: String,
    pub data_dir: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{TOKEN_VAR} must be set to a non-empty token")]
    MissingToken,
}

impl Config {
    pub fn new(token: impl Into<String>, data_dir: impl Into<PathBuf>) -> Self {
        Config {
            token: token.into(),
            data_dir: data_dir.into(),
        }
    }

    pub fn from_env() -> Result<Config, ConfigError> {
        let token = std::env::var(TOKEN_VAR).unwrap_or_default();
        if token.is_empty() {
            return Err(ConfigError::MissingToken);
        }
        let data_dir = std::env::var_os(DATA_DIR_VAR).map_or_else(|| PathBuf::from(DEFAULT_DATA_DIR), PathBuf::from);
        Ok(Config { token, data_dir })
    }
}

/// Wall clock in milliseconds since the Unix epoch.
pub trait Clock: Send + Sync + 'static {
    fn now_ms(&self) -> u64;
}

#[derive(Debug, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64)
    }
}

/// Clock that only moves when told to.
#[derive(Debug, Default, Clone)]
pub struct ManualClock(Arc<AtomicU64>);

impl ManualClock {
    pub fn new(start_ms: u64) -> Self {
        ManualClock(Arc::new(AtomicU64::new(start_ms)))
    }

    pub fn advance(&self, ms: u64) {
        self.0.fetch_add(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RaceStatus {
    Created,
    Running,
    Closed,
}

pub(crate) struct StoredModel {
    pub document: String,
    pub program: Arc<CompiledProgram>,
}

pub(crate) struct Race {
    pub meta: RaceMeta,
    pub state: RaceState,
    pub log: std::fs::File,
    pub events: u64,
    /// Race timestamp and wall receipt time of the first start signal.
    pub signal: Option<(u64, u64)>,
    pub results: Option<Arc<String>>,
}

impl Race {
    fn note_signal(&mut self, entry: &LoggedEvent, accepted: bool) {
        if accepted && entry.event.mp == 0 && self.signal.is_none() {
            self.signal = Some((entry.event.timestamp, entry.received_at_ms));
        }
    }

    /// Race-clock timestamp for an event received at `now` without one.
    pub fn stamp(&self, now: u64) -> u64 {
        match self.signal {
            Some((ts, received)) => ts + now.saturating_sub(received),
            None => now.saturating_sub(self.meta.started_at_ms.unwrap_or(now)),
        }
    }

    pub fn is_manual(&self, agent: u32) -> bool {
        self.state.program.manual_agents.contains(&AgentId(agent))
    }
}

pub(crate) struct Inner {
    pub token: String,
    pub store: Store,
    pub clock: Box<dyn Clock>,
    pub models: RwLock<HashMap<String, Arc<StoredModel>>>,
    pub races: RwLock<HashMap<String, Arc<Mutex<Race>>>>,
    next_model: AtomicU64,
    next_race: AtomicU64,
}

/// Shared handle to the service state.
#[derive(Clone)]
pub struct AppState(pub(crate) Arc<Inner>);

fn numeric_suffix(id: &str, prefix: char) -> u64 {
    id.strip_prefix(prefix).and_then(|n| n.parse().ok()).unwrap_or(0)
}

impl AppState {
    pub fn open(config: Config) -> io::Result<AppState> {
        Self::open_with_clock(config, SystemClock)
    }

    /// Opens the data directory and recovers every stored model and race.
    pub fn open_with_clock(config: Config, clock: impl Clock) -> io::Result<AppState> {
        let store = Store::open(&config.data_dir)?;
        let mut models = HashMap::new();
        let mut max_model = 0;
        for (id, document, _meta) in store.load_models()? {
            max_model = max_model.max(numeric_suffix(&id, 'm'));
            let program = from_exchange(&document)
                .ok()
                .and_then(|m| compile(&m).ok());
            match program {
                Some(program) => {
                    models.insert(
                        id,
                        Arc::new(StoredModel {
                            document,
                            program: Arc::new(program),
                        }),
                    );
                }
                None => tracing::warn!(model = %id, "skipping stored model that no longer compiles"),
            }
        }

        let mut races = HashMap::new();
        let mut max_race = 0;
        for (id, meta, entries) in store.load_races()? {
            max_race = max_race.max(numeric_suffix(&id, 'r'));
            let Some(model) = models.get(&meta.model_id) else {
                tracing::warn!(race = %id, "skipping race whose model is missing");
                continue;
            };
            let config = RaceConfig::with_debounce(meta.debounce_ms);
            let Ok(state) = init_race(model.program.clone(), &meta.roster, config) else {
                tracing::warn!(race = %id, "skipping race with an invalid roster");
                continue;
            };
            let log = store.open_log(&id)?;
            let mut race = Race {
                meta,
                state,
                log,
                events: 0,
                signal: None,
                results: None,
            };
            for entry in &entries {
                let accepted = matches!(
                    race.state.apply_event(entry.event),
                    Ok(easytime::runtime::Disposition::Accepted(_))
                );
                race.note_signal(entry, accepted);
                race.events = entry.event.seq + 1;
            }
            races.insert(id, Arc::new(Mutex::new(race)));
        }

        Ok(AppState(Arc::new(Inner {
            token: config.token,
            store,
            clock: Box::new(clock),
            models: RwLock::new(models),
            races: RwLock::new(races),
            next_model: AtomicU64::new(max_model + 1),
            next_race: AtomicU64::new(max_race + 1),
        })))
    }

    pub(crate) fn now(&self) -> u64 {
        self.0.clock.now_ms()
    }

    pub(crate) fn model(&self, id: &str) -> Option<Arc<StoredModel>> {
        self.0.models.read().unwrap().get(id).cloned()
    }

    pub(crate) fn race(&self, id: &str) -> Option<Arc<Mutex<Race>>> {
        self.0.races.read().unwrap().get(id).cloned()
    }

    pub(crate) fn insert_model(&self, document: String, program: CompiledProgram) -> io::Result<String> {
        let id = format!("m{}", self.0.next_model.fetch_add(1, Ordering::SeqCst));
        let meta = ModelMeta {
            created_at_ms: self.now(),
        };
        self.0.store.save_model(&id, &document, &meta)?;
        self.0.models.write().unwrap().insert(
            id.clone(),
            Arc::new(StoredModel {
                document,
                program: Arc::new(program),
            }),
        );
        Ok(id)
    }

    pub(crate) fn insert_race(&self, meta: RaceMeta, state: RaceState) -> io::Result<String> {
        let id = format!("r{}", self.0.next_race.fetch_add(1, Ordering::SeqCst));
        self.0.store.save_race(&id, &meta)?;
        let log = self.0.store.open_log(&id)?;
        let race = Race {
            meta,
            state,
            log,
            events: 0,
            signal: None,
            results: None,
        };
        self.0.races.write().unwrap().insert(id.clone(), Arc::new(Mutex::new(race)));
        Ok(id)
    }

    pub(crate) fn save_race(&self, id: &str, meta: &RaceMeta) -> io::Result<()> {
        self.0.store.save_race(id, meta)
    }

    pub(crate) fn append(&self, race: &mut Race, entry: &LoggedEvent, accepted: bool) -> io::Result<()> {
        Store::append(&mut race.log, entry)?;
        race.events = entry.event.seq + 1;
        race.note_signal(entry, accepted);
        race.results = None;
        Ok(())
    }
}

/// Serves the API on `listener` until ctrl-c.
pub async fn serve(listener: TcpListener, state: AppState) -> io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
