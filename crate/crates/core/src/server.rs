//! Read-only HTTP service over a directory of bundle archives.
//!
//! Endpoints:
//!
//! | route                                          | body                    |
//! |------------------------------------------------|-------------------------|
//! | `GET /videos`                                  | catalog                 |
//! | `GET /videos/{id}/manifest`                    | `manifest.json`         |
//! | `GET /videos/{id}/explanations?t_ms=&level=`   | lookup result           |
//! | `GET /static/{id}/{level}/{slot}.json`         | exported slot file      |
//!
//! Availability is part of the 200 body; unknown videos are 404. Every
//! response allows any origin and carries `Cache-Control: max-age`.
//! The service holds no provider and cannot trigger inference.

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{Duration, SystemTime};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use crate::bundle::{lookup, manifest, slot_file_json, ExplanationBundle, LookupResult};
use crate::Level;

pub const DEFAULT_CACHE_MAX_AGE: u64 = 86_400;
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const BUNDLE_FILE: &str = "bundle.json";

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no bundle archives found under {0}")]
    NoBundles(String),
    #[error("cannot read bundle directory {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("server stopped: {0}")]
    Serve(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub bundle_dir: PathBuf,
    pub bind: String,
    pub cache_max_age: u64,
    /// Rescan interval for added, changed or removed bundles; `None` disables.
    pub refresh: Option<Duration>,
}

impl ServeConfig {
    pub fn new(bundle_dir: impl Into<PathBuf>) -> Self {
        Self {
            bundle_dir: bundle_dir.into(),
            bind: DEFAULT_BIND.to_string(),
            cache_max_age: DEFAULT_CACHE_MAX_AGE,
            refresh: Some(Duration::from_secs(5)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub video_id: String,
    pub language: String,
    pub coverage_start_ms: u64,
    pub coverage_end_ms: u64,
    pub interval_ms: u64,
    pub slot_count_per_level: usize,
}

impl From<&ExplanationBundle> for CatalogEntry {
    fn from(b: &ExplanationBundle) -> Self {
        Self {
            video_id: b.video_id.clone(),
            language: b.language.clone(),
            coverage_start_ms: b.coverage_start_ms,
            coverage_end_ms: b.coverage_end_ms,
            interval_ms: b.interval_ms,
            slot_count_per_level: b.slot_count_per_level(),
        }
    }
}

/// Immutable snapshot of every loaded bundle, keyed by video id.
#[derive(Debug, Default)]
pub struct Catalog {
    bundles: BTreeMap<String, Arc<ExplanationBundle>>,
    fingerprint: Vec<(PathBuf, Option<SystemTime>, u64)>,
}

impl Catalog {
    pub fn from_bundles(bundles: impl IntoIterator<Item = ExplanationBundle>) -> Self {
        Self {
            bundles: bundles
                .into_iter()
                .map(|b| (b.video_id.clone(), Arc::new(b)))
                .collect(),
            fingerprint: Vec::new(),
        }
    }

    pub fn get(&self, video_id: &str) -> Option<&Arc<ExplanationBundle>> {
        self.bundles.get(video_id)
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }

    /// Catalog entries sorted by video id.
    pub fn entries(&self) -> Vec<CatalogEntry> {
        self.bundles.values().map(|b| CatalogEntry::from(b.as_ref())).collect()
    }
}

fn is_bundle_file(path: &Path) -> bool {
    path.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n == BUNDLE_FILE || n.ends_with(".bundle.json"))
}

/// `bundle.json` / `*.bundle.json` files in `dir` and its direct
/// subdirectories, sorted by path.
pub fn find_bundle_files(dir: &Path) -> Result<Vec<PathBuf>, ServerError> {
    let io = |source| ServerError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut found = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_dir() {
            if let Ok(sub) = std::fs::read_dir(&path) {
                found.extend(sub.filter_map(Result::ok).map(|e| e.path()).filter(|p| is_bundle_file(p)));
            }
        } else if is_bundle_file(&path) {
            found.push(path);
        }
    }
    found.sort();
    Ok(found)
}

fn fingerprint(files: &[PathBuf]) -> Vec<(PathBuf, Option<SystemTime>, u64)> {
    files
        .iter()
        .map(|p| {
            let meta = std::fs::metadata(p).ok();
            (
                p.clone(),
                meta.as_ref().and_then(|m| m.modified().ok()),
                meta.map_or(0, |m| m.len()),
            )
        })
        .collect()
}

/// Load every readable bundle under `dir`. Unreadable or invalid files are
/// skipped with a warning; the first file wins for a duplicated video id.
pub fn load_catalog(dir: &Path) -> Result<Catalog, ServerError> {
    let files = find_bundle_files(dir)?;
    let mut bundles = BTreeMap::new();
    for path in &files {
        match ExplanationBundle::load(path) {
            Ok(b) => {
                if bundles.contains_key(&b.video_id) {
                    tracing::warn!(path = %path.display(), video_id = %b.video_id, "duplicate video id ignored");
                    continue;
                }
                bundles.insert(b.video_id.clone(), Arc::new(b));
            }
            Err(e) => tracing::warn!(path = %path.display(), error = %e, "skipping bundle"),
        }
    }
    Ok(Catalog {
        bundles,
        fingerprint: fingerprint(&files),
    })
}

#[derive(Debug)]
pub struct AppState {
    catalog: RwLock<Arc<Catalog>>,
    cache_max_age: u64,
}

impl AppState {
    pub fn new(catalog: Catalog, cache_max_age: u64) -> Arc<Self> {
        Arc::new(Self {
            catalog: RwLock::new(Arc::new(catalog)),
            cache_max_age,
        })
    }

    pub fn snapshot(&self) -> Arc<Catalog> {
        self.catalog.read().expect("catalog lock poisoned").clone()
    }

    pub fn replace(&self, catalog: Catalog) {
        *self.catalog.write().expect("catalog lock poisoned") = Arc::new(catalog);
    }

    /// Rescan `dir` and swap in a new snapshot if any bundle file changed.
    /// Returns whether a swap happened.
    pub fn refresh(&self, dir: &Path) -> Result<bool, ServerError> {
        let files = find_bundle_files(dir)?;
        if fingerprint(&files) == self.snapshot().fingerprint {
            return Ok(false);
        }
        let catalog = load_catalog(dir)?;
        if catalog.is_empty() {
            tracing::warn!("{}", ServerError::NoBundles(dir.display().to_string()));
        }
        tracing::info!(videos = catalog.len(), "bundle catalog reloaded");
        self.replace(catalog);
        Ok(true)
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error_response(status: StatusCode, message: &str) -> Response {
    json_response(status, serde_json::json!({ "error": message }).to_string())
}

async fn list_videos(State(state): State<Arc<AppState>>) -> Response {
    let entries = state.snapshot().entries();
    json_response(StatusCode::OK, serde_json::to_string(&entries).expect("catalog serializes"))
}

async fn get_manifest(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Response {
    match state.snapshot().get(&id) {
        Some(b) => json_response(StatusCode::OK, serde_json::to_string(&manifest(b)).expect("manifest serializes")),
        None => error_response(StatusCode::NOT_FOUND, "unknown video"),
    }
}

fn parse_level(raw: Option<&String>) -> Result<Level, String> {
    raw.ok_or_else(|| "missing level".to_string())?
        .parse::<Level>()
        .map_err(|e| e.to_string())
}

async fn get_explanation(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let catalog = state.snapshot();
    let Some(bundle) = catalog.get(&id) else {
        return error_response(StatusCode::NOT_FOUND, "unknown video");
    };
    let level = match parse_level(params.get("level")) {
        Ok(l) => l,
        Err(msg) => return error_response(StatusCode::BAD_REQUEST, &msg),
    };
    let Some(t_ms) = params.get("t_ms").and_then(|v| v.trim().parse::<i64>().ok()) else {
        return error_response(StatusCode::BAD_REQUEST, "t_ms must be an integer");
    };
    // Negative times precede any coverage.
    let result = match u64::try_from(t_ms) {
        Ok(t) => lookup(bundle, t, level),
        Err(_) => LookupResult::unavailable(level),
    };
    json_response(StatusCode::OK, serde_json::to_string(&result).expect("lookup serializes"))
}

async fn get_static(
    State(state): State<Arc<AppState>>,
    UrlPath((id, level, file)): UrlPath<(String, String, String)>,
) -> Response {
    let catalog = state.snapshot();
    let Some(bundle) = catalog.get(&id) else {
        return error_response(StatusCode::NOT_FOUND, "unknown video");
    };
    let Ok(level) = level.parse::<Level>() else {
        return error_response(StatusCode::NOT_FOUND, "unknown level");
    };
    let body = file
        .strip_suffix(".json")
        .and_then(|k| k.parse::<usize>().ok())
        .and_then(|k| slot_file_json(bundle, level, k));
    match body {
        Some(body) => json_response(StatusCode::OK, body),
        None => error_response(StatusCode::NOT_FOUND, "unknown slot"),
    }
}

/// The service routes over `state`.
pub fn router(state: Arc<AppState>) -> Router {
    let cache = HeaderValue::from_str(&format!("public, max-age={}", state.cache_max_age))
        .expect("ascii header");
    Router::new()
        .route("/videos", get(list_videos))
        .route("/videos/{id}/manifest", get(get_manifest))
        .route("/videos/{id}/explanations", get(get_explanation))
        .route("/static/{id}/{level}/{file}", get(get_static))
        .with_state(state)
        .layer(axum::middleware::map_response(move |mut res: Response| {
            let cache = cache.clone();
            async move {
                let headers = res.headers_mut();
                headers.insert(header::ACCESS_CONTROL_ALLOW_ORIGIN, HeaderValue::from_static("*"));
                headers.insert(header::CACHE_CONTROL, cache);
                res
            }
        }))
}

/// A bound, not yet running, server.
pub struct Server {
    listener: TcpListener,
    state: Arc<AppState>,
    config: ServeConfig,
}

/// Handle to a server running in the background.
pub struct RunningServer {
    pub addr: SocketAddr,
    pub state: Arc<AppState>,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<Result<(), ServerError>>,
}

impl RunningServer {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub async fn stop(mut self) -> Result<(), ServerError> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.task.await.expect("server task panicked")
    }
}

impl Server {
    /// Load bundles and bind the listener. Fails with `NoBundles` when the
    /// directory holds no loadable bundle.
    pub async fn bind(config: ServeConfig) -> Result<Self, ServerError> {
        let catalog = load_catalog(&config.bundle_dir)?;
        if catalog.is_empty() {
            return Err(ServerError::NoBundles(config.bundle_dir.display().to_string()));
        }
        let listener = TcpListener::bind(&config.bind)
            .await
            .map_err(|source| ServerError::BindFailure {
                addr: config.bind.clone(),
                source,
            })?;
        let state = AppState::new(catalog, config.cache_max_age);
        Ok(Self {
            listener,
            state,
            config,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    pub fn state(&self) -> Arc<AppState> {
        self.state.clone()
    }

    async fn run_until(self, shutdown: impl std::future::Future<Output = ()> + Send + 'static) -> Result<(), ServerError> {
        let refresher = self.config.refresh.map(|every| {
            let state = self.state.clone();
            let dir = self.config.bundle_dir.clone();
            tokio::spawn(async move {
                let mut tick = tokio::time::interval(every);
                tick.tick().await;
                loop {
                    tick.tick().await;
                    if let Err(e) = state.refresh(&dir) {
                        tracing::warn!(error = %e, "bundle refresh failed");
                    }
                }
            })
        });
        let app = router(self.state.clone());
        let result = axum::serve(self.listener, app).with_graceful_shutdown(shutdown).await;
        if let Some(r) = refresher {
            r.abort();
        }
        result.map_err(ServerError::from)
    }

    /// Serve until Ctrl-C.
    pub async fn run(self) -> Result<(), ServerError> {
        tracing::info!(addr = %self.local_addr(), videos = self.state.snapshot().len(), "serving");
        self.run_until(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
    }

    /// Serve on a background task until [`RunningServer::stop`].
    pub fn spawn(self) -> RunningServer {
        let addr = self.local_addr();
        let state = self.state.clone();
        let (tx, rx) = oneshot::channel();
        let task = tokio::spawn(self.run_until(async {
            let _ = rx.await;
        }));
        RunningServer {
            addr,
            state,
            shutdown: Some(tx),
            task,
        }
    }
}

/// Bind and serve until Ctrl-C.
pub async fn serve(config: ServeConfig) -> Result<(), ServerError> {
    Server::bind(config).await?.run().await
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::test_support::small_bundle;

    #[test]
    fn finds_bundles_one_level_deep() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("a")).unwrap();
        std::fs::write(dir.path().join("a").join("bundle.json"), "{}").unwrap();
        std::fs::write(dir.path().join("b.bundle.json"), "{}").unwrap();
        std::fs::write(dir.path().join("emissions.json"), "{}").unwrap();
        let found = find_bundle_files(dir.path()).unwrap();
        assert_eq!(found.len(), 2);
        // Both are invalid bundles, so nothing loads.
        assert!(load_catalog(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn refresh_swaps_on_change() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("small.bundle.json");
        small_bundle().save(&path).unwrap();
        let state = AppState::new(load_catalog(dir.path()).unwrap(), 60);
        assert_eq!(state.snapshot().len(), 1);
        assert!(!state.refresh(dir.path()).unwrap());
        std::fs::remove_file(&path).unwrap();
        assert!(state.refresh(dir.path()).unwrap());
        assert!(state.snapshot().is_empty());
    }

    #[tokio::test]
    async fn bind_requires_bundles() {
        let dir = tempfile::tempdir().unwrap();
        let err = Server::bind(ServeConfig::new(dir.path())).await.err().unwrap();
        assert!(matches!(err, ServerError::NoBundles(_)));
    }

    #[tokio::test]
    async fn bind_failure_reported() {
        let dir = tempfile::tempdir().unwrap();
        small_bundle().save(&dir.path().join("bundle.json")).unwrap();
        let mut cfg = ServeConfig::new(dir.path());
        cfg.bind = "256.0.0.1:1".into();
        let err = Server::bind(cfg).await.err().unwrap();
        assert!(matches!(err, ServerError::BindFailure { .. }));
    }
}
