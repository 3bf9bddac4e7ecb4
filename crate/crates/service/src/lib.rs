//! HTTP service that runs shot selection for a session, collects the
//! annotator's labels, trains the classifier and reports AP.
//!
//! Sessions are JSON files in a data directory; see [`router`] for the routes.

mod api;
mod error;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use flame_core::classifier::{sha256_hex, ModelFile};
use flame_core::embedding_io::{
    load_pool, load_query, GroundTruth, LabelEntry, Phase, SessionState, SessionStore,
};
use flame_core::numerics::fit_pca;
use flame_core::pipeline::{augment_records, evaluate_model, sample, train_from_labels};
use flame_core::sampler::AugmentedEmbedding;
use flame_core::FlameError;
use serde::de::DeserializeOwned;

pub use api::*;
pub use error::{status_for, ApiError, ErrorBody};

type ApiResult<T> = std::result::Result<T, ApiError>;

pub const DEFAULT_PORT: u16 = 8080;

/// Where the service listens and keeps its files.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub port: u16,
    pub data_dir: PathBuf,
    pub assets_dir: Option<PathBuf>,
}

impl ServiceConfig {
    /// Reads `FLAME_PORT`, `FLAME_DATA` and `FLAME_ASSETS`.
    pub fn from_env() -> Result<Self, FlameError> {
        let port = match std::env::var("FLAME_PORT") {
            Ok(p) => p.parse().map_err(|_| FlameError::Config {
                field: "FLAME_PORT".into(),
                message: format!("not a port number: {p}"),
            })?,
            Err(_) => DEFAULT_PORT,
        };
        Ok(ServiceConfig {
            port,
            data_dir: std::env::var_os("FLAME_DATA")
                .map_or_else(|| PathBuf::from("flame-data"), PathBuf::from),
            assets_dir: std::env::var_os("FLAME_ASSETS").map(PathBuf::from),
        })
    }
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    store: SessionStore,
    assets: Option<PathBuf>,
    // Serializes writers within one session; different sessions proceed in parallel.
    writers: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

impl AppState {
    pub fn new(data_dir: impl Into<PathBuf>, assets: Option<PathBuf>) -> Result<Self, FlameError> {
        Ok(AppState {
            inner: Arc::new(Inner {
                store: SessionStore::open(data_dir)?,
                assets,
                writers: Mutex::default(),
            }),
        })
    }

    pub fn store(&self) -> &SessionStore {
        &self.inner.store
    }

    fn writer(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut map = self.inner.writers.lock().expect("writer map poisoned");
        map.entry(id.to_string()).or_default().clone()
    }

    fn load(&self, id: &str) -> ApiResult<SessionState> {
        self.inner
            .store
            .load(id)
            .map_err(ApiError::from)?
            .ok_or_else(|| ApiError::session_not_found(id))
    }

    fn save(&self, state: &SessionState) -> ApiResult<()> {
        let lock = self.inner.store.lock(&state.id)?;
        self.inner.store.save(state, &lock)?;
        Ok(())
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/candidates", get(get_candidates))
        .route("/sessions/{id}/labels", post(submit_labels))
        .route("/sessions/{id}/train", post(train))
        .route("/sessions/{id}/report", get(get_report))
        .route("/assets/{*path}", get(get_asset))
        .with_state(state)
}

pub async fn serve(config: ServiceConfig) -> Result<(), FlameError> {
    let state = AppState::new(&config.data_dir, config.assets_dir.clone())?;
    let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {addr}, data in {}", config.data_dir.display());
    axum::serve(listener, router(state)).await?;
    Ok(())
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| {
        let mut err = ApiError::bad_request(format!("invalid request body: {e}"));
        err.body.details = serde_json::json!({ "line": e.line(), "column": e.column() });
        err
    })
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| {
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "InternalError",
            e.to_string(),
        )
    })?
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: CreateSession = parse(&body)?;
    let config = req.config.clone().unwrap_or_default();
    config.validate()?;
    let id = req
        .id
        .clone()
        .unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
    let writer = app.writer(&id);
    let _guard = writer.lock().await;
    if app.inner.store.load(&id)?.is_some() {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "SessionExists",
            format!("session {id} already exists"),
        ));
    }

    let state = blocking(move || {
        let query = match (&req.query, &req.query_vector) {
            (Some(path), _) => load_query(Path::new(path))?,
            (None, Some(v)) => v.clone(),
            (None, None) => {
                return Err(ApiError::bad_request(
                    "either query or query_vector is required",
                ))
            }
        };
        let pool = load_pool(Path::new(&req.pool))?;
        let augmented = augment_records(&pool, &query)?;
        let out = sample(&pool, &augmented, &config)?;
        let mut state = SessionState::new(id, config, req.pool, query);
        state.set_selection(out.selection, out.shot_ids)?;
        Ok(state)
    })
    .await?;
    app.save(&state)?;
    Ok((StatusCode::CREATED, Json(SessionView::from(&state))))
}

async fn get_session(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<SessionView>> {
    Ok(Json(SessionView::from(&app.load(&id)?)))
}

fn shot_embeddings(
    state: &SessionState,
) -> ApiResult<(
    Vec<flame_core::embedding_io::EmbeddingRecord>,
    Vec<AugmentedEmbedding>,
)> {
    let pool = load_pool(Path::new(&state.pool_path))?;
    let selection = state
        .selection
        .as_ref()
        .ok_or_else(|| ApiError::from(FlameError::EmptyPool))?;
    let augmented = selection
        .shots
        .iter()
        .map(|s| AugmentedEmbedding::new(&pool[s.pool_index].vector_f64(), &state.query))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((pool, augmented))
}

async fn get_candidates(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<CandidateList>> {
    let state = app.load(&id)?;
    state.require(Phase::AwaitingLabels)?;
    blocking(move || {
        let (pool, augmented) = shot_embeddings(&state)?;
        let vectors: Vec<&[f64]> = augmented.iter().map(|a| a.augmented()).collect();
        let previews = fit_pca(&vectors, 2)
            .and_then(|pca| pca.project_all(&vectors))
            .ok();
        let selection = state
            .selection
            .as_ref()
            .expect("checked by shot_embeddings");
        let candidates = selection
            .shots
            .iter()
            .enumerate()
            .map(|(k, shot)| {
                let record = &pool[shot.pool_index];
                Candidate {
                    shot_id: record.id.clone(),
                    image_ref: record.image_ref.clone(),
                    similarity_c: shot.similarity,
                    cluster_id: shot.cluster_id,
                    density: shot.density,
                    preview: previews.as_ref().map(|p| [p[k][0], p[k][1]]),
                    label: state.labels.label(&record.id),
                }
            })
            .collect();
        Ok(Json(CandidateList {
            session_id: state.id.clone(),
            candidates,
        }))
    })
    .await
}

fn binary_label(item: &LabelItem) -> ApiResult<bool> {
    match &item.label {
        serde_json::Value::Bool(b) => Ok(*b),
        serde_json::Value::Number(n) if n.as_u64() == Some(1) => Ok(true),
        serde_json::Value::Number(n) if n.as_u64() == Some(0) => Ok(false),
        other => Err(FlameError::Format {
            line: None,
            message: format!(
                "label for {} must be 0, 1, true or false, got {other}",
                item.shot_id
            ),
        }
        .into()),
    }
}

async fn submit_labels(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let req: SubmitLabels = parse(&body)?;
    let writer = app.writer(&id);
    let _guard = writer.lock().await;
    let mut state = app.load(&id)?;
    state.require(Phase::AwaitingLabels)?;

    let mut parsed = Vec::with_capacity(req.labels.len());
    for item in &req.labels {
        let label = binary_label(item)?;
        if !state.shot_ids.contains(&item.shot_id) {
            return Err(FlameError::UnknownShot(item.shot_id.clone()).into());
        }
        parsed.push((item.shot_id.clone(), label));
    }
    let annotator = req.annotator.unwrap_or_else(|| "annotator".into());
    let mut overwritten = 0;
    for (shot_id, label) in parsed {
        if let Some(previous) =
            state.record_label(&shot_id, LabelEntry::now(label, annotator.clone()))?
        {
            overwritten += 1;
            log::info!("session {id}: {shot_id} relabelled {previous} -> {label} by {annotator}");
        }
    }
    app.save(&state)?;

    let result = SubmitResult {
        accepted: req.labels.len(),
        overwritten,
        remaining: state.remaining(),
        status: state.phase,
    };
    let status = if state.labels_complete() {
        StatusCode::OK
    } else {
        StatusCode::ACCEPTED
    };
    Ok((status, Json(result)).into_response())
}

fn model_file_name(id: &str) -> String {
    format!("{id}.model.json")
}

async fn train(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Json<TrainResult>> {
    let req: TrainRequest = if body.iter().all(u8::is_ascii_whitespace) {
        TrainRequest::default()
    } else {
        parse(&body)?
    };
    let writer = app.writer(&id);
    let _guard = writer.lock().await;
    let mut state = app.load(&id)?;

    if state.phase >= Phase::Trained {
        let name = state
            .model_file
            .clone()
            .unwrap_or_else(|| model_file_name(&id));
        let bytes =
            std::fs::read(app.inner.store.artifact_path(&name)).map_err(FlameError::from)?;
        return Ok(Json(TrainResult {
            status: state.phase,
            model_file: name,
            model_sha256: sha256_hex(&bytes),
            report: state.report.clone(),
            post_labeling_seconds: state.post_labeling_seconds,
            cached: true,
        }));
    }
    state.require(Phase::AwaitingLabels)?;
    if !state.labels_complete() && !req.allow_partial {
        return Err(FlameError::AnnotationIncomplete {
            labeled: state.labels.len(),
            expected: state.shot_ids.len(),
        }
        .into());
    }

    let store = app.inner.store.clone();
    let state = blocking(move || {
        let pool = load_pool(Path::new(&state.pool_path))?;
        let augmented = augment_records(&pool, &state.query)?;
        let labeled_ids: Vec<String> = state
            .shot_ids
            .iter()
            .filter(|s| state.labels.get(s).is_some())
            .cloned()
            .collect();

        let start = Instant::now();
        let model: ModelFile = train_from_labels(
            &pool,
            &augmented,
            &labeled_ids,
            &state.labels,
            &state.config,
        )?;
        let truth = GroundTruth::from_pool(&pool);
        let report = if truth.is_empty() {
            None
        } else {
            match evaluate_model(&model, &pool, &augmented, &truth) {
                Ok(r) => Some(r),
                Err(FlameError::NoPositives) => None,
                Err(e) => return Err(e.into()),
            }
        };
        let elapsed = start.elapsed().as_secs_f64();

        let name = model_file_name(&state.id);
        model.save(&store.artifact_path(&name))?;
        state.model_file = Some(name);
        state.post_labeling_seconds = Some(elapsed);
        state.advance(Phase::Trained)?;
        if report.is_some() {
            state.report = report;
            state.advance(Phase::Evaluated)?;
        }
        Ok(state)
    })
    .await?;
    app.save(&state)?;

    let name = state.model_file.clone().expect("set after training");
    let bytes = std::fs::read(app.inner.store.artifact_path(&name)).map_err(FlameError::from)?;
    Ok(Json(TrainResult {
        status: state.phase,
        model_file: name,
        model_sha256: sha256_hex(&bytes),
        report: state.report.clone(),
        post_labeling_seconds: state.post_labeling_seconds,
        cached: false,
    }))
}

async fn get_report(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Response> {
    let state = app.load(&id)?;
    match &state.report {
        Some(report) => Ok(Json(report).into_response()),
        None => Err(FlameError::Phase {
            actual: state.phase.as_str().into(),
            required: Phase::Evaluated.as_str().into(),
        }
        .into()),
    }
}

/// Joins `rel` under `root`, refusing anything that could leave it.
fn safe_join(root: &Path, rel: &str) -> Option<PathBuf> {
    let rel = Path::new(rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return None;
    }
    Some(root.join(rel))
}

fn content_type(path: &Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        Some("svg") => "image/svg+xml",
        Some("json") => "application/json",
        _ => "application/octet-stream",
    }
}

async fn get_asset(
    State(app): State<AppState>,
    UrlPath(rel): UrlPath<String>,
) -> ApiResult<Response> {
    let not_found = || {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "AssetNotFound",
            format!("no asset {rel}"),
        )
    };
    let root = app.inner.assets.as_ref().ok_or_else(not_found)?;
    let path = safe_join(root, &rel).ok_or_else(not_found)?;
    let bytes = tokio::fs::read(&path).await.map_err(|_| not_found())?;
    Ok(([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asset_paths_are_confined() {
        let root = Path::new("/srv/assets");
        assert_eq!(
            safe_join(root, "crops/a.png"),
            Some(PathBuf::from("/srv/assets/crops/a.png"))
        );
        assert_eq!(safe_join(root, "../secret"), None);
        assert_eq!(safe_join(root, "/etc/passwd"), None);
        assert_eq!(
            safe_join(root, "a/./b"),
            Some(PathBuf::from("/srv/assets/a/b"))
        );
    }
}
