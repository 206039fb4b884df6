//! Reader-study HTTP service.
//!
//! | method | path | body / result |
//! |---|---|---|
//! | POST | `/sessions` | optional session options → `{session_id, total, ...}` |
//! | GET | `/sessions/{id}` | progress, never truth |
//! | GET | `/sessions/{id}/next` | current item id, progress and PNG (base64), or `status: complete` |
//! | GET | `/sessions/{id}/items/{item_id}/image.png` | PNG bytes |
//! | POST | `/sessions/{id}/responses` | `{item_id, judgment, confidence, elapsed_ms}` → ack |
//! | POST | `/sessions/{id}/finalize` | unlock results early |
//! | GET | `/sessions/{id}/results` | study result, once complete |
//!
//! Errors are JSON `{error, message}` with 404 for unknown ids, 409 for
//! state conflicts and 422 for invalid input.

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tower_http::services::{ServeDir, ServeFile};
use tumorsynth_core::turing::{
    plan_items, render_item, NextItem, Response as ReaderResponse, SessionOptions, SessionStore, SliceSelection,
    StudyCase,
};
use tumorsynth_core::WindowSpec;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{read_manifest, StudyRow};
use crate::record::Recorder;
use crate::ServeArgs;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    pub real: Arc<Vec<StudyCase>>,
    pub synth: Arc<Vec<StudyCase>>,
    pub defaults: SessionOptions,
}

impl AppState {
    pub fn new(store: SessionStore, real: Vec<StudyCase>, synth: Vec<StudyCase>, defaults: SessionOptions) -> Self {
        AppState {
            store: Arc::new(store),
            real: Arc::new(real),
            synth: Arc::new(synth),
            defaults,
        }
    }
}

/// Body of `POST /sessions`; unset fields take the configured defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub n_per_class: Option<usize>,
    pub seed: Option<u64>,
    pub overlay: Option<bool>,
    pub slice_selection: Option<SliceSelection>,
    pub window: Option<WindowSpec>,
}

pub struct ApiError {
    status: StatusCode,
    kind: String,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            kind: kind.into(),
            message: message.into(),
        }
    }
}

impl From<tumorsynth_core::Error> for ApiError {
    fn from(e: tumorsynth_core::Error) -> Self {
        let kind = CliError::Core(e).kind();
        let status = match kind {
            "unknown_session" | "unknown_item" => StatusCode::NOT_FOUND,
            "duplicate_response" | "out_of_order" | "session_complete" | "incomplete" => StatusCode::CONFLICT,
            "bad_confidence" | "invalid_parameter" | "insufficient_items" => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            kind: kind.into(),
            message: String::new(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({ "error": self.kind, "message": self.message })),
        )
            .into_response()
    }
}

fn core_err(e: tumorsynth_core::Error) -> ApiError {
    let message = e.to_string();
    ApiError {
        message,
        ..ApiError::from(e)
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> tumorsynth_core::Result<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(core_err)
}

fn parse_body<T: for<'de> Deserialize<'de> + Default>(body: &Bytes) -> ApiResult<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string()))
}

pub fn router(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_status))
        .route("/sessions/{id}/next", get(next_item))
        .route("/sessions/{id}/items/{item_id}/image.png", get(item_image))
        .route("/sessions/{id}/responses", post(submit_response))
        .route("/sessions/{id}/finalize", post(finalize))
        .route("/sessions/{id}/results", get(results))
        .with_state(state);
    match ui_dir {
        Some(dir) => {
            let index = dir.join("index.html");
            api.fallback_service(ServeDir::new(dir).fallback(ServeFile::new(index)))
        }
        None => api,
    }
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok", "version": crate::record::VERSION }))
}

async fn create_session(State(s): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: CreateSession = parse_body(&body)?;
    let mut opts = s.defaults.clone();
    opts.n_per_class = req.n_per_class.unwrap_or(opts.n_per_class);
    opts.seed = req.seed.unwrap_or(opts.seed);
    opts.overlay = req.overlay.unwrap_or(opts.overlay);
    opts.slice_selection = req.slice_selection.unwrap_or(opts.slice_selection);
    opts.window = req.window.unwrap_or(opts.window);
    let session = blocking(move || {
        let items = plan_items(&s.real, &s.synth, &opts)?;
        s.store.create(opts, items)
    })
    .await?;
    Ok((
        StatusCode::CREATED,
        Json(json!({
            "session_id": session.id,
            "total": session.total(),
            "overlay": session.options.overlay,
            "status": session.status,
        })),
    ))
}

async fn session_status(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let session = blocking(move || s.store.get(&id)).await?;
    Ok(Json(json!({
        "session_id": session.id,
        "total": session.total(),
        "answered": session.answered(),
        "status": session.status,
        "overlay": session.options.overlay,
        "finalized_early": session.finalized_early,
    })))
}

async fn next_item(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let (next, png) = blocking(move || {
        let session = s.store.get(&id)?;
        let next = session.next_item();
        let png = match &next {
            NextItem::Active { item_id, .. } => {
                let item = session.item(item_id).expect("current item exists");
                Some(render_item(item, session.options.overlay, session.options.window)?)
            }
            NextItem::Complete { .. } => None,
        };
        Ok((next, png))
    })
    .await?;
    let mut body = serde_json::to_value(&next).expect("serializes");
    if let (NextItem::Active { item_id, .. }, Some(png)) = (&next, png) {
        let obj = body.as_object_mut().expect("object");
        obj.insert(
            "image_png_base64".into(),
            base64::engine::general_purpose::STANDARD.encode(png).into(),
        );
        obj.insert("image_url".into(), format!("items/{item_id}/image.png").into());
    }
    Ok(Json(body))
}

async fn item_image(State(s): State<AppState>, Path((id, item_id)): Path<(String, String)>) -> ApiResult<Response> {
    let png = blocking(move || {
        let session = s.store.get(&id)?;
        let item = session
            .item(&item_id)
            .ok_or_else(|| tumorsynth_core::turing::SessionError::UnknownItem(item_id.clone()))?;
        render_item(item, session.options.overlay, session.options.window)
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

#[derive(Deserialize, Default)]
struct Submit(Option<ReaderResponse>);

async fn submit_response(State(s): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let Submit(r) = parse_body(&body)?;
    let r = r.ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", "missing response body"))?;
    let ack = blocking(move || s.store.submit(&id, r)).await?;
    Ok(Json(serde_json::to_value(ack).expect("serializes")))
}

async fn finalize(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let session = blocking(move || s.store.finalize(&id)).await?;
    Ok(Json(json!({
        "session_id": session.id,
        "status": session.status,
        "finalized_early": session.finalized_early,
    })))
}

async fn results(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let r = blocking(move || s.store.results(&id)).await?;
    Ok(Json(serde_json::to_value(r).expect("serializes")))
}

/// Serves until `shutdown` resolves.
pub async fn serve_on(
    listener: TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// Resolves on Ctrl-C, or SIGTERM on unix.
async fn shutdown_signal() {
    #[cfg(unix)]
    {
        let mut term = match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(s) => s,
            Err(_) => {
                let _ = tokio::signal::ctrl_c().await;
                return;
            }
        };
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}

fn load_cases(path: Option<&PathBuf>) -> CliResult<Vec<StudyCase>> {
    match path {
        Some(p) => Ok(read_manifest::<StudyRow>(p)?.into_iter().map(Into::into).collect()),
        None => Ok(Vec::new()),
    }
}

pub fn run(cfg: &RunConfig, a: &ServeArgs) -> CliResult<()> {
    let mut cfg = cfg.clone();
    let sc = &mut cfg.serve;
    if let Some(v) = &a.real {
        sc.real_manifest = Some(v.clone());
    }
    if let Some(v) = &a.synth {
        sc.synth_manifest = Some(v.clone());
    }
    if let Some(v) = &a.addr {
        sc.addr = v.clone();
    }
    if let Some(v) = &a.sessions_dir {
        sc.sessions_dir = v.clone();
    }
    if let Some(v) = &a.ui_dir {
        sc.ui_dir = Some(v.clone());
    }
    let sc = sc.clone();
    let addr: SocketAddr = sc
        .addr
        .parse()
        .map_err(|e| CliError::Config(format!("addr {:?}: {e}", sc.addr)))?;
    let real = load_cases(sc.real_manifest.as_ref())?;
    let synth = load_cases(sc.synth_manifest.as_ref())?;
    let store = SessionStore::open(&sc.sessions_dir)?;

    let mut rec_cfg = cfg.clone();
    rec_cfg.out = sc.sessions_dir.clone();
    let rec = Recorder::new(&rec_cfg, vec!["serve".into()])?;
    rec.finish(&[], &json!({ "addr": sc.addr, "sessions": store.ids().len() }))?;

    let state = AppState::new(store, real, synth, cfg.turing.clone());
    let app = router(state, sc.ui_dir.clone());
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Server(e.to_string()))?;
    rt.block_on(async move {
        let listener = TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Server(format!("bind {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| CliError::Server(e.to_string()))?;
        println!(
            "{}",
            json!({ "listening": local.to_string(), "sessions_dir": sc.sessions_dir })
        );
        serve_on(listener, app, shutdown_signal())
        .await
        .map_err(|e| CliError::Server(e.to_string()))
    })
}
