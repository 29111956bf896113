//! HTTP + server-sent-event front end for [`Session`]s. Payloads are
//! described in `docs/api.md` and `schemas/`.

use std::collections::HashMap;
use std::convert::Infallible;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use futures_util::Stream;
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;
use xct_core::geometry::Pose6DoF;
use xct_core::render::TransferFunction;
use xct_core::volume::Axis;

use crate::images::decode_frame;
use crate::session::{
    default_tf, CameraMode, Event, RenderRequest, ServiceContext, Session, SessionError,
};
use crate::workspace::{RenderMode, ViewSpec, Workspace};
use crate::LabError;

const EVENT_BUFFER: usize = 1024;
const MAX_BODY: usize = 64 << 20;

pub struct SessionHandle {
    session: RwLock<Session>,
    events: broadcast::Sender<Event>,
}

impl SessionHandle {
    /// Runs a mutation and publishes its events before releasing the
    /// session, so subscribers see them in mutation order.
    fn mutate<T>(&self, f: impl FnOnce(&mut Session) -> (T, Vec<Event>)) -> T {
        let mut s = self.session.write().expect("session lock poisoned");
        let (out, events) = f(&mut s);
        for e in events {
            // No subscribers is fine.
            let _ = self.events.send(e);
        }
        out
    }

    fn read<T>(&self, f: impl FnOnce(&Session) -> T) -> T {
        f(&self.session.read().expect("session lock poisoned"))
    }
}

pub struct AppState {
    pub ctx: Arc<ServiceContext>,
    sessions: RwLock<HashMap<u64, Arc<SessionHandle>>>,
    next_session: AtomicU64,
}

impl AppState {
    pub fn new(ctx: ServiceContext) -> Arc<Self> {
        Arc::new(Self {
            ctx: Arc::new(ctx),
            sessions: RwLock::new(HashMap::new()),
            next_session: AtomicU64::new(1),
        })
    }

    fn session(&self, id: u64) -> Result<Arc<SessionHandle>, ApiError> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("unknown session {id}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    status: u16,
    pub error: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status: status.as_u16(),
            error: code.into(),
            message: message.into(),
        }
    }

    fn bad(code: &str, message: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let msg = e.to_string();
        let (status, code) = match &e {
            SessionError::NoActiveDataset => (StatusCode::CONFLICT, "no_active_dataset"),
            SessionError::NoTable => (StatusCode::CONFLICT, "no_table"),
            SessionError::UnknownView(_) => (StatusCode::NOT_FOUND, "unknown_view"),
            SessionError::UnknownDataset(_) => (StatusCode::NOT_FOUND, "unknown_dataset"),
            SessionError::NotAChart(_) => (StatusCode::BAD_REQUEST, "not_a_chart"),
            SessionError::BadParams(_) => (StatusCode::BAD_REQUEST, "bad_params"),
            SessionError::BadTF(_) => (StatusCode::BAD_REQUEST, "bad_tf"),
            SessionError::Lab(l) if l.is_internal() => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
            SessionError::Lab(_) => (StatusCode::UNPROCESSABLE_ENTITY, "dataset_error"),
        };
        ApiError::new(status, code, msg)
    }
}

impl From<LabError> for ApiError {
    fn from(e: LabError) -> Self {
        SessionError::Lab(e).into()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad("bad_params", e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::bad("bad_params", e.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/datasets", get(list_datasets))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/workspace", get(get_workspace).put(put_workspace))
        .route("/sessions/{id}/dataset", post(select_dataset))
        .route("/sessions/{id}/frames", post(post_frame))
        .route("/sessions/{id}/render", get(get_render))
        .route("/sessions/{id}/slice", get(get_slice))
        .route("/sessions/{id}/charts/{view}", get(get_chart))
        .route("/sessions/{id}/meshes", get(get_meshes))
        .route("/sessions/{id}/views", post(post_view))
        .route("/sessions/{id}/views/{view}", patch(patch_view).delete(delete_view))
        .route("/sessions/{id}/events", get(events))
        .layer(DefaultBodyLimit::max(MAX_BODY))
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn list_datasets(State(st): State<Arc<AppState>>) -> ApiResult<impl IntoResponse> {
    Ok(Json(st.ctx.registry.summaries()?))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session: u64,
    pub workspace: Workspace,
}

async fn create_session(State(st): State<Arc<AppState>>) -> impl IntoResponse {
    let id = st.next_session.fetch_add(1, Ordering::Relaxed);
    let session = Session::new(id);
    let info = SessionInfo {
        session: id,
        workspace: session.workspace().clone(),
    };
    let (events, _) = broadcast::channel(EVENT_BUFFER);
    st.sessions.write().expect("session table poisoned").insert(
        id,
        Arc::new(SessionHandle {
            session: RwLock::new(session),
            events,
        }),
    );
    (StatusCode::CREATED, Json(info))
}

async fn get_session(State(st): State<Arc<AppState>>, Path(id): Path<u64>) -> ApiResult<Json<SessionInfo>> {
    let h = st.session(id)?;
    Ok(Json(h.read(|s| SessionInfo {
        session: id,
        workspace: s.workspace().clone(),
    })))
}

async fn get_workspace(State(st): State<Arc<AppState>>, Path(id): Path<u64>) -> ApiResult<Json<Workspace>> {
    let h = st.session(id)?;
    Ok(Json(h.read(|s| s.workspace().clone())))
}

async fn put_workspace(
    State(st): State<Arc<AppState>>,
    Path(id): Path<u64>,
    body: Result<Json<Workspace>, JsonRejection>,
) -> ApiResult<Json<Workspace>> {
    let Json(ws) = body?;
    let h = st.session(id)?;
    let ctx = st.ctx.clone();
    blocking(move || {
        h.mutate(|s| match s.replace_workspace(&ctx, ws) {
            Ok(ev) => (Ok(s.workspace().clone()), ev),
            Err(e) => (Err(e), vec![]),
        })
    })
    .await?
    .map(Json)
    .map_err(Into::into)
}

#[derive(Debug, Deserialize)]
struct SelectDataset {
    dataset: String,
}

async fn select_dataset(
    State(st): State<Arc<AppState>>,
    Path(id): Path<u64>,
    body: Result<Json<SelectDataset>, JsonRejection>,
) -> ApiResult<Json<Workspace>> {
    let Json(req) = body?;
    let h = st.session(id)?;
    let ctx = st.ctx.clone();
    blocking(move || {
        h.mutate(|s| match s.activate(&ctx, &req.dataset) {
            Ok(ev) => (Ok(s.workspace().clone()), ev),
            Err(e) => (Err(e), vec![]),
        })
    })
    .await?
    .map(Json)
    .map_err(Into::into)
}

async fn post_frame(
    State(st): State<Arc<AppState>>,
    Path(id): Path<u64>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let h = st.session(id)?;
    let frame = decode_frame(&body).map_err(|e| ApiError::bad("bad_frame", e))?;
    let ctx = st.ctx.clone();
    let report = blocking(move || {
        h.mutate(|s| {
            let r = s.ingest_frame(&ctx, &frame);
            let ev = r.events.clone();
            (r, ev)
        })
    })
    .await?;
    Ok(Json(report))
}

#[derive(Debug, Default, Deserialize)]
struct RenderQuery {
    mode: Option<RenderMode>,
    width: Option<usize>,
    height: Option<usize>,
    camera: Option<CameraMode>,
    yaw: Option<f64>,
    pitch: Option<f64>,
    distance: Option<f64>,
    fov: Option<f64>,
    step: Option<f64>,
    /// `default`, `transparent`, or a JSON list of `[x, [r, g, b, a]]`.
    tf: Option<String>,
    view: Option<u32>,
}

fn parse_tf(s: &str) -> Result<TransferFunction, SessionError> {
    match s {
        "default" => Ok(default_tf()),
        "transparent" => Ok(TransferFunction::constant([0.0; 4])),
        json => serde_json::from_str(json).map_err(|e| SessionError::BadTF(e.to_string())),
    }
}

impl RenderQuery {
    fn request(self) -> Result<RenderRequest, SessionError> {
        let d = RenderRequest::default();
        Ok(RenderRequest {
            mode: self.mode,
            width: self.width.unwrap_or(d.width),
            height: self.height.unwrap_or(d.height),
            camera: self.camera,
            yaw: self.yaw.unwrap_or(d.yaw),
            pitch: self.pitch.unwrap_or(d.pitch),
            distance: self.distance,
            fov: self.fov.unwrap_or(d.fov),
            step: self.step,
            tf: self.tf.as_deref().map(parse_tf).transpose()?,
            view: self.view,
        })
    }
}

fn png_response(png: Vec<u8>, hash: &str, headers: &HeaderMap) -> Response {
    let etag = format!("\"{hash}\"");
    let hdrs = [
        (header::CONTENT_TYPE, "image/png".to_string()),
        (header::ETAG, etag.clone()),
        (header::HeaderName::from_static("x-content-hash"), hash.to_string()),
        (header::CACHE_CONTROL, "no-cache".to_string()),
    ];
    if headers
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v == etag)
    {
        return (StatusCode::NOT_MODIFIED, hdrs).into_response();
    }
    (hdrs, png).into_response()
}

async fn get_render(
    State(st): State<Arc<AppState>>,
    Path(id): Path<u64>,
    headers: HeaderMap,
    query: Result<Query<RenderQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query?;
    let req = q.request()?;
    let h = st.session(id)?;
    let ctx = st.ctx.clone();
    let out = blocking(move || h.read(|s| s.render(&ctx, &req))).await??;
    Ok(png_response(out.png, &out.hash, &headers))
}

#[derive(Debug, Deserialize)]
struct SliceQuery {
    axis: Axis,
    index: usize,
}

async fn get_slice(
    State(st): State<Arc<AppState>>,
    Path(id): Path<u64>,
    headers: HeaderMap,
    query: Result<Query<SliceQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query?;
    let h = st.session(id)?;
    let png = blocking(move || h.read(|s| s.slice_png(q.axis, q.index))).await??;
    let hash = crate::session::content_hash(&png);
    Ok(png_response(png, &hash, &headers))
}

async fn get_chart(
    State(st): State<Arc<AppState>>,
    Path((id, view)): Path<(u64, u32)>,
) -> ApiResult<impl IntoResponse> {
    let h = st.session(id)?;
    let data = blocking(move || h.read(|s| s.chart(view))).await??;
    Ok(Json(data))
}

#[derive(Debug, Deserialize)]
struct MeshQuery {
    segments: Option<usize>,
    limit: Option<usize>,
}

async fn get_meshes(
    State(st): State<Arc<AppState>>,
    Path(id): Path<u64>,
    query: Result<Query<MeshQuery>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let Query(q) = query?;
    let h = st.session(id)?;
    let list = blocking(move || h.read(|s| s.meshes(q.segments.unwrap_or(16), q.limit))).await??;
    Ok(Json(list))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ViewRequest {
    pub spec: ViewSpec,
    #[serde(default)]
    pub pose: Option<Pose6DoF>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ViewPatch {
    #[serde(default)]
    pub pose: Option<Pose6DoF>,
    #[serde(default)]
    pub spec: Option<ViewSpec>,
}

async fn post_view(
    State(st): State<Arc<AppState>>,
    Path(id): Path<u64>,
    body: Result<Json<ViewRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    let h = st.session(id)?;
    let ctx = st.ctx.clone();
    let view = blocking(move || {
        h.mutate(|s| match s.place_view(&ctx, req.spec, req.pose) {
            Ok((v, ev)) => (Ok(v), ev),
            Err(e) => (Err(e), vec![]),
        })
    })
    .await??;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn patch_view(
    State(st): State<Arc<AppState>>,
    Path((id, view)): Path<(u64, u32)>,
    body: Result<Json<ViewPatch>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    let h = st.session(id)?;
    let ctx = st.ctx.clone();
    let view = blocking(move || {
        h.mutate(|s| match s.update_view(&ctx, view, req.pose, req.spec) {
            Ok((v, ev)) => (Ok(v), ev),
            Err(e) => (Err(e), vec![]),
        })
    })
    .await??;
    Ok(Json(view))
}

async fn delete_view(
    State(st): State<Arc<AppState>>,
    Path((id, view)): Path<(u64, u32)>,
) -> ApiResult<StatusCode> {
    let h = st.session(id)?;
    let ctx = st.ctx.clone();
    blocking(move || {
        h.mutate(|s| match s.remove_view(&ctx, view) {
            Ok(ev) => (Ok(()), ev),
            Err(e) => (Err(e), vec![]),
        })
    })
    .await??;
    Ok(StatusCode::NO_CONTENT)
}

async fn events(
    State(st): State<Arc<AppState>>,
    Path(id): Path<u64>,
) -> ApiResult<Sse<impl Stream<Item = Result<SseEvent, Infallible>>>> {
    let rx = st.session(id)?.events.subscribe();
    let stream = futures_util::stream::unfold(rx, |mut rx| async move {
        use broadcast::error::RecvError;
        let ev = match rx.recv().await {
            Ok(ev) => SseEvent::default()
                .event(ev.name())
                .id(ev.seq.to_string())
                .json_data(&ev)
                .expect("events serialize"),
            // The client fell behind; it should refetch the workspace.
            Err(RecvError::Lagged(n)) => SseEvent::default().event("lagged").data(n.to_string()),
            Err(RecvError::Closed) => return None,
        };
        Some((Ok(ev), rx))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}
