use std::collections::HashMap;
use std::convert::Infallible;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use futures::stream::{self, Stream};
use parking_lot::Mutex;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use rhythm_dungeon::canonical;
use rhythm_dungeon::characters::{Attribute, CharacterError};
use rhythm_dungeon::games::dungeon::{Phase, SessionError, SessionEvent};
use rhythm_dungeon::ledger::{chain_id_from_path, Chain, ChainWriter, LedgerError, PersistError};
use rhythm_dungeon::{rng, Block, CharacterRecord, Digest, InputEvent, Receipt, Weakness};

use crate::clock::Clock;
use crate::live::{Announcement, LiveSession, LoggedOp, SessionOp, SessionStart, SessionView};

/// The submitter name the gateway signs uploads with.
pub const SERVICE_SUBMITTER: &str = "rd-service";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceConfig {
    pub seed: u64,
    pub p_fetch_percent: u8,
    /// Gap between session start and the first beat.
    pub lead_in_ms: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { seed: 0, p_fetch_percent: 50, lead_in_ms: 3_000 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("unknown character {0}")]
    UnknownCharacter(u64),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("input at {at_us} is after the window deadline {deadline_us}")]
    WindowClosed { at_us: i64, deadline_us: i64 },
    #[error("session already uploaded")]
    AlreadyUploaded,
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("chain file: {0}")]
    Io(#[from] std::io::Error),
}

impl ApiError {
    fn kind(&self) -> &'static str {
        match self {
            ApiError::UnknownSession(_) => "UnknownSession",
            ApiError::UnknownCharacter(_) => "UnknownCharacter",
            ApiError::BadRequest(_) => "BadRequest",
            ApiError::WindowClosed { .. } => "WindowClosed",
            ApiError::AlreadyUploaded => "AlreadyUploaded",
            ApiError::Session(SessionError::Character(CharacterError::BadName)) => "BadName",
            ApiError::Session(SessionError::Character(CharacterError::NoPoints)) => "NoPoints",
            ApiError::Session(SessionError::Character(CharacterError::AttributeCap(_))) => "AttributeCap",
            ApiError::Session(SessionError::SessionActive) => "SessionActive",
            ApiError::Session(SessionError::SessionOver) => "SessionOver",
            ApiError::Session(SessionError::InBattle) => "InBattle",
            ApiError::Ledger(_) => "Ledger",
            ApiError::Io(_) => "Io",
        }
    }

    fn status(&self) -> StatusCode {
        match self {
            ApiError::UnknownSession(_) | ApiError::UnknownCharacter(_) => StatusCode::NOT_FOUND,
            ApiError::BadRequest(_) | ApiError::Session(SessionError::Character(CharacterError::BadName)) => {
                StatusCode::BAD_REQUEST
            }
            ApiError::WindowClosed { .. } | ApiError::AlreadyUploaded | ApiError::Session(_) => StatusCode::CONFLICT,
            ApiError::Ledger(_) | ApiError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    detail: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { error: self.kind(), detail: self.to_string() };
        canonical_response(self.status(), &body)
    }
}

fn canonical_response<T: Serialize>(status: StatusCode, body: &T) -> Response {
    match canonical::to_string(body) {
        Ok(text) => (status, [(header::CONTENT_TYPE, "application/json")], text).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

fn ok<T: Serialize>(body: &T) -> Response {
    canonical_response(StatusCode::OK, body)
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(e.to_string()))
}

struct Shared {
    writer: Mutex<ChainWriter>,
    chain_path: Option<PathBuf>,
    sessions: Mutex<HashMap<String, LiveSession>>,
    clock: Arc<dyn Clock>,
    config: ServiceConfig,
    counter: AtomicU64,
}

/// Everything the router needs; cheap to clone.
#[derive(Clone)]
pub struct App {
    shared: Arc<Shared>,
}

impl App {
    pub fn new(writer: ChainWriter, chain_path: Option<PathBuf>, clock: Arc<dyn Clock>, config: ServiceConfig) -> Self {
        App {
            shared: Arc::new(Shared {
                writer: Mutex::new(writer),
                chain_path,
                sessions: Mutex::new(HashMap::new()),
                clock,
                config,
                counter: AtomicU64::new(0),
            }),
        }
    }

    /// Serves the chain at `path`, creating an empty one if the file does
    /// not exist yet. The file name must be `chain_<id>.ndjson`.
    pub fn open(path: impl AsRef<Path>, clock: Arc<dyn Clock>, config: ServiceConfig) -> Result<Self, PersistError> {
        let path = path.as_ref();
        let writer = if path.exists() {
            ChainWriter::from_chain(Chain::load(path)?).map_err(|e| match e {
                LedgerError::InvalidChain(v) => PersistError::Verify(v),
                other => PersistError::Io(std::io::Error::other(other.to_string())),
            })?
        } else {
            let id = chain_id_from_path(path).ok_or_else(|| PersistError::FileName(path.to_owned()))?;
            ChainWriter::new(id)
        };
        Ok(App::new(writer, Some(path.to_owned()), clock, config))
    }

    pub fn chain(&self) -> Chain {
        self.shared.writer.lock().chain().clone()
    }

    pub fn router(self) -> Router {
        Router::new()
            .route("/time", get(time))
            .route("/sessions", post(start_session))
            .route("/sessions/:id", get(get_session))
            .route("/sessions/:id/window", post(submit_window))
            .route("/sessions/:id/allocate", post(allocate))
            .route("/sessions/:id/retire", post(retire))
            .route("/sessions/:id/upload", post(upload))
            .route("/sessions/:id/log", get(session_log))
            .route("/sessions/:id/stream", get(stream))
            .route("/chain/blocks", get(blocks))
            .route("/chain/characters", get(characters))
            .route("/chain/characters/:id", get(character))
            .route("/chain/state-digest", get(state_digest))
            .with_state(self)
    }

    fn with_session<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut LiveSession, &ChainWriter) -> Result<T, ApiError>,
    ) -> Result<T, ApiError> {
        let mut sessions = self.shared.sessions.lock();
        let live = sessions.get_mut(id).ok_or_else(|| ApiError::UnknownSession(id.to_owned()))?;
        let writer = self.shared.writer.lock();
        f(live, &writer)
    }
}

fn apply(live: &mut LiveSession, writer: &ChainWriter, op: SessionOp) -> Result<Vec<SessionEvent>, ApiError> {
    Ok(live.apply(op, writer.state(), writer.chain().len() as u64)?)
}

#[derive(Serialize)]
struct TimeBody {
    server_us: u64,
}

async fn time(State(app): State<App>) -> Response {
    ok(&TimeBody { server_us: app.shared.clock.now_us() })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StartRequest {
    pub name: String,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Client clock minus server clock, from the ping handshake.
    #[serde(default)]
    pub clock_offset_us: Option<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StartResponse {
    pub session_id: String,
    pub events: Vec<SessionEvent>,
    pub view: SessionView,
}

/// Starts a session and spawns its first enemy.
async fn start_session(State(app): State<App>, body: Bytes) -> Result<Response, ApiError> {
    let req: StartRequest = parse(&body)?;
    let n = app.shared.counter.fetch_add(1, Ordering::SeqCst);
    let cfg = app.shared.config;
    let seed = req.seed.unwrap_or_else(|| rng::derive(cfg.seed, n));
    let origin_ms = app.shared.clock.now_us() / 1000 + cfg.lead_in_ms;
    let start = SessionStart { name: req.name, seed, origin_ms, p_fetch_percent: cfg.p_fetch_percent };
    let id = format!("s{n}-{:08x}", rng::derive(seed, n) as u32);
    let mut live = LiveSession::new(id.clone(), start, req.clock_offset_us.unwrap_or(0))?;

    let events = {
        let writer = app.shared.writer.lock();
        apply(&mut live, &writer, SessionOp::Step { inputs: Vec::new(), stance: None })?
    };
    let view = live.view();
    app.shared.sessions.lock().insert(id.clone(), live);
    Ok(canonical_response(StatusCode::CREATED, &StartResponse { session_id: id, events, view }))
}

async fn get_session(State(app): State<App>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    app.with_session(&id, |live, _| Ok(ok(&live.view())))
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct WindowRequest {
    /// Press times in the client's clock.
    #[serde(default)]
    pub inputs: Vec<InputEvent>,
    #[serde(default)]
    pub stance: Option<Weakness>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StepResponse {
    pub events: Vec<SessionEvent>,
    pub view: SessionView,
}

/// In battle, judges the open window; between rooms, spawns the next enemy
/// (inputs are ignored then).
async fn submit_window(State(app): State<App>, UrlPath(id): UrlPath<String>, body: Bytes) -> Result<Response, ApiError> {
    let req: WindowRequest = parse(&body)?;
    app.with_session(&id, |live, writer| {
        let mut inputs = Vec::with_capacity(req.inputs.len());
        for e in &req.inputs {
            let server = e.at_us as i64 - live.clock_offset_us;
            let at_us = u64::try_from(server).map_err(|_| ApiError::BadRequest(format!("press at {} predates the server clock", e.at_us)))?;
            inputs.push(InputEvent::new(at_us, e.button));
        }
        if live.session.phase == Phase::InBattle {
            let deadline = live.session.grid.capture_deadline_us(live.session.window_index);
            if let Some(late) = inputs.iter().find(|e| e.at_us > deadline) {
                return Err(ApiError::WindowClosed {
                    at_us: live.to_client(late.at_us),
                    deadline_us: live.to_client(deadline),
                });
            }
        }
        let events = apply(live, writer, SessionOp::Step { inputs, stance: req.stance })?;
        Ok(ok(&StepResponse { events, view: live.view() }))
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AllocateRequest {
    pub attribute: Attribute,
}

async fn allocate(State(app): State<App>, UrlPath(id): UrlPath<String>, body: Bytes) -> Result<Response, ApiError> {
    let req: AllocateRequest = parse(&body)?;
    app.with_session(&id, |live, writer| {
        apply(live, writer, SessionOp::Allocate { attribute: req.attribute })?;
        Ok(ok(&live.view()))
    })
}

async fn retire(State(app): State<App>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    app.with_session(&id, |live, writer| {
        apply(live, writer, SessionOp::Retire)?;
        Ok(ok(&live.view()))
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UploadResponse {
    pub receipt: Receipt,
    pub block: Block,
}

/// Seals the finished character into a new block and appends that block
/// to the chain file.
async fn upload(State(app): State<App>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let mut sessions = app.shared.sessions.lock();
    let live = sessions.get_mut(&id).ok_or_else(|| ApiError::UnknownSession(id.clone()))?;
    if live.upload.is_some() {
        return Err(ApiError::AlreadyUploaded);
    }
    let call = live.session.clone().finish_and_upload()?;

    let mut writer = app.shared.writer.lock();
    let receipt = writer.submit(SERVICE_SUBMITTER, call)?;
    let block = writer
        .commit(app.shared.clock.now_us() / 1000)?
        .expect("one transaction pending")
        .clone();
    if let Some(path) = &app.shared.chain_path {
        let mut file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        writeln!(file, "{}", block.to_canonical_line())?;
    }
    live.upload = Some(receipt.clone());
    Ok(ok(&UploadResponse { receipt, block }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionLog {
    pub start: SessionStart,
    pub clock_offset_us: i64,
    pub ops: Vec<LoggedOp>,
    pub events: Vec<SessionEvent>,
}

async fn session_log(State(app): State<App>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    app.with_session(&id, |live, _| {
        Ok(ok(&SessionLog {
            start: live.start.clone(),
            clock_offset_us: live.clock_offset_us,
            ops: live.ops.clone(),
            events: live.events.clone(),
        }))
    })
}

fn announcement_event(a: &Announcement) -> Event {
    Event::default()
        .event("window")
        .data(canonical::to_string(a).expect("announcements are integer-only"))
}

/// Server-sent events: the open window first, then one per new window.
/// Advisory only; the window submission decides outcomes.
async fn stream(
    State(app): State<App>,
    UrlPath(id): UrlPath<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let (current, rx) = app.with_session(&id, |live, _| Ok((live.schedule(), live.subscribe())))?;
    let first = stream::iter(current.map(|a| Ok(announcement_event(&a))));
    let rest = stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(a) => return Some((Ok(announcement_event(&a)), rx)),
                Err(tokio::sync::broadcast::error::RecvError::Lagged(_)) => continue,
                Err(tokio::sync::broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    Ok(Sse::new(futures::StreamExt::chain(first, rest)).keep_alive(KeepAlive::default()))
}

#[derive(Debug, Deserialize)]
struct BlocksQuery {
    from: Option<u64>,
}

async fn blocks(State(app): State<App>, Query(q): Query<BlocksQuery>) -> Response {
    let writer = app.shared.writer.lock();
    let from = q.from.unwrap_or(0).min(writer.chain().len() as u64) as usize;
    ok(&writer.chain().blocks()[from..].to_vec())
}

async fn characters(State(app): State<App>) -> Response {
    ok(app.shared.writer.lock().state().characters())
}

async fn character(State(app): State<App>, UrlPath(id): UrlPath<u64>) -> Result<Response, ApiError> {
    let writer = app.shared.writer.lock();
    let record: &CharacterRecord = writer.state().character(id).ok_or(ApiError::UnknownCharacter(id))?;
    Ok(ok(record))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StateDigest {
    pub chain_id: u64,
    pub height: u64,
    pub digest: Digest,
}

async fn state_digest(State(app): State<App>) -> Response {
    let writer = app.shared.writer.lock();
    ok(&StateDigest {
        chain_id: writer.chain_id(),
        height: writer.chain().len() as u64,
        digest: writer.state().state_digest(),
    })
}
