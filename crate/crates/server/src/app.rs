//! axum routes over a table of sessions.
//!
//! Each session sits behind its own mutex (the single writer) and a broadcast
//! channel. Every state change is rendered once, under the lock, into one
//! message per seat, so no connection can miss or reorder a tick.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::ws::rejection::WebSocketUpgradeRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use overcooked_core::eval::write_replay;
use overcooked_core::item::MAX_INGREDIENTS;
use overcooked_core::layout::BUILTIN_NAMES;
use overcooked_core::observation::obs_schema;
use overcooked_core::policy::PolicySpec;
use overcooked_core::render::FRAME_VERSION;
use overcooked_core::{builtin, Action, EnvConfig, SplitMix64};
use serde::Deserialize;
use tokio::sync::broadcast;

use crate::protocol::{
    ClientMsg, CreateSession, CreatedSession, ErrorBody, LayoutSummary, SchemaDoc, SeatRequest, ServerMsg,
};
use crate::session::{Seat, Session, SessionError, SessionOptions, Status, Tick};

const FANOUT_CAPACITY: usize = 64;

/// Messages produced by one state change, indexed by seat.
#[derive(Debug)]
struct Fanout {
    per_seat: Vec<ServerMsg>,
    done: Option<ServerMsg>,
}

struct Handle {
    session: Mutex<Session>,
    tx: broadcast::Sender<Arc<Fanout>>,
}

impl Handle {
    fn lock(&self) -> std::sync::MutexGuard<'_, Session> {
        // a panic mid-tick leaves nothing half-written worth refusing
        self.session.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Renders the current state for every seat and broadcasts it.
    fn publish(&self, session: &Session, tick: Option<&Tick>) {
        let per_seat = (0..session.seats().len())
            .map(|seat| ServerMsg::Frame {
                seat,
                status: session.status(),
                rewards: tick.map(|t| t.rewards.clone()).unwrap_or_default(),
                events: tick.map(|t| t.events.clone()).unwrap_or_default(),
                frame: Box::new(session.frame_for(Some(seat))),
            })
            .collect();
        let done = match session.status() {
            Status::Done => Some(ServerMsg::Done { score: session.score() }),
            Status::Expired => Some(ServerMsg::Error {
                reason: SessionError::Expired.to_string(),
            }),
            _ => None,
        };
        // no receivers is fine: nobody is connected
        let _ = self.tx.send(Arc::new(Fanout { per_seat, done }));
    }
}

/// Shared server state.
pub struct AppState {
    sessions: Mutex<HashMap<String, Arc<Handle>>>,
    ids: Mutex<SplitMix64>,
    created: AtomicU64,
}

impl Default for AppState {
    fn default() -> Self {
        let nanos = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos() as u64);
        Self {
            sessions: Mutex::new(HashMap::new()),
            ids: Mutex::new(SplitMix64::new(nanos)),
            created: AtomicU64::new(0),
        }
    }
}

impl AppState {
    fn get(&self, id: &str) -> Option<Arc<Handle>> {
        self.sessions.lock().unwrap_or_else(|e| e.into_inner()).get(id).cloned()
    }

    fn fresh_id(&self) -> String {
        let n = self.created.fetch_add(1, Ordering::Relaxed);
        let r = self.ids.lock().unwrap_or_else(|e| e.into_inner()).next_u64();
        format!("{:08x}{:04x}", r >> 32, n & 0xffff)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/layouts", get(layouts))
        .route("/schema", get(schema))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_info))
        .route("/sessions/{id}/replay", get(session_replay))
        .route("/sessions/{id}/ws", get(session_ws))
        .with_state(state)
}

type ApiError = (StatusCode, Json<ErrorBody>);

fn api_error(status: StatusCode, error: impl ToString) -> ApiError {
    (
        status,
        Json(ErrorBody {
            error: error.to_string(),
        }),
    )
}

async fn layouts() -> Json<Vec<LayoutSummary>> {
    let out = BUILTIN_NAMES
        .iter()
        .map(|name| {
            let l = builtin(name).expect("registry layouts parse");
            LayoutSummary {
                name: l.name.clone(),
                width: l.width,
                height: l.height,
                agents: l.num_agents(),
                ingredients: l.num_ingredients,
                recipes: l.recipes.iter().map(|r| r.ingredients()).collect(),
            }
        })
        .collect();
    Json(out)
}

#[derive(Deserialize)]
struct SchemaQuery {
    ingredients: Option<usize>,
}

async fn schema(Query(q): Query<SchemaQuery>) -> Result<Json<SchemaDoc>, ApiError> {
    let n = q.ingredients.unwrap_or(1);
    if n == 0 || n > MAX_INGREDIENTS {
        return Err(api_error(
            StatusCode::BAD_REQUEST,
            format!("ingredients must be in 1..={MAX_INGREDIENTS}"),
        ));
    }
    Ok(Json(SchemaDoc {
        frame_version: FRAME_VERSION,
        actions: Action::ALL.to_vec(),
        observation: obs_schema(n),
    }))
}

fn build_session(id: String, req: CreateSession) -> Result<Session, String> {
    let layout = builtin(&req.layout).map_err(|e| e.to_string())?;
    let overrides: Vec<(String, String)> = req.config.iter().map(|(k, v)| (k.clone(), v.to_string())).collect();
    let config = EnvConfig::new(layout, Default::default())
        .and_then(|c| c.apply_overrides(&overrides))
        .map_err(|e| format!("invalid config: {e}"))?;
    let seats = req
        .seats
        .into_iter()
        .map(|s| match s {
            SeatRequest::Name(name) if name.eq_ignore_ascii_case("human") => Ok(Seat::Human),
            // names only: a request must not make the server read files
            SeatRequest::Name(name) => name.parse::<PolicySpec>().map(Seat::Policy).map_err(|e| e.to_string()),
            SeatRequest::Spec(spec) => spec.build().map(|_| Seat::Policy(spec)).map_err(|e| e.to_string()),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut options = SessionOptions {
        fog: req.fog,
        human_timeout: req.human_timeout_ms.map(Duration::from_millis),
        seed: req.seed,
        ..SessionOptions::default()
    };
    if let Some(ms) = req.grace_ms {
        options.grace = Duration::from_millis(ms);
    }
    Session::new(id, config, seats, options)
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<CreatedSession>), ApiError> {
    let Json(req) = body.map_err(|e| api_error(StatusCode::BAD_REQUEST, e.body_text()))?;
    let id = app.fresh_id();
    let session = build_session(id.clone(), req).map_err(|e| api_error(StatusCode::BAD_REQUEST, e))?;
    let created = CreatedSession {
        id: id.clone(),
        info: session.info(),
        schema: obs_schema(session.config().num_ingredients()),
        frame: session.frame_for(None),
    };
    let (tx, _) = broadcast::channel(FANOUT_CAPACITY);
    let handle = Arc::new(Handle {
        session: Mutex::new(session),
        tx,
    });
    app.sessions
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .insert(id, handle);
    Ok((StatusCode::CREATED, Json(created)))
}

fn unknown_session(id: &str) -> ApiError {
    api_error(StatusCode::NOT_FOUND, format!("no session {id:?}"))
}

async fn session_info(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<crate::session::SessionInfo>, ApiError> {
    let h = app.get(&id).ok_or_else(|| unknown_session(&id))?;
    let info = h.lock().info();
    Ok(Json(info))
}

/// The current episode as replay JSON lines.
async fn session_replay(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let h = app.get(&id).ok_or_else(|| unknown_session(&id))?;
    let traj = h.lock().trajectory();
    let mut out = Vec::new();
    write_replay(&traj, &mut out).map_err(|e| api_error(StatusCode::INTERNAL_SERVER_ERROR, e))?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], out).into_response())
}

#[derive(Deserialize)]
struct WsQuery {
    seat: Option<usize>,
}

async fn session_ws(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<WsQuery>,
    ws: Result<WebSocketUpgrade, WebSocketUpgradeRejection>,
) -> Result<Response, ApiError> {
    let h = app.get(&id).ok_or_else(|| unknown_session(&id))?;
    let ws = ws.map_err(|e| api_error(e.status(), e.body_text()))?;
    Ok(ws.on_upgrade(move |socket| play(socket, h, q.seat)))
}

async fn send(socket: &mut WebSocket, msg: &ServerMsg) -> bool {
    let text = serde_json::to_string(msg).expect("messages serialize");
    socket.send(Message::Text(text.into())).await.is_ok()
}

async fn send_error(socket: &mut WebSocket, reason: impl ToString) -> bool {
    send(
        socket,
        &ServerMsg::Error {
            reason: reason.to_string(),
        },
    )
    .await
}

/// Arms the human timeout for the open tick, if the session has one.
fn arm_timeout(h: &Arc<Handle>, deadline: Option<Instant>) {
    let Some(deadline) = deadline else { return };
    let h = h.clone();
    tokio::spawn(async move {
        tokio::time::sleep_until(deadline.into()).await;
        let mut s = h.lock();
        if let Some(tick) = s.poll_timeout(Instant::now()) {
            h.publish(&s, Some(&tick));
        }
    });
}

fn arm_grace(h: &Arc<Handle>, grace: Duration) {
    let h = h.clone();
    tokio::spawn(async move {
        tokio::time::sleep(grace).await;
        let mut s = h.lock();
        if s.expire_if_stale(Instant::now()) {
            h.publish(&s, None);
        }
    });
}

async fn play(mut socket: WebSocket, h: Arc<Handle>, seat: Option<usize>) {
    // connect and subscribe under one lock so the first broadcast we see is our own join
    let joined = {
        let mut s = h.lock();
        let seat = match seat {
            Some(seat) => Ok(seat),
            None => s.free_seat(),
        };
        seat.and_then(|seat| s.connect(seat).map(|_| seat)).map(|seat| {
            let rx = h.tx.subscribe();
            h.publish(&s, None);
            (seat, rx)
        })
    };
    let (seat, mut rx) = match joined {
        Ok(v) => v,
        Err(e) => {
            send_error(&mut socket, e).await;
            let _ = socket.send(Message::Close(None)).await;
            return;
        }
    };
    tracing::debug!(seat, "seat connected");

    loop {
        tokio::select! {
            incoming = socket.recv() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Ping(_) | Message::Pong(_))) => continue,
                    Some(Ok(Message::Binary(_))) => {
                        if !send_error(&mut socket, "malformed message: expected JSON text").await { break }
                        continue;
                    }
                    Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
                };
                let msg: ClientMsg = match serde_json::from_str(&text) {
                    Ok(m) => m,
                    Err(e) => {
                        if !send_error(&mut socket, format!("malformed message: {e}")).await { break }
                        continue;
                    }
                };
                let failure = {
                    let mut s = h.lock();
                    match msg {
                        ClientMsg::Act { action } => match s.submit(seat, action, Instant::now()) {
                            Ok(Some(tick)) => { h.publish(&s, Some(&tick)); None }
                            Ok(None) => { arm_timeout(&h, s.timeout_deadline()); None }
                            Err(e) => Some(e),
                        },
                        ClientMsg::Reset => match s.reset() {
                            Ok(()) => { h.publish(&s, None); None }
                            Err(e) => Some(e),
                        },
                    }
                };
                if let Some(e) = failure {
                    if !send_error(&mut socket, e).await { break }
                }
            }
            fan = rx.recv() => {
                let fan = match fan {
                    Ok(f) => f,
                    Err(broadcast::error::RecvError::Lagged(_)) => {
                        // too slow to follow every tick: resync on the current state
                        let msg = {
                            let s = h.lock();
                            ServerMsg::Frame {
                                seat,
                                status: s.status(),
                                rewards: Vec::new(),
                                events: Vec::new(),
                                frame: Box::new(s.frame_for(Some(seat))),
                            }
                        };
                        if !send(&mut socket, &msg).await { break }
                        continue;
                    }
                    Err(broadcast::error::RecvError::Closed) => break,
                };
                if !send(&mut socket, &fan.per_seat[seat]).await { break }
                if let Some(done) = &fan.done {
                    if !send(&mut socket, done).await { break }
                }
            }
        }
    }

    let grace = {
        let mut s = h.lock();
        s.disconnect(seat, Instant::now());
        h.publish(&s, None);
        (s.status() == Status::Paused).then(|| s.grace())
    };
    if let Some(grace) = grace {
        arm_grace(&h, grace);
    }
    tracing::debug!(seat, "seat disconnected");
}

/// Serves the API on an already bound listener until the future is dropped.
pub async fn serve(listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(Arc::new(AppState::default()))).await
}
