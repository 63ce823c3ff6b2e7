use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::Request;
use futures::{SinkExt, StreamExt};
use http_body_util::BodyExt;
use overcooked_core::eval::{read_replay, verify_replay};
use overcooked_core::render::grid_hash;
use overcooked_core::Action;
use overcooked_server::protocol::CreatedSession;
use overcooked_server::session::SessionInfo;
use overcooked_server::{router, AppState, ServerMsg, Status};
use serde_json::{json, Value};
use tokio::net::{TcpListener, TcpStream};
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};
use tower::ServiceExt;

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

const WAIT: Duration = Duration::from_secs(5);

struct Server {
    state: Arc<AppState>,
    addr: std::net::SocketAddr,
}

impl Server {
    async fn start() -> Self {
        let state = Arc::new(AppState::default());
        let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let app = router(state.clone());
        tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
        Server { state, addr }
    }

    async fn http(&self, req: Request<Body>) -> Vec<u8> {
        let res = router(self.state.clone()).oneshot(req).await.unwrap();
        res.into_body().collect().await.unwrap().to_bytes().to_vec()
    }

    async fn create(&self, body: Value) -> String {
        let req = Request::post("/sessions")
            .header("content-type", "application/json")
            .body(Body::from(body.to_string()));
        let created: CreatedSession = serde_json::from_slice(&self.http(req.unwrap()).await).unwrap();
        created.id
    }

    async fn info(&self, id: &str) -> SessionInfo {
        serde_json::from_slice(
            &self
                .http(Request::get(format!("/sessions/{id}")).body(Body::empty()).unwrap())
                .await,
        )
        .unwrap()
    }

    async fn replay(&self, id: &str) -> Vec<u8> {
        self.http(
            Request::get(format!("/sessions/{id}/replay"))
                .body(Body::empty())
                .unwrap(),
        )
        .await
    }

    async fn join(&self, id: &str, seat: Option<usize>) -> Ws {
        let query = seat.map_or(String::new(), |s| format!("?seat={s}"));
        connect_async(format!("ws://{}/sessions/{id}/ws{query}", self.addr))
            .await
            .unwrap()
            .0
    }
}

async fn send(ws: &mut Ws, v: Value) {
    ws.send(Message::Text(v.to_string().into())).await.unwrap();
}

async fn act(ws: &mut Ws, a: &str) {
    send(ws, json!({"type": "act", "action": a})).await;
}

async fn recv(ws: &mut Ws) -> ServerMsg {
    loop {
        let msg = tokio::time::timeout(WAIT, ws.next())
            .await
            .expect("server went quiet")
            .unwrap()
            .unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

/// Next frame, checked for internal consistency.
async fn frame(ws: &mut Ws) -> (Status, Vec<f32>, overcooked_core::render::Frame) {
    match recv(ws).await {
        ServerMsg::Frame {
            status, rewards, frame, ..
        } => {
            assert_eq!(frame.grid_hash, grid_hash(&frame.rows));
            (status, rewards, *frame)
        }
        other => panic!("expected a frame, got {other:?}"),
    }
}

async fn error(ws: &mut Ws) -> String {
    match recv(ws).await {
        ServerMsg::Error { reason } => reason,
        other => panic!("expected an error, got {other:?}"),
    }
}

#[tokio::test]
async fn solo_human_plays_a_verifiable_episode() {
    let srv = Server::start().await;
    let id = srv
        .create(json!({"layout": "cramped_room", "seats": ["human", "random"], "seed": 5, "config": {"max_steps": 12}}))
        .await;
    let mut ws = srv.join(&id, None).await;
    let (status, rewards, f) = frame(&mut ws).await;
    assert_eq!((status, f.t), (Status::Running, 0));
    assert!(rewards.is_empty());

    let mut hashes = Vec::new();
    for t in 1..=12u32 {
        act(&mut ws, ["up", "left", "interact", "down"][t as usize % 4]).await;
        let (status, rewards, f) = frame(&mut ws).await;
        assert_eq!(f.t, t);
        assert_eq!(rewards.len(), 2);
        assert_eq!(status, if t == 12 { Status::Done } else { Status::Running });
        hashes.push(f.state_hash);
    }
    let ServerMsg::Done { score } = recv(&mut ws).await else {
        panic!("expected done")
    };
    assert_eq!(score, srv.info(&id).await.score);

    let traj = read_replay(&srv.replay(&id).await[..]).unwrap();
    verify_replay(&traj).unwrap();
    assert_eq!(traj.steps.iter().map(|s| s.hash.clone()).collect::<Vec<_>>(), hashes);
    assert!(traj.steps.iter().all(|s| s.actions[0] != Action::Stay));

    act(&mut ws, "up").await;
    assert!(error(&mut ws).await.contains("reset"));
    send(&mut ws, json!({"type": "reset"})).await;
    let (status, _, f) = frame(&mut ws).await;
    assert_eq!((status, f.t), (Status::Running, 0));
    assert_eq!(srv.info(&id).await.episode, 1);
}

#[tokio::test]
async fn second_action_in_a_tick_is_rejected() {
    let srv = Server::start().await;
    let id = srv
        .create(json!({"layout": "cramped_room", "seats": ["human", "human"]}))
        .await;
    let mut a = srv.join(&id, Some(0)).await;
    assert_eq!(frame(&mut a).await.0, Status::Waiting);
    let mut b = srv.join(&id, Some(1)).await;
    assert_eq!(frame(&mut a).await.0, Status::Running);
    assert_eq!(frame(&mut b).await.0, Status::Running);

    act(&mut a, "right").await;
    act(&mut a, "left").await;
    assert_eq!(error(&mut a).await, "awaiting tick");
    assert_eq!(srv.info(&id).await.t, 0);

    act(&mut b, "stay").await;
    for ws in [&mut a, &mut b] {
        let (_, rewards, f) = frame(ws).await;
        assert_eq!((f.t, rewards.len()), (1, 2));
    }
    let traj = read_replay(&srv.replay(&id).await[..]).unwrap();
    assert_eq!(traj.steps[0].actions, vec![Action::Right, Action::Stay]);
}

#[tokio::test]
async fn disconnect_pauses_until_the_seat_returns() {
    let srv = Server::start().await;
    let id = srv
        .create(json!({"layout": "cramped_room", "seats": ["human", "human"]}))
        .await;
    let mut a = srv.join(&id, None).await;
    frame(&mut a).await;
    let mut b = srv.join(&id, None).await;
    frame(&mut a).await;
    frame(&mut b).await;
    assert_eq!(srv.info(&id).await.connected, vec![true, true]);

    b.close(None).await.unwrap();
    assert_eq!(frame(&mut a).await.0, Status::Paused);
    act(&mut a, "up").await;
    assert!(error(&mut a).await.contains("paused"));

    let mut b = srv.join(&id, Some(1)).await;
    assert_eq!(frame(&mut a).await.0, Status::Running);
    assert_eq!(frame(&mut b).await.0, Status::Running);
    act(&mut a, "up").await;
    act(&mut b, "up").await;
    assert_eq!(frame(&mut a).await.2.t, 1);
}

#[tokio::test]
async fn grace_period_expires_paused_sessions() {
    let srv = Server::start().await;
    let id = srv
        .create(json!({"layout": "cramped_room", "seats": ["human", "human"], "grace_ms": 50}))
        .await;
    let mut a = srv.join(&id, None).await;
    frame(&mut a).await;
    let mut b = srv.join(&id, None).await;
    frame(&mut a).await;
    drop(b.close(None).await);
    assert_eq!(frame(&mut a).await.0, Status::Paused);
    assert_eq!(frame(&mut a).await.0, Status::Expired);
    assert_eq!(error(&mut a).await, "session expired");
    assert_eq!(srv.info(&id).await.status, Status::Expired);
    let mut late = srv.join(&id, Some(1)).await;
    assert_eq!(error(&mut late).await, "session expired");
}

#[tokio::test]
async fn human_timeout_steps_without_the_slow_seat() {
    let srv = Server::start().await;
    let id = srv
        .create(json!({"layout": "cramped_room", "seats": ["human", "human"], "human_timeout_ms": 50}))
        .await;
    let mut a = srv.join(&id, None).await;
    frame(&mut a).await;
    let mut b = srv.join(&id, None).await;
    frame(&mut a).await;
    frame(&mut b).await;
    act(&mut a, "interact").await;
    assert_eq!(frame(&mut a).await.2.t, 1);
    let traj = read_replay(&srv.replay(&id).await[..]).unwrap();
    assert_eq!(traj.steps[0].actions, vec![Action::Interact, Action::Stay]);
}

#[tokio::test]
async fn malformed_messages_change_nothing() {
    let srv = Server::start().await;
    let id = srv
        .create(json!({"layout": "cramped_room", "seats": ["random", "human"]}))
        .await;
    let mut ws = srv.join(&id, None).await;
    assert_eq!(frame(&mut ws).await.2.t, 0);
    for bad in [
        json!("hello"),
        json!({"type": "act", "action": "jump"}),
        json!({"type": "dance"}),
        json!({"action": "up"}),
    ] {
        send(&mut ws, bad).await;
        assert!(error(&mut ws).await.starts_with("malformed message"));
    }
    ws.send(Message::Binary(vec![1u8, 2, 3].into())).await.unwrap();
    assert!(error(&mut ws).await.starts_with("malformed message"));
    let info = srv.info(&id).await;
    assert_eq!((info.t, info.status), (0, Status::Running));
}

#[tokio::test]
async fn seat_claims_are_exclusive() {
    let srv = Server::start().await;
    let id = srv
        .create(json!({"layout": "cramped_room", "seats": ["human", "greedy"]}))
        .await;
    let mut a = srv.join(&id, Some(0)).await;
    frame(&mut a).await;
    let mut again = srv.join(&id, Some(0)).await;
    assert!(error(&mut again).await.contains("already connected"));
    let mut bot = srv.join(&id, Some(1)).await;
    assert!(error(&mut bot).await.contains("policy"));
    let mut none = srv.join(&id, None).await;
    assert_eq!(error(&mut none).await, "no free human seat");
}

#[tokio::test]
async fn fog_frames_are_per_seat() {
    let srv = Server::start().await;
    let id = srv
        .create(
            json!({"layout": "cramped_room", "seats": ["human", "human"], "fog": true, "config": {"view_radius": 1}}),
        )
        .await;
    let mut a = srv.join(&id, None).await;
    frame(&mut a).await;
    let mut b = srv.join(&id, None).await;
    let fa = frame(&mut a).await.2;
    let fb = frame(&mut b).await.2;
    assert_eq!((fa.viewer, fb.viewer), (Some(0), Some(1)));
    assert!(fa.rows.iter().any(|r| r.contains('?')));
    assert_ne!(fa.rows, fb.rows);
    // the hidden part differs but the state does not
    assert_eq!(fa.state_hash, fb.state_hash);
}
