//! Multiplayer sessions over HTTP and WebSocket.
//!
//! Routes:
//!
//! - `GET /layouts`: built-in layouts with their size, agents and recipes.
//! - `GET /schema?ingredients=n`: action names, frame version, observation channels.
//! - `POST /sessions`: create a session from a [`protocol::CreateSession`] body.
//! - `GET /sessions/{id}`: [`session::SessionInfo`].
//! - `GET /sessions/{id}/replay`: the current episode as replay JSON lines.
//! - `GET /sessions/{id}/ws?seat=n`: play a human seat; see [`protocol`].

pub mod app;
pub mod protocol;
pub mod session;

pub use app::{router, serve, AppState};
pub use protocol::{ClientMsg, ServerMsg};
pub use session::{Seat, Session, SessionError, SessionOptions, Status};
