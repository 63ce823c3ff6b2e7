//! JSON payloads for HTTP and the per-session WebSocket.
//!
//! Client to server:
//!
//! ```json
//! {"type": "act", "action": "up"}
//! {"type": "reset"}
//! ```
//!
//! Server to client:
//!
//! ```json
//! {"type": "frame", "seat": 0, "status": "running", "rewards": [0.0, 0.0], "events": [], "frame": {...}}
//! {"type": "done", "score": 40.0}
//! {"type": "error", "reason": "awaiting tick"}
//! ```

use std::collections::BTreeMap;

use overcooked_core::observation::ObsSchema;
use overcooked_core::policy::PolicySpec;
use overcooked_core::render::Frame;
use overcooked_core::{Action, Event};
use serde::{Deserialize, Serialize};

use crate::session::{SessionInfo, Status};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ClientMsg {
    Act { action: Action },
    Reset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServerMsg {
    Frame {
        seat: usize,
        status: Status,
        /// Rewards of the step that produced this frame; empty for the initial frame.
        rewards: Vec<f32>,
        events: Vec<Event>,
        frame: Box<Frame>,
    },
    Done {
        score: f32,
    },
    Error {
        reason: String,
    },
}

/// A seat in a create request: `"human"`, a policy name, or an inline policy spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeatRequest {
    Name(String),
    Spec(PolicySpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub layout: String,
    pub seats: Vec<SeatRequest>,
    /// Option overrides by name, e.g. `{"view_radius": 2, "cook_time": 10}`.
    #[serde(default)]
    pub config: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub fog: bool,
    #[serde(default)]
    pub seed: u64,
    /// Human actions missing after this many milliseconds become `stay`.
    #[serde(default)]
    pub human_timeout_ms: Option<u64>,
    /// How long a paused session waits for a dropped seat.
    #[serde(default)]
    pub grace_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedSession {
    pub id: String,
    pub info: SessionInfo,
    pub schema: ObsSchema,
    pub frame: Frame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutSummary {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub agents: usize,
    pub ingredients: usize,
    pub recipes: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaDoc {
    pub frame_version: u32,
    pub actions: Vec<Action>,
    pub observation: ObsSchema,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
