//! Policies: the seat contract plus the baseline agents.
//!
//! A policy is driven once per step with an [`AgentView`] and a private rng.
//! Given the same view and rng state it must return the same action, which is
//! what makes recorded episodes replayable.

mod greedy;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use greedy::GreedyPolicy;

use crate::env::{Action, EnvConfig, GameState};
use crate::observation::{observe, ObsTensor};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Random,
    Greedy,
    Tabular,
    External,
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Random => "random",
            PolicyKind::Greedy => "greedy",
            PolicyKind::Tabular => "tabular",
            PolicyKind::External => "external",
        })
    }
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("unknown policy {0:?} (expected random, greedy, tabular or a .json policy file)")]
    Unknown(String),
    #[error("policy kind {0} cannot be built from a file")]
    NotBuildable(PolicyKind),
    #[error("bad policy parameters: {0}")]
    Parameters(String),
    #[error("reading policy file {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// What a seat gets to see at one step.
///
/// `state` is the full state; only privileged policies (the greedy chef) read
/// it directly. Everyone else goes through [`AgentView::observation`].
#[derive(Clone, Copy)]
pub struct AgentView<'a> {
    pub config: &'a EnvConfig,
    pub state: &'a GameState,
    pub agent: usize,
}

impl<'a> AgentView<'a> {
    pub fn new(config: &'a EnvConfig, state: &'a GameState, agent: usize) -> Self {
        Self { config, state, agent }
    }

    /// The agent's masked, permuted observation.
    pub fn observation(&self) -> ObsTensor<f32> {
        observe(self.config, self.state, self.agent).expect("view agent index is in range")
    }
}

pub trait Policy: Send + Sync {
    fn kind(&self) -> PolicyKind;

    /// Clears per-episode memory.
    fn reset(&mut self) {}

    fn act(&mut self, view: &AgentView<'_>, rng: &mut SplitMix64) -> Action;

    fn clone_box(&self) -> Box<dyn Policy>;

    /// Serializable description, `None` for seats driven from outside.
    fn spec(&self) -> Option<PolicySpec>;
}

impl Clone for Box<dyn Policy> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Uniform over the six actions.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Random
    }

    fn act(&mut self, _view: &AgentView<'_>, rng: &mut SplitMix64) -> Action {
        Action::ALL[rng.index(Action::ALL.len())]
    }

    fn clone_box(&self) -> Box<dyn Policy> {
        Box::new(*self)
    }

    fn spec(&self) -> Option<PolicySpec> {
        Some(PolicySpec::bare(PolicyKind::Random))
    }
}

/// Replays a fixed action list, then stays. Useful for scripted tests and human logs.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPolicy {
    actions: Vec<Action>,
    cursor: usize,
}

impl ScriptedPolicy {
    pub fn new(actions: Vec<Action>) -> Self {
        Self { actions, cursor: 0 }
    }
}

impl Policy for ScriptedPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::External
    }

    fn reset(&mut self) {
        self.cursor = 0;
    }

    fn act(&mut self, _view: &AgentView<'_>, _rng: &mut SplitMix64) -> Action {
        let a = self.actions.get(self.cursor).copied().unwrap_or(Action::Stay);
        self.cursor += 1;
        a
    }

    fn clone_box(&self) -> Box<dyn Policy> {
        Box::new(self.clone())
    }

    fn spec(&self) -> Option<PolicySpec> {
        None
    }
}

/// Action values keyed by [`observation_key`]. Unseen keys fall back to Stay.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TabularPolicy {
    pub table: BTreeMap<String, [f32; 6]>,
}

/// Stable key for an observation: hex of the first 8 bytes of SHA-256 over its f32 bits.
pub fn observation_key(obs: &ObsTensor<f32>) -> String {
    let mut h = Sha256::new();
    let (w, ht, c) = obs.shape();
    for v in [w, ht, c] {
        h.update((v as u32).to_le_bytes());
    }
    for v in &obs.data {
        h.update(v.to_bits().to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

impl Policy for TabularPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Tabular
    }

    fn act(&mut self, view: &AgentView<'_>, _rng: &mut SplitMix64) -> Action {
        let key = observation_key(&view.observation());
        match self.table.get(&key) {
            // first maximum wins
            Some(q) => {
                let mut best = 0;
                for (i, &v) in q.iter().enumerate() {
                    if v > q[best] {
                        best = i;
                    }
                }
                Action::ALL[best]
            }
            None => Action::Stay,
        }
    }

    fn clone_box(&self) -> Box<dyn Policy> {
        Box::new(self.clone())
    }

    fn spec(&self) -> Option<PolicySpec> {
        Some(PolicySpec {
            kind: PolicyKind::Tabular,
            parameters: serde_json::to_value(self).expect("table serializes"),
        })
    }
}

/// On-disk policy description: `{"kind": ..., "parameters": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    #[serde(default)]
    pub parameters: serde_json::Value,
}

impl PolicySpec {
    pub fn bare(kind: PolicyKind) -> Self {
        Self {
            kind,
            parameters: serde_json::Value::Null,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Policy>, PolicyError> {
        match self.kind {
            PolicyKind::Random => Ok(Box::new(RandomPolicy)),
            PolicyKind::Greedy => Ok(Box::new(GreedyPolicy::new())),
            PolicyKind::Tabular => {
                let t: TabularPolicy = serde_json::from_value(self.parameters.clone())
                    .map_err(|e| PolicyError::Parameters(e.to_string()))?;
                Ok(Box::new(t))
            }
            PolicyKind::External => Err(PolicyError::NotBuildable(PolicyKind::External)),
        }
    }

    /// Accepts a bare kind name or a path to a JSON policy file.
    pub fn resolve(arg: &str) -> Result<Self, PolicyError> {
        let arg = arg.trim();
        if arg.ends_with(".json") || Path::new(arg).is_file() {
            let text = std::fs::read_to_string(arg).map_err(|source| PolicyError::Io {
                path: arg.to_string(),
                source,
            })?;
            return serde_json::from_str(&text).map_err(|e| PolicyError::Parameters(e.to_string()));
        }
        arg.parse()
    }

    /// Short label for tables and logs.
    pub fn label(&self) -> String {
        self.kind.to_string()
    }
}

impl FromStr for PolicySpec {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" => Ok(Self::bare(PolicyKind::Random)),
            "greedy" => Ok(Self::bare(PolicyKind::Greedy)),
            other => Err(PolicyError::Unknown(other.to_string())),
        }
    }
}
