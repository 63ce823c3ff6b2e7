//! Rollouts, replays, cross-play matrices and start-state augmentation.

mod buffer;
mod crossplay;
mod replay;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use buffer::{
    augmented_self_play, collect_buffer, expected_buffer_len, AugmentParams, AugmentReport, BufferEntry,
    RolloutTrainer, StartSampler, StateBuffer, Trainer, STORE_EVERY,
};
pub use crossplay::{crossplay, episode_seed, CrossPlayMatrix, CrossPlayParams, XpPairing};
pub use replay::{
    load_replay, read_replay, save_replay, verify_replay, verify_replay_file, write_replay, ReplayError, REPLAY_VERSION,
};

use crate::env::{reset, reset_to, step_in_place, Action, ConfigRecord, EnvConfig, EnvError, Event, GameState};
use crate::policy::{AgentView, Policy};
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{got} policies for {expected} agents")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("population is empty")]
    EmptyPopulation,
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("state buffer is empty")]
    EmptyBuffer,
    #[error(transparent)]
    Policy(#[from] crate::policy::PolicyError),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// One joint step as recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Time after the step.
    pub t: u32,
    pub actions: Vec<Action>,
    pub rewards: Vec<f32>,
    pub shaped: Vec<f32>,
    pub events: Vec<Event>,
    /// [`GameState::hash_hex`] of the state after the step.
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: ConfigRecord,
    pub digest: String,
    pub seed: u64,
    pub initial_state: GameState,
    pub steps: Vec<StepRecord>,
    pub final_hash: String,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Undiscounted sum of the common reward.
    pub fn total_reward(&self) -> f32 {
        self.steps
            .iter()
            .map(|s| s.rewards.first().copied().unwrap_or(0.0))
            .sum()
    }

    pub fn total_shaped(&self) -> Vec<f32> {
        let n = self.initial_state.agents.len();
        let mut out = vec![0.0; n];
        for s in &self.steps {
            for (o, v) in out.iter_mut().zip(&s.shaped) {
                *o += v;
            }
        }
        out
    }

    pub fn joint_actions(&self) -> impl Iterator<Item = &[Action]> {
        self.steps.iter().map(|s| s.actions.as_slice())
    }

    /// Re-simulates the recorded actions, yielding every state from the initial one.
    pub fn states(&self, config: &EnvConfig) -> Result<Vec<GameState>, EnvError> {
        let mut s = self.initial_state.clone();
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push(s.clone());
        for rec in &self.steps {
            step_in_place(config, &mut s, &rec.actions)?;
            out.push(s.clone());
        }
        Ok(out)
    }
}

/// Per-seat rng for episode `seed`.
pub fn policy_rng(seed: u64, agent: usize) -> SplitMix64 {
    SplitMix64::derive(seed, &[0x90_11C7, agent as u64])
}

/// Runs one episode to `max_steps`. With `start`, the episode begins from that state
/// (via `reset_to`) and `seed` only drives the policies.
pub fn rollout(
    config: &EnvConfig,
    policies: &mut [Box<dyn Policy>],
    seed: u64,
    start: Option<&GameState>,
) -> Result<Trajectory, EvalError> {
    rollout_observed(config, policies, seed, start, |_| {})
}

/// As [`rollout`], calling `visit` with every state, the initial one included.
pub fn rollout_observed(
    config: &EnvConfig,
    policies: &mut [Box<dyn Policy>],
    seed: u64,
    start: Option<&GameState>,
    mut visit: impl FnMut(&GameState),
) -> Result<Trajectory, EvalError> {
    let n = config.num_agents();
    if policies.len() != n {
        return Err(EvalError::Arity {
            expected: n,
            got: policies.len(),
        });
    }
    let mut state = match start {
        Some(s) => reset_to(config, s)?,
        None => reset(config, seed)?,
    };
    let initial_state = state.clone();
    visit(&state);
    let mut rngs: Vec<SplitMix64> = (0..n).map(|i| policy_rng(seed, i)).collect();
    for p in policies.iter_mut() {
        p.reset();
    }

    let horizon = config.options.max_steps as usize;
    let mut steps = Vec::with_capacity(horizon);
    let mut actions = vec![Action::Stay; n];
    loop {
        for (i, (p, rng)) in policies.iter_mut().zip(rngs.iter_mut()).enumerate() {
            actions[i] = p.act(&AgentView::new(config, &state, i), rng);
        }
        let out = step_in_place(config, &mut state, &actions)?;
        visit(&state);
        steps.push(StepRecord {
            t: state.t,
            actions: actions.clone(),
            rewards: out.rewards,
            shaped: out.shaped,
            events: out.events,
            hash: state.hash_hex(),
        });
        if out.done {
            break;
        }
    }
    Ok(Trajectory {
        config: config.record(),
        digest: config.digest(),
        seed,
        initial_state,
        final_hash: state.hash_hex(),
        steps,
    })
}
