//! Start-state augmentation: a buffer of states visited by every policy pairing,
//! and the iterate-collect-train loop that starts self-play from those states.

use serde::{Deserialize, Serialize};

use super::{rollout_observed, EvalError};
use crate::env::{reset_to, EnvConfig, GameState};
use crate::policy::Policy;
use crate::rng::SplitMix64;

/// Every `STORE_EVERY`-th state of a trajectory is kept, starting at step 0.
pub const STORE_EVERY: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferEntry {
    pub state: GameState,
    /// (seat-0 policy, seat-1 policy) population indices.
    pub pair: (usize, usize),
    pub rollout: usize,
    /// Step index within the source trajectory; always a multiple of [`STORE_EVERY`].
    pub step: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StateBuffer {
    pub entries: Vec<BufferEntry>,
}

impl StateBuffer {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Uniformly chosen entry index.
    pub fn sample_index(&self, rng: &mut SplitMix64) -> Result<usize, EvalError> {
        if self.entries.is_empty() {
            return Err(EvalError::EmptyBuffer);
        }
        Ok(rng.index(self.entries.len()))
    }
}

/// `P^2 * R * ceil((T + 1) / 10)` for horizon `T`.
pub fn expected_buffer_len(population: usize, rollouts: usize, horizon: u32) -> usize {
    population * population * rollouts * (horizon / STORE_EVERY + 1) as usize
}

/// Rolls out `rollouts` episodes for every ordered policy pair and keeps every tenth state.
pub fn collect_buffer(
    config: &EnvConfig,
    population: &[Box<dyn Policy>],
    rollouts: usize,
    seed: u64,
) -> Result<StateBuffer, EvalError> {
    if population.is_empty() {
        return Err(EvalError::EmptyPopulation);
    }
    if rollouts == 0 {
        return Err(EvalError::Zero("rollouts"));
    }
    let p = population.len();
    let mut entries = Vec::new();
    for i in 0..p {
        for j in 0..p {
            for r in 0..rollouts {
                let mut seats = vec![population[i].clone_box(), population[j].clone_box()];
                let ep_seed = SplitMix64::derive(seed, &[0xB0FF, i as u64, j as u64, r as u64]).next_u64();
                rollout_observed(config, &mut seats, ep_seed, None, |s| {
                    if s.t % STORE_EVERY == 0 {
                        entries.push(BufferEntry {
                            state: s.clone(),
                            pair: (i, j),
                            rollout: r,
                            step: s.t,
                        });
                    }
                })?;
            }
        }
    }
    Ok(StateBuffer { entries })
}

/// Hands out episode start states drawn uniformly from a buffer.
pub struct StartSampler<'a> {
    config: &'a EnvConfig,
    buffer: &'a StateBuffer,
    rng: SplitMix64,
}

impl<'a> StartSampler<'a> {
    pub fn new(config: &'a EnvConfig, buffer: &'a StateBuffer, rng: SplitMix64) -> Result<Self, EvalError> {
        if buffer.is_empty() {
            return Err(EvalError::EmptyBuffer);
        }
        Ok(Self { config, buffer, rng })
    }

    /// Buffer index and the `reset_to`-normalized start state.
    pub fn next_start(&mut self) -> Result<(usize, GameState), EvalError> {
        let idx = self.buffer.sample_index(&mut self.rng)?;
        Ok((idx, reset_to(self.config, &self.buffer.entries[idx].state)?))
    }
}

/// The learner slot of the loop. Implementations own the population.
pub trait Trainer {
    fn population(&self) -> Vec<Box<dyn Policy>>;

    /// Self-play for policy `index` for at least `timesteps` environment steps,
    /// drawing every episode's start state from `starts`.
    fn self_play(
        &mut self,
        index: usize,
        config: &EnvConfig,
        starts: &mut StartSampler<'_>,
        timesteps: usize,
        seed: u64,
    ) -> Result<(), EvalError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentParams {
    pub iterations: usize,
    pub rollouts: usize,
    pub timesteps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentReport {
    pub buffer_sizes: Vec<usize>,
}

/// Collect a fresh buffer from all pairings, then self-play each policy from
/// buffer starts; repeated `iterations` times.
pub fn augmented_self_play(
    config: &EnvConfig,
    trainer: &mut dyn Trainer,
    params: &AugmentParams,
) -> Result<AugmentReport, EvalError> {
    if params.iterations == 0 {
        return Err(EvalError::Zero("iterations"));
    }
    let mut buffer_sizes = Vec::with_capacity(params.iterations);
    for k in 0..params.iterations {
        let population = trainer.population();
        let buffer = collect_buffer(
            config,
            &population,
            params.rollouts,
            SplitMix64::derive(params.seed, &[k as u64, 0]).next_u64(),
        )?;
        buffer_sizes.push(buffer.len());
        for i in 0..population.len() {
            let mut starts = StartSampler::new(
                config,
                &buffer,
                SplitMix64::derive(params.seed, &[k as u64, 1, i as u64]),
            )?;
            let seed = SplitMix64::derive(params.seed, &[k as u64, 2, i as u64]).next_u64();
            trainer.self_play(i, config, &mut starts, params.timesteps, seed)?;
        }
    }
    Ok(AugmentReport { buffer_sizes })
}

/// Stand-in learner: plays fixed policies from buffer starts and records what it saw.
pub struct RolloutTrainer {
    pub policies: Vec<Box<dyn Policy>>,
    /// Buffer index of every episode start, per policy.
    pub starts: Vec<Vec<usize>>,
    pub returns: Vec<Vec<f32>>,
    pub steps: Vec<usize>,
}

impl RolloutTrainer {
    pub fn new(policies: Vec<Box<dyn Policy>>) -> Self {
        let n = policies.len();
        Self {
            policies,
            starts: vec![Vec::new(); n],
            returns: vec![Vec::new(); n],
            steps: vec![0; n],
        }
    }
}

impl Trainer for RolloutTrainer {
    fn population(&self) -> Vec<Box<dyn Policy>> {
        self.policies.iter().map(|p| p.clone_box()).collect()
    }

    fn self_play(
        &mut self,
        index: usize,
        config: &EnvConfig,
        starts: &mut StartSampler<'_>,
        timesteps: usize,
        seed: u64,
    ) -> Result<(), EvalError> {
        let mut done = 0;
        let mut ep = 0u64;
        while done < timesteps {
            let (idx, start) = starts.next_start()?;
            let mut seats = vec![self.policies[index].clone_box(), self.policies[index].clone_box()];
            let t = super::rollout(
                config,
                &mut seats,
                SplitMix64::derive(seed, &[ep]).next_u64(),
                Some(&start),
            )?;
            done += t.len();
            ep += 1;
            self.starts[index].push(idx);
            self.returns[index].push(t.total_reward());
        }
        self.steps[index] += done;
        Ok(())
    }
}
