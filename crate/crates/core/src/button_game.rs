//! The Button Game: a one-shot signalling game with a built-in grounded channel.
//!
//! Alice sees a pet bit and presses one of `N` buttons. Bulb `2a + pet` lights
//! up, Bob sees the bulb index and guesses the pet. A correct guess pays
//! `+reward`, a wrong one `-reward`, to both. Bulb parity always equals the pet,
//! so a parity-reading Bob wins against every Alice; learners trained only
//! in self-play usually settle on an arbitrary button convention instead.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;
use crate::scalar::{mean_std, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BgError {
    #[error("n_buttons must be at least 1")]
    NoButtons,
    #[error("episodes must be at least 1")]
    NoEpisodes,
    #[error("pet must be 0 or 1, got {0}")]
    BadPet(usize),
    #[error("button {button} out of range for {n_buttons} buttons")]
    BadButton { button: usize, n_buttons: usize },
    #[error("guess must be 0 or 1, got {0}")]
    BadGuess(usize),
    #[error("bulbs never visited during training: {0:?}")]
    UnvisitedBulbs(Vec<usize>),
    #[error("table shapes do not match {0} buttons")]
    Shape(usize),
    #[error("empty population")]
    EmptyPopulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ButtonGameConfig {
    pub n_buttons: usize,
    pub reward: f64,
}

impl Default for ButtonGameConfig {
    fn default() -> Self {
        Self {
            n_buttons: 5,
            reward: 10.0,
        }
    }
}

impl ButtonGameConfig {
    pub fn new(n_buttons: usize) -> Result<Self, BgError> {
        if n_buttons == 0 {
            return Err(BgError::NoButtons);
        }
        Ok(Self {
            n_buttons,
            ..Self::default()
        })
    }

    pub fn num_bulbs(&self) -> usize {
        2 * self.n_buttons
    }
}

#[inline]
pub fn bulb(button: usize, pet: usize) -> usize {
    2 * button + pet
}

/// Reward of one play with fixed choices.
pub fn bg_reward(config: &ButtonGameConfig, button: usize, guess: usize, pet: usize) -> Result<f64, BgError> {
    if pet > 1 {
        return Err(BgError::BadPet(pet));
    }
    if button >= config.n_buttons {
        return Err(BgError::BadButton {
            button,
            n_buttons: config.n_buttons,
        });
    }
    if guess > 1 {
        return Err(BgError::BadGuess(guess));
    }
    Ok(if guess == pet { config.reward } else { -config.reward })
}

/// Alice's `[2][N]` and Bob's `[2N][2]` action values, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTables<T> {
    pub n_buttons: usize,
    pub alice: Vec<T>,
    pub bob: Vec<T>,
}

impl<T: Scalar> QTables<T> {
    pub fn zeros(n_buttons: usize) -> Self {
        Self {
            n_buttons,
            alice: vec![T::zero(); 2 * n_buttons],
            bob: vec![T::zero(); 4 * n_buttons],
        }
    }

    pub fn check(&self, config: &ButtonGameConfig) -> Result<(), BgError> {
        let n = config.n_buttons;
        if self.n_buttons != n || self.alice.len() != 2 * n || self.bob.len() != 4 * n {
            return Err(BgError::Shape(n));
        }
        Ok(())
    }

    pub fn alice_row(&self, pet: usize) -> &[T] {
        &self.alice[pet * self.n_buttons..(pet + 1) * self.n_buttons]
    }

    pub fn bob_row(&self, bulb: usize) -> &[T] {
        &self.bob[2 * bulb..2 * bulb + 2]
    }

    /// Greedy button probabilities for `pet` (uniform over tied maxima).
    pub fn alice_probs(&self, pet: usize) -> Vec<T> {
        argmax_probs(self.alice_row(pet))
    }

    pub fn bob_probs(&self, bulb: usize) -> Vec<T> {
        argmax_probs(self.bob_row(bulb))
    }
}

/// Uniform distribution over the maximal entries.
pub fn argmax_probs<T: Scalar>(row: &[T]) -> Vec<T> {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let ties = row.iter().filter(|&&v| v == max).count();
    let p = T::one() / T::of_usize(ties);
    row.iter().map(|&v| if v == max { p } else { T::zero() }).collect()
}

/// Greedy index with uniform tie-breaking.
pub fn argmax_sample<T: Scalar>(row: &[T], rng: &mut SplitMix64) -> usize {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let ties: Vec<usize> = (0..row.len()).filter(|&i| row[i] == max).collect();
    ties[rng.index(ties.len())]
}

/// One play between greedy Alice from `alice` and greedy Bob from `bob`.
pub fn bg_play<T: Scalar>(
    config: &ButtonGameConfig,
    alice: &QTables<T>,
    bob: &QTables<T>,
    pet: usize,
    rng: &mut SplitMix64,
) -> Result<f64, BgError> {
    alice.check(config)?;
    bob.check(config)?;
    if pet > 1 {
        return Err(BgError::BadPet(pet));
    }
    let a = argmax_sample(alice.alice_row(pet), rng);
    let g = argmax_sample(bob.bob_row(bulb(a, pet)), rng);
    bg_reward(config, a, g, pet)
}

/// Exploration rate as a function of training progress.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsilonSchedule {
    Constant { epsilon: f64 },
    Linear { start: f64, end: f64 },
}

impl EpsilonSchedule {
    pub fn at(&self, episode: usize, episodes: usize) -> f64 {
        match *self {
            EpsilonSchedule::Constant { epsilon } => epsilon,
            EpsilonSchedule::Linear { start, end } => {
                let frac = if episodes <= 1 {
                    1.0
                } else {
                    episode as f64 / (episodes - 1) as f64
                };
                start + (end - start) * frac
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqlParams {
    pub episodes: usize,
    pub alpha: f64,
    pub epsilon: EpsilonSchedule,
}

impl Default for IqlParams {
    /// Purely greedy learners: exploration would teach Bob every bulb's parity.
    fn default() -> Self {
        Self {
            episodes: 20_000,
            alpha: 0.1,
            epsilon: EpsilonSchedule::Constant { epsilon: 0.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    /// Mean reward over all training episodes (exploratory plays included).
    pub mean_training_reward: f64,
}

fn explore_or_greedy<T: Scalar>(row: &[T], eps: f64, rng: &mut SplitMix64) -> usize {
    if eps > 0.0 && rng.next_f64() < eps {
        rng.index(row.len())
    } else {
        argmax_sample(row, rng)
    }
}

/// Independent Q-learning in self-play; each episode is one terminal play.
pub fn train_iql<T: Scalar>(
    config: &ButtonGameConfig,
    seed: u64,
    params: &IqlParams,
) -> Result<(QTables<T>, TrainStats), BgError> {
    if config.n_buttons == 0 {
        return Err(BgError::NoButtons);
    }
    if params.episodes == 0 {
        return Err(BgError::NoEpisodes);
    }
    let n = config.n_buttons;
    let alpha = T::of(params.alpha);
    let mut q = QTables::<T>::zeros(n);
    let mut rng = SplitMix64::derive(seed, &[0xB077]);
    let mut total = 0.0;
    for ep in 0..params.episodes {
        let eps = params.epsilon.at(ep, params.episodes);
        let pet = rng.index(2);
        let a = explore_or_greedy(q.alice_row(pet), eps, &mut rng);
        let b = bulb(a, pet);
        let g = explore_or_greedy(q.bob_row(b), eps, &mut rng);
        let r = bg_reward(config, a, g, pet)?;
        total += r;
        let rt = T::of(r);
        let qa = &mut q.alice[pet * n + a];
        *qa = *qa + alpha * (rt - *qa);
        let qb = &mut q.bob[2 * b + g];
        *qb = *qb + alpha * (rt - *qb);
    }
    Ok((
        q,
        TrainStats {
            mean_training_reward: total / params.episodes as f64,
        },
    ))
}

/// Bob trained against a uniformly random Alice with uniform exploration.
/// The returned Alice table is all zeros, i.e. uniform under greedy tie-breaking.
pub fn train_br_uniform<T: Scalar>(
    config: &ButtonGameConfig,
    seed: u64,
    episodes: usize,
    alpha: f64,
) -> Result<QTables<T>, BgError> {
    if config.n_buttons == 0 {
        return Err(BgError::NoButtons);
    }
    if episodes == 0 {
        return Err(BgError::NoEpisodes);
    }
    let n = config.n_buttons;
    let alpha = T::of(alpha);
    let mut q = QTables::<T>::zeros(n);
    let mut visited = vec![false; 2 * n];
    let mut rng = SplitMix64::derive(seed, &[0xB2]);
    for _ in 0..episodes {
        let pet = rng.index(2);
        let a = rng.index(n);
        let b = bulb(a, pet);
        visited[b] = true;
        let g = rng.index(2);
        let rt = T::of(bg_reward(config, a, g, pet)?);
        let qb = &mut q.bob[2 * b + g];
        *qb = *qb + alpha * (rt - *qb);
    }
    let missing: Vec<usize> = (0..2 * n).filter(|&b| !visited[b]).collect();
    if !missing.is_empty() {
        return Err(BgError::UnvisitedBulbs(missing));
    }
    Ok(q)
}

/// Exact expected reward of greedy Alice from `alice` with greedy Bob from `bob`,
/// averaged over both pets; ties are resolved uniformly.
pub fn expected_reward<T: Scalar>(config: &ButtonGameConfig, alice: &QTables<T>, bob: &QTables<T>) -> T {
    let r = T::of(config.reward);
    let half = T::of(0.5);
    let mut total = T::zero();
    for pet in 0..2 {
        for (a, pa) in alice.alice_probs(pet).into_iter().enumerate() {
            if pa == T::zero() {
                continue;
            }
            let pb = bob.bob_probs(bulb(a, pet));
            let p_correct = pb[pet];
            total = total + half * pa * (p_correct * r - (T::one() - p_correct) * r);
        }
    }
    total
}

/// `m[i][j]`: Alice from member `i` with Bob from member `j`.
pub fn crossplay_matrix<T: Scalar>(
    config: &ButtonGameConfig,
    population: &[QTables<T>],
) -> Result<Vec<Vec<T>>, BgError> {
    if population.is_empty() {
        return Err(BgError::EmptyPopulation);
    }
    for q in population {
        q.check(config)?;
    }
    Ok(population
        .iter()
        .map(|a| population.iter().map(|b| expected_reward(config, a, b)).collect())
        .collect())
}

/// Monte-Carlo estimate of [`expected_reward`] with the sample standard error.
pub fn monte_carlo_reward<T: Scalar>(
    config: &ButtonGameConfig,
    alice: &QTables<T>,
    bob: &QTables<T>,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64), BgError> {
    let mut rng = SplitMix64::derive(seed, &[0x3C]);
    let mut rewards = Vec::with_capacity(samples);
    for _ in 0..samples {
        let pet = rng.index(2);
        rewards.push(bg_play(config, alice, bob, pet, &mut rng)?);
    }
    let (mean, std) = mean_std(&rewards);
    Ok((mean, std / (samples as f64).sqrt()))
}

/// Population of independent self-play pairs plus a best response to uniform.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ButtonGameReport<T> {
    pub config: ButtonGameConfig,
    pub params: IqlParams,
    pub labels: Vec<String>,
    /// Rows index Alice, columns index Bob; the last member is the best response.
    pub matrix: Vec<Vec<T>>,
    pub sp_mean: T,
    pub xp_mean: T,
    pub br_column: Vec<T>,
    pub training: Vec<TrainStats>,
}

pub fn run_experiment<T: Scalar>(
    config: &ButtonGameConfig,
    seeds: &[u64],
    params: &IqlParams,
) -> Result<ButtonGameReport<T>, BgError> {
    if seeds.is_empty() {
        return Err(BgError::EmptyPopulation);
    }
    let trained: Vec<(QTables<T>, TrainStats)> = seeds
        .par_iter()
        .map(|&s| train_iql(config, s, params))
        .collect::<Result<_, _>>()?;
    let (mut population, training): (Vec<_>, Vec<_>) = trained.into_iter().unzip();
    let br_seed = seeds.iter().fold(0x5EEDu64, |acc, &s| acc.rotate_left(7) ^ s);
    population.push(train_br_uniform(config, br_seed, params.episodes, params.alpha)?);
    let matrix = crossplay_matrix(config, &population)?;

    let k = seeds.len();
    let sp: Vec<T> = (0..k).map(|i| matrix[i][i]).collect();
    let xp: Vec<T> = (0..k)
        .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| matrix[i][j])
        .collect();
    let br_column = (0..k).map(|i| matrix[i][k]).collect();
    let mut labels: Vec<String> = seeds.iter().map(|s| format!("sp_seed_{s}")).collect();
    labels.push("best_response".into());
    Ok(ButtonGameReport {
        config: *config,
        params: *params,
        labels,
        sp_mean: mean_std(&sp).0,
        xp_mean: if xp.is_empty() { T::zero() } else { mean_std(&xp).0 },
        br_column,
        matrix,
        training,
    })
}
