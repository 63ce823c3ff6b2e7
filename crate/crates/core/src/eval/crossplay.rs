//! Cross-play matrices with self-play / cross-play statistics.
//!
//! Episode `e` of every cell uses the same environment seed, so two seats
//! holding identical deterministic policies produce identical cells.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rollout, EvalError};
use crate::env::EnvConfig;
use crate::policy::Policy;
use crate::rng::SplitMix64;
use crate::scalar::{mean_std, Scalar};

/// How off-diagonal cells are aggregated into the XP statistic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XpPairing {
    /// Every `(i, j)` with `i != j` is its own sample.
    #[default]
    Ordered,
    /// `(i, j)` and `(j, i)` are averaged into one sample for `i < j`.
    Unordered,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossPlayParams {
    pub episodes: usize,
    pub seed: u64,
    pub pairing: XpPairing,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for CrossPlayParams {
    fn default() -> Self {
        Self {
            episodes: 500,
            seed: 0,
            pairing: XpPairing::Ordered,
            jobs: None,
        }
    }
}

/// `mean[i][j]`: policy `i` in seat 0, policy `j` in seat 1.
///
/// SP and XP statistics are the population mean and standard deviation of
/// cell means; `gap = sp_mean - xp_mean`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossPlayMatrix<T> {
    pub labels: Vec<String>,
    pub episodes: usize,
    pub pairing: XpPairing,
    pub mean: Vec<Vec<T>>,
    pub std: Vec<Vec<T>>,
    pub sp_mean: T,
    pub sp_std: T,
    pub xp_mean: T,
    pub xp_std: T,
    pub gap: T,
}

impl<T: Scalar> CrossPlayMatrix<T> {
    /// Aggregates per-cell episode returns (`returns[i][j]`).
    pub fn from_returns(labels: Vec<String>, returns: &[Vec<Vec<T>>], pairing: XpPairing) -> Self {
        let p = returns.len();
        let episodes = returns.first().and_then(|r| r.first()).map_or(0, Vec::len);
        let mut mean = vec![vec![T::zero(); p]; p];
        let mut std = vec![vec![T::zero(); p]; p];
        for i in 0..p {
            for j in 0..p {
                let (m, s) = mean_std(&returns[i][j]);
                mean[i][j] = m;
                std[i][j] = s;
            }
        }
        let sp: Vec<T> = (0..p).map(|i| mean[i][i]).collect();
        let xp: Vec<T> = match pairing {
            XpPairing::Ordered => (0..p)
                .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| mean[i][j])
                .collect(),
            XpPairing::Unordered => (0..p)
                .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
                .map(|(i, j)| (mean[i][j] + mean[j][i]) / T::of(2.0))
                .collect(),
        };
        let (sp_mean, sp_std) = mean_std(&sp);
        let (xp_mean, xp_std) = mean_std(&xp);
        Self {
            labels,
            episodes,
            pairing,
            mean,
            std,
            sp_mean,
            sp_std,
            xp_mean,
            xp_std,
            gap: sp_mean - xp_mean,
        }
    }

    /// Mean returns as CSV, one row per seat-0 policy, no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.mean {
            let cells: Vec<String> = row.iter().map(|v| format!("{}", v.as_f64())).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Environment seed of episode `e`.
pub fn episode_seed(seed: u64, e: usize) -> u64 {
    SplitMix64::derive(seed, &[0xC055, e as u64]).next_u64()
}

pub fn crossplay<T: Scalar>(
    config: &EnvConfig,
    population: &[Box<dyn Policy>],
    labels: Vec<String>,
    params: &CrossPlayParams,
) -> Result<CrossPlayMatrix<T>, EvalError> {
    if population.is_empty() {
        return Err(EvalError::EmptyPopulation);
    }
    if params.episodes == 0 {
        return Err(EvalError::Zero("episodes"));
    }
    if config.num_agents() != 2 {
        return Err(EvalError::Arity {
            expected: config.num_agents(),
            got: 2,
        });
    }
    let p = population.len();
    let e = params.episodes;
    let run = || -> Result<Vec<T>, EvalError> {
        (0..p * p * e)
            .into_par_iter()
            .map(|k| {
                let (cell, ep) = (k / e, k % e);
                let (i, j) = (cell / p, cell % p);
                let mut seats = vec![population[i].clone_box(), population[j].clone_box()];
                let t = rollout(config, &mut seats, episode_seed(params.seed, ep), None)?;
                Ok(T::of(t.total_reward() as f64))
            })
            .collect()
    };
    let flat = match params.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|err| EvalError::Pool(err.to_string()))?
            .install(run)?,
        None => run()?,
    };
    let returns: Vec<Vec<Vec<T>>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| flat[(i * p + j) * e..(i * p + j + 1) * e].to_vec())
                .collect()
        })
        .collect();
    Ok(CrossPlayMatrix::from_returns(labels, &returns, params.pairing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{GreedyPolicy, RandomPolicy};

    #[test]
    fn stats_from_returns() {
        let r = vec![
            vec![vec![10.0f64, 30.0], vec![0.0, 0.0]],
            vec![vec![4.0, 4.0], vec![20.0, 20.0]],
        ];
        let m = CrossPlayMatrix::from_returns(vec!["a".into(), "b".into()], &r, XpPairing::Ordered);
        assert_eq!(m.mean, vec![vec![20.0, 0.0], vec![4.0, 20.0]]);
        assert_eq!(m.std[0][0], 10.0);
        assert_eq!(m.sp_mean, 20.0);
        assert_eq!(m.xp_mean, 2.0);
        assert_eq!(m.xp_std, 2.0);
        assert_eq!(m.gap, 18.0);
        let u = CrossPlayMatrix::from_returns(vec![], &r, XpPairing::Unordered);
        assert_eq!(u.xp_mean, 2.0);
        assert_eq!(u.xp_std, 0.0);
        assert_eq!(m.to_csv(), "20,0\n4,20\n");
    }

    #[test]
    fn identical_policies_constant_matrix() {
        let c = EnvConfig::builtin("cramped_room").unwrap();
        let pop: Vec<Box<dyn Policy>> = vec![Box::new(GreedyPolicy::new()), Box::new(GreedyPolicy::new())];
        let params = CrossPlayParams {
            episodes: 2,
            ..Default::default()
        };
        let m = crossplay::<f64>(&c, &pop, vec!["g1".into(), "g2".into()], &params).unwrap();
        let v = m.mean[0][0];
        assert!(m.mean.iter().flatten().all(|&x| x == v));
        assert_eq!(m.gap, 0.0);
    }

    #[test]
    fn jobs_do_not_change_result() {
        let c = EnvConfig::builtin("cramped_room").unwrap();
        let pop: Vec<Box<dyn Policy>> = vec![Box::new(GreedyPolicy::new()), Box::new(RandomPolicy)];
        let mk = |jobs| CrossPlayParams {
            episodes: 3,
            seed: 9,
            jobs,
            ..Default::default()
        };
        let a = crossplay::<f64>(&c, &pop, vec![], &mk(Some(1))).unwrap();
        let b = crossplay::<f64>(&c, &pop, vec![], &mk(Some(3))).unwrap();
        assert_eq!(a, b);
    }
}
