//! JSON-lines replay files.
//!
//! ```text
//! {"type":"header","version":1,"config":{..},"digest":"..","seed":7,"initial_state":{..},"initial_hash":".."}
//! {"type":"step","t":1,"actions":["up","stay"],"rewards":[0,0],"shaped":[0,0],"events":[],"hash":"..","chain":".."}
//! ...
//! {"type":"footer","steps":400,"final_hash":"..","chain":".."}
//! ```
//!
//! `chain` links each line to everything before it:
//! `chain_t = sha256(chain_{t-1} | actions_t | hash_t)[..16]`, seeded with the
//! initial hash. A state hash alone would not catch an edited action that
//! happens to produce the same state (an `interact` facing bare floor).

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{StepRecord, Trajectory};
use crate::env::{step_in_place, Action, ConfigError, ConfigRecord, EnvConfig, EnvError, Event, GameState};

pub const REPLAY_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("malformed replay: {0}")]
    Structure(String),
    #[error("unsupported replay version {0}")]
    Version(u32),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("config digest mismatch: header says {recorded}, config hashes to {actual}")]
    Digest { recorded: String, actual: String },
    #[error("initial state rejected: {0}")]
    InitialState(EnvError),
    #[error("initial state does not match the header hash (edited header?)")]
    InitialHash,
    #[error("step {t}: {source}")]
    Step { t: u32, source: EnvError },
    #[error("step {t}: state hash {actual} does not match recorded {recorded}")]
    HashMismatch { t: u32, recorded: String, actual: String },
    #[error("step {t}: record chain broken (edited actions or hashes)")]
    ChainMismatch { t: u32 },
    #[error("step {t}: recorded reward differs from re-simulation")]
    RewardMismatch { t: u32 },
    #[error("footer does not match the step lines: {0}")]
    Footer(String),
}

impl ReplayError {
    /// Time index of the first divergent step, when the failure is tied to one.
    pub fn step(&self) -> Option<u32> {
        match self {
            ReplayError::Step { t, .. }
            | ReplayError::HashMismatch { t, .. }
            | ReplayError::ChainMismatch { t }
            | ReplayError::RewardMismatch { t } => Some(*t),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Line {
    Header {
        version: u32,
        config: ConfigRecord,
        digest: String,
        seed: u64,
        initial_state: GameState,
        initial_hash: String,
    },
    Step {
        t: u32,
        actions: Vec<Action>,
        rewards: Vec<f32>,
        shaped: Vec<f32>,
        events: Vec<Event>,
        hash: String,
        chain: String,
    },
    Footer {
        steps: usize,
        final_hash: String,
        chain: String,
    },
}

fn link(prev: &str, actions: &[Action], hash: &str) -> String {
    let mut h = Sha256::new();
    h.update(prev.as_bytes());
    for a in actions {
        h.update([a.index() as u8]);
    }
    h.update(hash.as_bytes());
    hex::encode(&h.finalize()[..16])
}

/// Writes the replay to any sink.
pub fn write_replay(traj: &Trajectory, out: &mut impl Write) -> io::Result<()> {
    let initial_hash = traj.initial_state.hash_hex();
    let header = Line::Header {
        version: REPLAY_VERSION,
        config: traj.config.clone(),
        digest: traj.digest.clone(),
        seed: traj.seed,
        initial_state: traj.initial_state.clone(),
        initial_hash: initial_hash.clone(),
    };
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n")?;
    let mut chain = initial_hash;
    for s in &traj.steps {
        chain = link(&chain, &s.actions, &s.hash);
        let line = Line::Step {
            t: s.t,
            actions: s.actions.clone(),
            rewards: s.rewards.clone(),
            shaped: s.shaped.clone(),
            events: s.events.clone(),
            hash: s.hash.clone(),
            chain: chain.clone(),
        };
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
    }
    let footer = Line::Footer {
        steps: traj.steps.len(),
        final_hash: traj.final_hash.clone(),
        chain,
    };
    serde_json::to_writer(&mut *out, &footer)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Writes atomically: the file appears complete or not at all.
pub fn save_replay(traj: &Trajectory, path: &Path) -> Result<(), ReplayError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        write_replay(traj, &mut w)?;
        w.flush()?;
    }
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path).map_err(|e| ReplayError::Io(e.error))?;
    Ok(())
}

/// Parses a replay file, checking line structure and the record chain.
/// Does not re-simulate; see [`verify_replay`].
pub fn load_replay(path: &Path) -> Result<Trajectory, ReplayError> {
    read_replay(BufReader::new(File::open(path)?))
}

/// [`load_replay`] over any line source.
pub fn read_replay(reader: impl BufRead) -> Result<Trajectory, ReplayError> {
    let mut header = None;
    let mut steps = Vec::new();
    let mut chain = String::new();
    let mut footer = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line).map_err(|e| ReplayError::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if footer.is_some() {
            return Err(ReplayError::Structure(format!("line {lineno} after footer")));
        }
        match parsed {
            Line::Header {
                version,
                config,
                digest,
                seed,
                initial_state,
                initial_hash,
            } => {
                if header.is_some() {
                    return Err(ReplayError::Structure(format!("second header at line {lineno}")));
                }
                if version != REPLAY_VERSION {
                    return Err(ReplayError::Version(version));
                }
                if initial_state.hash_hex() != initial_hash {
                    return Err(ReplayError::InitialHash);
                }
                chain = initial_hash;
                header = Some((config, digest, seed, initial_state));
            }
            Line::Step {
                t,
                actions,
                rewards,
                shaped,
                events,
                hash,
                chain: recorded,
            } => {
                if header.is_none() {
                    return Err(ReplayError::Structure("step before header".into()));
                }
                chain = link(&chain, &actions, &hash);
                if chain != recorded {
                    return Err(ReplayError::ChainMismatch { t });
                }
                steps.push(StepRecord {
                    t,
                    actions,
                    rewards,
                    shaped,
                    events,
                    hash,
                });
            }
            Line::Footer {
                steps: n,
                final_hash,
                chain: recorded,
            } => {
                if n != steps.len() {
                    return Err(ReplayError::Footer(format!(
                        "{n} steps declared, {} present",
                        steps.len()
                    )));
                }
                if recorded != chain {
                    return Err(ReplayError::Footer("chain mismatch".into()));
                }
                footer = Some(final_hash);
            }
        }
    }
    let (config, digest, seed, initial_state) =
        header.ok_or_else(|| ReplayError::Structure("missing header".into()))?;
    let final_hash = footer.ok_or_else(|| ReplayError::Structure("missing footer (truncated file?)".into()))?;
    Ok(Trajectory {
        config,
        digest,
        seed,
        initial_state,
        steps,
        final_hash,
    })
}

/// Re-simulates every step and compares state hashes and rewards.
pub fn verify_replay(traj: &Trajectory) -> Result<(), ReplayError> {
    let config = EnvConfig::from_record(&traj.config)?;
    let actual = config.digest();
    if actual != traj.digest {
        return Err(ReplayError::Digest {
            recorded: traj.digest.clone(),
            actual,
        });
    }
    crate::env::check_state(&config, &traj.initial_state).map_err(ReplayError::InitialState)?;
    let mut state = traj.initial_state.clone();
    for rec in &traj.steps {
        let t = rec.t;
        let out = step_in_place(&config, &mut state, &rec.actions).map_err(|source| ReplayError::Step { t, source })?;
        let hash = state.hash_hex();
        if hash != rec.hash || state.t != t {
            return Err(ReplayError::HashMismatch {
                t,
                recorded: rec.hash.clone(),
                actual: hash,
            });
        }
        if out.rewards != rec.rewards || out.shaped != rec.shaped {
            return Err(ReplayError::RewardMismatch { t });
        }
    }
    let final_hash = state.hash_hex();
    if final_hash != traj.final_hash {
        return Err(ReplayError::Footer(format!(
            "final hash {} does not match recorded {}",
            final_hash, traj.final_hash
        )));
    }
    Ok(())
}

/// [`load_replay`] followed by [`verify_replay`].
pub fn verify_replay_file(path: &Path) -> Result<Trajectory, ReplayError> {
    let traj = load_replay(path)?;
    verify_replay(&traj)?;
    Ok(traj)
}
