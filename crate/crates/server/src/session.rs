//! One live episode: seats, lock-step ticking, pause and resume.
//!
//! This type knows nothing about sockets. The transport layer calls
//! [`Session::connect`], [`Session::submit`] and friends under the session's
//! lock and fans the returned [`Tick`]s out to the connected seats.

use std::time::{Duration, Instant};

use overcooked_core::eval::{policy_rng, StepRecord, Trajectory};
use overcooked_core::policy::{AgentView, Policy, PolicySpec};
use overcooked_core::render::{frame, Frame};
use overcooked_core::{reset, step_in_place, Action, EnvConfig, Event, GameState, SplitMix64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("seat {0} does not exist")]
    NoSeat(usize),
    #[error("seat {0} is played by a policy")]
    NotHuman(usize),
    #[error("seat {0} is already connected")]
    SeatTaken(usize),
    #[error("no free human seat")]
    NoFreeSeat,
    #[error("awaiting tick")]
    AwaitingTick,
    #[error("session is waiting for players")]
    Waiting,
    #[error("session is paused until every human seat reconnects")]
    Paused,
    #[error("episode is over; send reset to play again")]
    Done,
    #[error("session expired")]
    Expired,
}

/// Who plays a seat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seat {
    Human,
    Policy(PolicySpec),
}

impl Seat {
    /// `"human"` or the policy kind.
    pub fn label(&self) -> String {
        match self {
            Seat::Human => "human".to_string(),
            Seat::Policy(spec) => spec.label(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// Some human seat has never connected.
    Waiting,
    Running,
    /// A human seat dropped; resumable until the grace period ends.
    Paused,
    Done,
    /// Grace period ran out while paused.
    Expired,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOptions {
    /// Per-seat fog: frames sent to a human seat hide what it cannot see.
    pub fog: bool,
    /// Missing human actions become `Stay` after this long, if set.
    pub human_timeout: Option<Duration>,
    /// How long a paused session waits for a dropped seat.
    pub grace: Duration,
    pub seed: u64,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            fog: false,
            human_timeout: None,
            grace: Duration::from_secs(60),
            seed: 0,
        }
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Tick {
    pub t: u32,
    pub actions: Vec<Action>,
    pub rewards: Vec<f32>,
    pub events: Vec<Event>,
    pub done: bool,
}

/// Public snapshot for `GET /sessions/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
    pub layout: String,
    /// `"human"` or a policy kind per seat.
    pub seats: Vec<String>,
    pub connected: Vec<bool>,
    pub status: Status,
    pub t: u32,
    pub max_steps: u32,
    pub score: f32,
    pub episode: u64,
    pub fog: bool,
}

pub struct Session {
    id: String,
    config: EnvConfig,
    seats: Vec<Seat>,
    /// `Some` for policy seats.
    policies: Vec<Option<Box<dyn Policy>>>,
    rngs: Vec<SplitMix64>,
    options: SessionOptions,
    status: Status,
    connected: Vec<bool>,
    pending: Vec<Option<Action>>,
    /// First action of the current tick arrived at this instant.
    tick_opened: Option<Instant>,
    paused_at: Option<Instant>,
    episode: u64,
    episode_seed: u64,
    initial: GameState,
    state: GameState,
    log: Vec<StepRecord>,
    score: f32,
}

impl Session {
    pub fn new(id: String, config: EnvConfig, seats: Vec<Seat>, options: SessionOptions) -> Result<Self, String> {
        if seats.len() != config.num_agents() {
            return Err(format!(
                "layout has {} agents but {} seats were given",
                config.num_agents(),
                seats.len()
            ));
        }
        if !seats.contains(&Seat::Human) {
            return Err("at least one seat must be human".to_string());
        }
        let policies = seats
            .iter()
            .map(|s| match s {
                Seat::Human => Ok(None),
                Seat::Policy(spec) => spec.build().map(Some).map_err(|e| e.to_string()),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let n = seats.len();
        let state = reset(&config, options.seed).map_err(|e| e.to_string())?;
        let mut s = Self {
            id,
            config,
            rngs: (0..n).map(|i| policy_rng(options.seed, i)).collect(),
            policies,
            status: Status::Waiting,
            connected: vec![false; n],
            pending: vec![None; n],
            tick_opened: None,
            paused_at: None,
            episode: 0,
            episode_seed: options.seed,
            initial: state.clone(),
            state,
            log: Vec::new(),
            score: 0.0,
            seats,
            options,
        };
        s.refresh_status();
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn score(&self) -> f32 {
        self.score
    }

    pub fn grace(&self) -> Duration {
        self.options.grace
    }

    pub fn seats(&self) -> &[Seat] {
        &self.seats
    }

    fn human_seats(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.seats.len()).filter(|&i| self.seats[i] == Seat::Human)
    }

    fn refresh_status(&mut self) {
        if matches!(self.status, Status::Done | Status::Expired) {
            return;
        }
        let all_in = self.human_seats().all(|i| self.connected[i]);
        self.status = match (self.status, all_in) {
            (_, true) => Status::Running,
            (Status::Waiting, false) => Status::Waiting,
            (_, false) => Status::Paused,
        };
        if self.status == Status::Running {
            self.paused_at = None;
        }
    }

    /// Lowest-numbered human seat nobody holds.
    pub fn free_seat(&self) -> Result<usize, SessionError> {
        self.human_seats()
            .find(|&i| !self.connected[i])
            .ok_or(SessionError::NoFreeSeat)
    }

    pub fn connect(&mut self, seat: usize) -> Result<(), SessionError> {
        match self.seats.get(seat) {
            None => return Err(SessionError::NoSeat(seat)),
            Some(Seat::Policy(_)) => return Err(SessionError::NotHuman(seat)),
            Some(Seat::Human) => {}
        }
        if self.status == Status::Expired {
            return Err(SessionError::Expired);
        }
        if self.connected[seat] {
            return Err(SessionError::SeatTaken(seat));
        }
        self.connected[seat] = true;
        self.refresh_status();
        Ok(())
    }

    /// Drops a seat. A running session pauses; the grace clock starts at `now`.
    pub fn disconnect(&mut self, seat: usize, now: Instant) {
        if seat >= self.connected.len() || !self.connected[seat] {
            return;
        }
        self.connected[seat] = false;
        self.pending[seat] = None;
        let was_running = self.status == Status::Running;
        self.refresh_status();
        if was_running && self.status == Status::Paused {
            self.paused_at = Some(now);
        }
    }

    /// Ends a paused session whose grace period has run out. Returns whether it expired.
    pub fn expire_if_stale(&mut self, now: Instant) -> bool {
        match (self.status, self.paused_at) {
            (Status::Paused, Some(at)) if now.duration_since(at) >= self.options.grace => {
                self.status = Status::Expired;
                true
            }
            _ => false,
        }
    }

    fn check_playable(&self) -> Result<(), SessionError> {
        match self.status {
            Status::Running => Ok(()),
            Status::Waiting => Err(SessionError::Waiting),
            Status::Paused => Err(SessionError::Paused),
            Status::Done => Err(SessionError::Done),
            Status::Expired => Err(SessionError::Expired),
        }
    }

    /// Records a human action. Steps the environment once every human seat has
    /// submitted; a second action from the same seat before that is rejected.
    pub fn submit(&mut self, seat: usize, action: Action, now: Instant) -> Result<Option<Tick>, SessionError> {
        match self.seats.get(seat) {
            None => return Err(SessionError::NoSeat(seat)),
            Some(Seat::Policy(_)) => return Err(SessionError::NotHuman(seat)),
            Some(Seat::Human) => {}
        }
        self.check_playable()?;
        if self.pending[seat].is_some() {
            return Err(SessionError::AwaitingTick);
        }
        self.pending[seat] = Some(action);
        self.tick_opened.get_or_insert(now);
        if self.human_seats().all(|i| self.pending[i].is_some()) {
            return Ok(Some(self.tick()));
        }
        Ok(None)
    }

    /// When the human timeout has elapsed for an open tick, fills the missing
    /// human actions with `Stay` and steps.
    pub fn poll_timeout(&mut self, now: Instant) -> Option<Tick> {
        let timeout = self.options.human_timeout?;
        let opened = self.tick_opened?;
        if self.status != Status::Running || now.duration_since(opened) < timeout {
            return None;
        }
        for i in 0..self.seats.len() {
            if self.seats[i] == Seat::Human && self.pending[i].is_none() {
                self.pending[i] = Some(Action::Stay);
            }
        }
        Some(self.tick())
    }

    /// Deadline of the open tick's timeout, if one is armed.
    pub fn timeout_deadline(&self) -> Option<Instant> {
        Some(self.tick_opened? + self.options.human_timeout?)
    }

    fn tick(&mut self) -> Tick {
        let n = self.seats.len();
        let mut actions = vec![Action::Stay; n];
        for (i, slot) in actions.iter_mut().enumerate() {
            *slot = match &mut self.policies[i] {
                Some(p) => p.act(&AgentView::new(&self.config, &self.state, i), &mut self.rngs[i]),
                None => self.pending[i]
                    .take()
                    .expect("tick runs only with every human action in"),
            };
        }
        self.tick_opened = None;
        let out = step_in_place(&self.config, &mut self.state, &actions).expect("validated state and arity");
        self.score += out.rewards[0];
        self.log.push(StepRecord {
            t: self.state.t,
            actions: actions.clone(),
            rewards: out.rewards.clone(),
            shaped: out.shaped,
            events: out.events.clone(),
            hash: self.state.hash_hex(),
        });
        if out.done {
            self.status = Status::Done;
        }
        Tick {
            t: self.state.t,
            actions,
            rewards: out.rewards,
            events: out.events,
            done: out.done,
        }
    }

    /// Starts a fresh episode with the next episode seed. Allowed at any time
    /// except after expiry.
    pub fn reset(&mut self) -> Result<(), SessionError> {
        if self.status == Status::Expired {
            return Err(SessionError::Expired);
        }
        self.episode += 1;
        self.episode_seed = SplitMix64::derive(self.options.seed, &[self.episode]).next_u64();
        self.state = reset(&self.config, self.episode_seed).expect("config validated at creation");
        self.initial = self.state.clone();
        self.rngs = (0..self.seats.len())
            .map(|i| policy_rng(self.episode_seed, i))
            .collect();
        for p in self.policies.iter_mut().flatten() {
            p.reset();
        }
        self.pending.iter_mut().for_each(|p| *p = None);
        self.tick_opened = None;
        self.log.clear();
        self.score = 0.0;
        if self.status == Status::Done {
            self.status = Status::Running;
        }
        self.refresh_status();
        Ok(())
    }

    /// The frame a seat should see: fogged for human seats when fog is on.
    pub fn frame_for(&self, seat: Option<usize>) -> Frame {
        let viewer = seat.filter(|_| self.options.fog);
        frame(&self.state, &self.config, self.score, viewer)
    }

    /// The current episode as a replayable trajectory.
    pub fn trajectory(&self) -> Trajectory {
        Trajectory {
            config: self.config.record(),
            digest: self.config.digest(),
            seed: self.episode_seed,
            initial_state: self.initial.clone(),
            steps: self.log.clone(),
            final_hash: self.state.hash_hex(),
        }
    }

    pub fn info(&self) -> SessionInfo {
        SessionInfo {
            id: self.id.clone(),
            layout: self.config.layout.name.clone(),
            seats: self.seats.iter().map(Seat::label).collect(),
            connected: self.connected.clone(),
            status: self.status,
            t: self.state.t,
            max_steps: self.config.options.max_steps,
            score: self.score,
            episode: self.episode,
            fog: self.options.fog,
        }
    }
}
