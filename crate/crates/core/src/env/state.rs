use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::grid::{Direction, Grid, Pos};
use crate::item::ItemCode;
use crate::layout::Recipe;
use crate::observation::IngredientPermutation;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Stay,
    Interact,
}

impl Action {
    pub const ALL: [Action; 6] = [
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::Stay,
        Action::Interact,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    #[inline]
    pub fn direction(self) -> Option<Direction> {
        match self {
            Action::Up => Some(Direction::Up),
            Action::Down => Some(Direction::Down),
            Action::Left => Some(Direction::Left),
            Action::Right => Some(Direction::Right),
            Action::Stay | Action::Interact => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
            Action::Stay => "stay",
            Action::Interact => "interact",
        }
    }
}

impl From<Direction> for Action {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Up => Action::Up,
            Direction::Down => Action::Down,
            Direction::Left => Action::Left,
            Direction::Right => Action::Right,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "up" | "u" => Action::Up,
            "down" | "d" => Action::Down,
            "left" | "l" => Action::Left,
            "right" | "r" => Action::Right,
            "stay" | "s" | "noop" => Action::Stay,
            "interact" | "i" | "e" => Action::Interact,
            other => return Err(format!("unknown action {other:?}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentState {
    pub pos: Pos,
    pub dir: Direction,
    pub inventory: ItemCode,
}

/// Complete episode state. Field order is the canonical JSON order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameState {
    pub grid: Grid,
    pub agents: Vec<AgentState>,
    pub t: u32,
    pub recipe: Recipe,
    pub perms: Vec<IngredientPermutation>,
    pub delivered_signal: bool,
    pub rng: SplitMix64,
}

impl GameState {
    pub fn positions(&self) -> Vec<Pos> {
        self.agents.iter().map(|a| a.pos).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    /// 128-bit content hash (hex) over a fixed binary encoding of every field.
    pub fn hash_hex(&self) -> String {
        let mut h = Sha256::new();
        let g = &self.grid;
        h.update((g.width as u32).to_le_bytes());
        h.update((g.height as u32).to_le_bytes());
        for c in &g.statics {
            h.update([c.glyph() as u8]);
        }
        for it in &g.items {
            h.update(it.0.to_le_bytes());
        }
        for tm in &g.timers {
            h.update(tm.to_le_bytes());
        }
        for a in &self.agents {
            h.update((a.pos.x as u32).to_le_bytes());
            h.update((a.pos.y as u32).to_le_bytes());
            h.update([a.dir.index() as u8]);
            h.update(a.inventory.0.to_le_bytes());
        }
        h.update(self.t.to_le_bytes());
        h.update(self.recipe.code().0.to_le_bytes());
        for p in &self.perms {
            h.update([p.len() as u8]);
            h.update(p.mapping());
        }
        h.update([self.delivered_signal as u8]);
        h.update(self.rng.state().to_le_bytes());
        hex::encode(&h.finalize()[..16])
    }

    /// Sum of ingredient units in pots, on counters and in inventories.
    pub fn total_ingredient_units(&self) -> u32 {
        self.grid.items.iter().map(|i| i.total()).sum::<u32>()
            + self.agents.iter().map(|a| a.inventory.total()).sum::<u32>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Delivered {
        agent: usize,
        correct: bool,
        recipe: Recipe,
        item: ItemCode,
    },
    CookingStarted {
        pos: Pos,
    },
    CookingFinished {
        pos: Pos,
    },
    ButtonPressed {
        agent: usize,
        pos: Pos,
    },
    Placed {
        agent: usize,
        pos: Pos,
        item: ItemCode,
    },
    PickedUp {
        agent: usize,
        pos: Pos,
        item: ItemCode,
    },
    RecipeChanged {
        recipe: Recipe,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    /// Common-payoff delivery and button rewards, identical for all agents.
    pub rewards: Vec<f32>,
    /// Per-agent shaped rewards for recipe-aligned progress.
    pub shaped: Vec<f32>,
    pub done: bool,
    pub events: Vec<Event>,
}
