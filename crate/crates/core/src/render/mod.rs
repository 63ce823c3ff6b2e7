//! Text, structured-frame and animated-image rendering.
//!
//! The ASCII grid reuses the layout DSL glyphs, with agents drawn as
//! `^ v < >`. Everything a glyph cannot show (held items, counter contents,
//! pot progress, the button timer) goes into a legend below the grid.

mod animation;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use animation::{encode_animation, export_animation, PALETTE, TILE};

use crate::env::{EnvConfig, GameState};
use crate::grid::{Direction, Pos, StaticCell};

pub const FRAME_VERSION: u32 = 1;

/// Glyph rows of the grid with agents overlaid.
pub fn grid_rows(state: &GameState) -> Vec<String> {
    let g = &state.grid;
    let mut rows: Vec<Vec<char>> = (0..g.height)
        .map(|y| (0..g.width).map(|x| g.static_at(Pos::new(x, y)).glyph()).collect())
        .collect();
    for a in &state.agents {
        rows[a.pos.y][a.pos.x] = a.dir.arrow();
    }
    rows.into_iter().map(|r| r.into_iter().collect()).collect()
}

/// Hex of the first 8 bytes of SHA-256 over `grid_rows` joined by `\n`.
/// Clients recompute it from the frame's `rows` to check what they drew.
pub fn grid_hash(rows: &[String]) -> String {
    let digest = Sha256::digest(rows.join("\n").as_bytes());
    hex::encode(&digest[..8])
}

pub fn render_ascii(state: &GameState, config: &EnvConfig) -> String {
    let ni = config.num_ingredients();
    let g = &state.grid;
    let mut out = String::new();
    for row in grid_rows(state) {
        out.push_str(&row);
        out.push('\n');
    }
    out.push_str(&format!(
        "t={}/{} recipe={}\n",
        state.t, config.options.max_steps, state.recipe
    ));
    for (i, a) in state.agents.iter().enumerate() {
        out.push_str(&format!(
            "agent {i} ({},{}) {} holding {}\n",
            a.pos.x,
            a.pos.y,
            a.dir.arrow(),
            a.inventory.describe(ni)
        ));
    }
    for idx in 0..g.statics.len() {
        let p = g.pos(idx);
        let (item, timer) = (g.items[idx], g.timers[idx]);
        match g.statics[idx] {
            StaticCell::Pot if !item.is_empty() || timer > 0 => {
                let status = if timer > 0 {
                    format!("cooking, {timer} ticks left")
                } else if item.is_cooked() {
                    "done".to_string()
                } else {
                    "waiting".to_string()
                };
                out.push_str(&format!("pot ({},{}) {} {}\n", p.x, p.y, item.describe(ni), status));
            }
            StaticCell::Wall if !item.is_empty() => {
                out.push_str(&format!("counter ({},{}) {}\n", p.x, p.y, item.describe(ni)));
            }
            StaticCell::ButtonRecipeIndicator if timer > 0 => {
                out.push_str(&format!("button ({},{}) lit, {timer} ticks left\n", p.x, p.y));
            }
            _ => {}
        }
    }
    if state.delivered_signal {
        out.push_str("delivered\n");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub glyph: char,
    /// Raw item code; 0 when the cell is empty or hidden.
    pub item: u32,
    pub item_summary: String,
    pub timer: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub pos: Pos,
    pub dir: Direction,
    pub inventory: u32,
    pub inventory_summary: String,
    /// This agent's ingredient relabelling, `mapping[i]` = observed index of ingredient `i`.
    pub permutation: Vec<u8>,
}

/// Everything an observation can show, as plain JSON for clients.
///
/// `cells` is row-major (`y * width + x`). With a viewer, cells outside the
/// viewer's view radius carry glyph `?`, and other agents outside it are omitted
/// (`agents[i]` is `null`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub version: u32,
    pub t: u32,
    pub max_steps: u32,
    pub width: usize,
    pub height: usize,
    pub rows: Vec<String>,
    pub grid_hash: String,
    pub cells: Vec<CellRecord>,
    pub agents: Vec<Option<AgentRecord>>,
    /// Ingredient indices of the active recipe; `None` when the viewer cannot see it.
    pub recipe: Option<Vec<usize>>,
    pub score: f32,
    pub delivered_signal: bool,
    /// Per agent, per cell: inside that agent's view radius.
    pub visibility: Vec<Vec<bool>>,
    pub viewer: Option<usize>,
    pub state_hash: String,
}

pub fn visibility(state: &GameState, config: &EnvConfig) -> Vec<Vec<bool>> {
    let g = &state.grid;
    state
        .agents
        .iter()
        .map(|a| {
            (0..g.statics.len())
                .map(|idx| {
                    config
                        .options
                        .view_radius
                        .is_none_or(|r| g.pos(idx).chebyshev(a.pos) <= r)
                })
                .collect()
        })
        .collect()
}

/// Builds a frame; `viewer = Some(i)` hides what agent `i` cannot see.
pub fn frame(state: &GameState, config: &EnvConfig, score: f32, viewer: Option<usize>) -> Frame {
    let ni = config.num_ingredients();
    let g = &state.grid;
    let vis = visibility(state, config);
    let seen = |idx: usize| viewer.is_none_or(|v| vis.get(v).is_none_or(|m| m[idx]));

    let full_rows = grid_rows(state);
    let rows: Vec<String> = full_rows
        .iter()
        .enumerate()
        .map(|(y, r)| {
            r.chars()
                .enumerate()
                .map(|(x, c)| if seen(y * g.width + x) { c } else { '?' })
                .collect()
        })
        .collect();

    let cells = (0..g.statics.len())
        .map(|idx| {
            if seen(idx) {
                CellRecord {
                    glyph: g.statics[idx].glyph(),
                    item: g.items[idx].0,
                    item_summary: g.items[idx].describe(ni),
                    timer: g.timers[idx],
                }
            } else {
                CellRecord {
                    glyph: '?',
                    item: 0,
                    item_summary: String::new(),
                    timer: 0,
                }
            }
        })
        .collect();

    let agents = state
        .agents
        .iter()
        .map(|a| {
            seen(g.idx(a.pos)).then(|| AgentRecord {
                pos: a.pos,
                dir: a.dir,
                inventory: a.inventory.0,
                inventory_summary: a.inventory.describe(ni),
                permutation: Vec::new(),
            })
        })
        .zip(&state.perms)
        .map(|(rec, p)| {
            rec.map(|mut r| {
                r.permutation = p.mapping().to_vec();
                r
            })
        })
        .collect();

    // the recipe is visible through a lit indicator in view, or always without a viewer
    let recipe_visible = viewer.is_none()
        || (0..g.statics.len()).any(|idx| {
            seen(idx)
                && (g.statics[idx] == StaticCell::RecipeIndicator
                    || (g.statics[idx] == StaticCell::ButtonRecipeIndicator && g.timers[idx] > 0))
        });

    Frame {
        version: FRAME_VERSION,
        t: state.t,
        max_steps: config.options.max_steps,
        width: g.width,
        height: g.height,
        grid_hash: grid_hash(&rows),
        rows,
        cells,
        agents,
        recipe: recipe_visible.then(|| state.recipe.ingredients()),
        score,
        delivered_signal: state.delivered_signal,
        visibility: vis,
        viewer,
        state_hash: state.hash_hex(),
    }
}
