//! The environment state machine.
//!
//! One [`step`] runs three sub-steps in order:
//!
//! 1. [`move_agents`] proposes new cells ignoring other agents, then
//!    [`resolve_collisions`] reverts contested and swapped moves;
//! 2. interactions are processed agent by agent in index order;
//! 3. [`update_globals`] advances time and the pot/button timers.

mod config;
mod state;

use thiserror::Error;

pub use config::{ConfigError, ConfigRecord, EnvConfig, EnvOptions, ShapedRewards};
pub use state::{Action, AgentState, Event, GameState, StepOutcome};

use crate::grid::{Direction, Grid, Pos, StaticCell};
use crate::item::ItemCode;
use crate::observation::{draw_permutations, IngredientPermutation};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("expected {expected} actions, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("episode is done (t = {0})")]
    EpisodeDone(u32),
    #[error("agent {agent} has only {available} free reachable floor cells")]
    NoSpawnCell { agent: usize, available: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("agent index {index} out of range for {agents} agents")]
    BadAgent { index: usize, agents: usize },
}

/// Starts an episode.
pub fn reset(config: &EnvConfig, seed: u64) -> Result<GameState, EnvError> {
    let layout = &config.layout;
    let opts = &config.options;
    let mut rng = SplitMix64::new(seed);
    let recipe = layout.recipes[rng.index(layout.recipes.len())];

    let mut agents = Vec::with_capacity(layout.num_agents());
    if opts.random_agent_positions {
        let mut taken: Vec<Pos> = Vec::new();
        for (agent, &spawn) in layout.spawns.iter().enumerate() {
            let free: Vec<Pos> = layout
                .reachable_floor(spawn)
                .into_iter()
                .filter(|p| !taken.contains(p))
                .collect();
            let pos = *rng.choose(&free).ok_or(EnvError::NoSpawnCell { agent, available: 0 })?;
            let dir = Direction::ALL[rng.index(4)];
            taken.push(pos);
            agents.push(AgentState {
                pos,
                dir,
                inventory: ItemCode::EMPTY,
            });
        }
    } else {
        agents.extend(layout.spawns.iter().map(|&pos| AgentState {
            pos,
            dir: Direction::Up,
            inventory: ItemCode::EMPTY,
        }));
    }

    let perms = match &opts.other_play_symmetries {
        Some(sym) => draw_permutations(&mut rng, agents.len(), sym).expect("config checked non-empty"),
        None => vec![IngredientPermutation::identity(layout.num_ingredients); agents.len()],
    };

    Ok(GameState {
        grid: Grid::from_statics(layout.width, layout.height, layout.cells.clone()),
        agents,
        t: 0,
        recipe,
        perms,
        delivered_signal: false,
        rng,
    })
}

/// Starts an episode from an injected state. The result equals `state` with `t = 0`.
pub fn reset_to(config: &EnvConfig, state: &GameState) -> Result<GameState, EnvError> {
    check_state(config, state)?;
    let mut s = state.clone();
    s.t = 0;
    Ok(s)
}

/// Checks every state invariant against the configured layout.
pub fn check_state(config: &EnvConfig, state: &GameState) -> Result<(), EnvError> {
    let layout = &config.layout;
    let bad = |m: String| Err(EnvError::InvalidState(m));
    let g = &state.grid;
    if g.width != layout.width || g.height != layout.height {
        return bad(format!(
            "grid is {}x{}, layout is {}x{}",
            g.width, g.height, layout.width, layout.height
        ));
    }
    if g.statics != layout.cells {
        return bad("static layer differs from the layout".into());
    }
    let n = layout.num_ingredients;
    for (idx, (&item, &timer)) in g.items.iter().zip(&g.timers).enumerate() {
        let cell = g.statics[idx];
        if let Err(e) = item.validate(n) {
            return bad(format!("item at cell {idx}: {e}"));
        }
        if !item.is_empty() && !matches!(cell, StaticCell::Wall | StaticCell::Pot) {
            return bad(format!("item on {} at cell {idx}", cell.name()));
        }
        if timer > 0 && !matches!(cell, StaticCell::Pot | StaticCell::ButtonRecipeIndicator) {
            return bad(format!("timer on {} at cell {idx}", cell.name()));
        }
    }
    if state.agents.len() != layout.num_agents() {
        return bad(format!(
            "{} agents, layout has {}",
            state.agents.len(),
            layout.num_agents()
        ));
    }
    for (i, a) in state.agents.iter().enumerate() {
        if a.pos.x >= g.width || a.pos.y >= g.height || !g.static_at(a.pos).is_walkable() {
            return bad(format!("agent {i} is not on a floor cell"));
        }
        if let Err(e) = a.inventory.validate(n) {
            return bad(format!("agent {i} inventory: {e}"));
        }
        if state.agents[..i].iter().any(|b| b.pos == a.pos) {
            return bad(format!("agent {i} shares a cell with another agent"));
        }
    }
    if state.t > config.options.max_steps {
        return bad(format!("t = {} exceeds max_steps", state.t));
    }
    if !layout.recipes.contains(&state.recipe) {
        return bad(format!("recipe {} is not possible in this layout", state.recipe));
    }
    if state.perms.len() != state.agents.len() {
        return bad("one permutation per agent required".into());
    }
    for p in &state.perms {
        if p.len() != n || !p.is_bijection() {
            return bad("invalid ingredient permutation".into());
        }
    }
    Ok(())
}

/// Pure transition: returns the successor state and the step outcome.
pub fn step(config: &EnvConfig, state: &GameState, actions: &[Action]) -> Result<(GameState, StepOutcome), EnvError> {
    let mut next = state.clone();
    let outcome = step_in_place(config, &mut next, actions)?;
    Ok((next, outcome))
}

/// Same as [`step`] but mutates `state`. On error the state is untouched.
pub fn step_in_place(config: &EnvConfig, state: &mut GameState, actions: &[Action]) -> Result<StepOutcome, EnvError> {
    let n = state.agents.len();
    if actions.len() != n {
        return Err(EnvError::WrongArity {
            expected: n,
            got: actions.len(),
        });
    }
    if state.t >= config.options.max_steps {
        return Err(EnvError::EpisodeDone(state.t));
    }

    let previous = state.positions();
    let proposed = move_agents(state, actions);
    let finals = resolve_collisions(&proposed.positions, &previous);
    for (a, (&pos, &dir)) in state.agents.iter_mut().zip(finals.iter().zip(&proposed.dirs)) {
        a.pos = pos;
        a.dir = dir;
    }

    let mut ctx = StepContext::new(n);
    state.delivered_signal = false;
    for (agent, &action) in actions.iter().enumerate() {
        if action == Action::Interact {
            interact(config, state, agent, &mut ctx);
        }
    }
    if ctx.correct_delivery && config.options.indicate_successful_delivery {
        state.delivered_signal = true;
    }
    globals(config, state, &ctx.fresh_timers, &mut ctx.events);

    Ok(StepOutcome {
        rewards: vec![ctx.reward; n],
        shaped: ctx.shaped,
        done: state.t >= config.options.max_steps,
        events: ctx.events,
    })
}

/// Positions and directions after the movement sub-step, before collisions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProposedMoves {
    pub positions: Vec<Pos>,
    pub dirs: Vec<Direction>,
}

/// Movement ignoring other agents: blocked moves keep the position but still turn the agent.
pub fn move_agents(state: &GameState, actions: &[Action]) -> ProposedMoves {
    let g = &state.grid;
    let mut positions = Vec::with_capacity(actions.len());
    let mut dirs = Vec::with_capacity(actions.len());
    for (a, &action) in state.agents.iter().zip(actions) {
        match action.direction() {
            Some(dir) => {
                let target = a
                    .pos
                    .step(dir, g.width, g.height)
                    .filter(|&p| g.static_at(p).is_walkable())
                    .unwrap_or(a.pos);
                positions.push(target);
                dirs.push(dir);
            }
            None => {
                positions.push(a.pos);
                dirs.push(a.dir);
            }
        }
    }
    ProposedMoves { positions, dirs }
}

/// Iterative collision resolution followed by swap rejection.
pub fn resolve_collisions(proposed: &[Pos], previous: &[Pos]) -> Vec<Pos> {
    resolve_collisions_traced(proposed, previous).0
}

/// As [`resolve_collisions`], also returning how many passes found collisions.
pub fn resolve_collisions_traced(proposed: &[Pos], previous: &[Pos]) -> (Vec<Pos>, usize) {
    assert_eq!(proposed.len(), previous.len(), "arity mismatch");
    let n = proposed.len();
    let mut cur = proposed.to_vec();
    let mut hit = vec![false; n];
    let mut passes = 0;
    loop {
        let mut any = false;
        hit.iter_mut().for_each(|h| *h = false);
        for i in 0..n {
            for j in i + 1..n {
                if cur[i] == cur[j] {
                    hit[i] = true;
                    hit[j] = true;
                    any = true;
                }
            }
        }
        if !any {
            break;
        }
        passes += 1;
        for i in 0..n {
            if hit[i] {
                cur[i] = previous[i];
            }
        }
    }
    hit.iter_mut().for_each(|h| *h = false);
    for i in 0..n {
        for j in i + 1..n {
            if cur[i] == previous[j] && cur[j] == previous[i] && cur[i] != cur[j] {
                hit[i] = true;
                hit[j] = true;
            }
        }
    }
    for i in 0..n {
        if hit[i] {
            cur[i] = previous[i];
        }
    }
    (cur, passes)
}

/// Result of a single agent's interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionResult {
    pub reward: f32,
    pub shaped: f32,
    pub events: Vec<Event>,
}

/// Applies `agent`'s interaction in isolation (as if it were the only interacting agent).
pub fn process_interaction(
    config: &EnvConfig,
    state: &GameState,
    agent: usize,
) -> Result<(GameState, InteractionResult), EnvError> {
    let n = state.agents.len();
    if agent >= n {
        return Err(EnvError::BadAgent {
            index: agent,
            agents: n,
        });
    }
    let mut next = state.clone();
    let mut ctx = StepContext::new(n);
    interact(config, &mut next, agent, &mut ctx);
    Ok((
        next,
        InteractionResult {
            reward: ctx.reward,
            shaped: ctx.shaped[agent],
            events: ctx.events,
        },
    ))
}

/// The per-step global update on its own: time, pot and button timers, auto-start.
pub fn update_globals(config: &EnvConfig, state: &GameState) -> GameState {
    let mut next = state.clone();
    let mut events = Vec::new();
    globals(config, &mut next, &[], &mut events);
    next
}

pub fn matches_recipe(item: ItemCode, recipe: crate::layout::Recipe) -> bool {
    recipe.matches(item)
}

struct StepContext {
    reward: f32,
    shaped: Vec<f32>,
    events: Vec<Event>,
    /// Timers set during this step's interactions; not decremented until the next step.
    fresh_timers: Vec<usize>,
    correct_delivery: bool,
}

impl StepContext {
    fn new(n: usize) -> Self {
        Self {
            reward: 0.0,
            shaped: vec![0.0; n],
            events: Vec::new(),
            fresh_timers: Vec::new(),
            correct_delivery: false,
        }
    }
}

fn interact(config: &EnvConfig, state: &mut GameState, agent: usize, ctx: &mut StepContext) {
    let opts = &config.options;
    let AgentState { pos, dir, inventory } = state.agents[agent];
    let g = &state.grid;
    let Some(target) = pos.step(dir, g.width, g.height) else {
        return;
    };
    let idx = g.idx(target);
    let recipe = state.recipe;
    let mut inv = inventory;

    match state.grid.statics[idx] {
        StaticCell::IngredientPile(i) => {
            if inv.is_empty() {
                inv = ItemCode::ingredient(i as usize);
                ctx.events.push(Event::PickedUp {
                    agent,
                    pos: target,
                    item: inv,
                });
            }
        }
        StaticCell::PlatePile => {
            if inv.is_empty() {
                inv = ItemCode::PLATE;
                if recipe_dish_in_progress(&state.grid, recipe) {
                    ctx.shaped[agent] += opts.shaped_rewards.plate_pickup;
                }
                ctx.events.push(Event::PickedUp {
                    agent,
                    pos: target,
                    item: inv,
                });
            }
        }
        StaticCell::Pot => {
            let grid = &mut state.grid;
            let contents = grid.items[idx];
            let timer = grid.timers[idx];
            let idle = timer == 0 && !contents.is_cooked();
            if inv.is_raw_ingredients() && idle {
                if let Some(merged) = contents.merge_counts(inv) {
                    grid.items[idx] = merged;
                    if merged.counts_within(recipe.code()) {
                        ctx.shaped[agent] += opts.shaped_rewards.pot_placement;
                    }
                    ctx.events.push(Event::Placed {
                        agent,
                        pos: target,
                        item: inv,
                    });
                    inv = ItemCode::EMPTY;
                }
            } else if inv.is_bare_plate() && contents.is_cooked() && timer == 0 {
                let dish = contents.with_plated();
                grid.items[idx] = ItemCode::EMPTY;
                if recipe.matches(dish) {
                    ctx.shaped[agent] += opts.shaped_rewards.dish_pickup;
                }
                ctx.events.push(Event::PickedUp {
                    agent,
                    pos: target,
                    item: dish,
                });
                inv = dish;
            } else if inv.is_empty() && !opts.auto_start_cooking && idle && contents.total() == 3 {
                grid.timers[idx] = opts.cook_time;
                ctx.fresh_timers.push(idx);
                ctx.events.push(Event::CookingStarted { pos: target });
            }
        }
        StaticCell::Wall => {
            let grid = &mut state.grid;
            let on_counter = grid.items[idx];
            if on_counter.is_empty() && !inv.is_empty() {
                grid.items[idx] = inv;
                ctx.events.push(Event::Placed {
                    agent,
                    pos: target,
                    item: inv,
                });
                inv = ItemCode::EMPTY;
            } else if !on_counter.is_empty() && inv.is_empty() {
                grid.items[idx] = ItemCode::EMPTY;
                ctx.events.push(Event::PickedUp {
                    agent,
                    pos: target,
                    item: on_counter,
                });
                inv = on_counter;
            }
        }
        StaticCell::Delivery => {
            if inv.is_dish() {
                let correct = recipe.matches(inv);
                if correct {
                    ctx.reward += opts.delivery_reward;
                    ctx.correct_delivery = true;
                } else if opts.negative_rewards {
                    ctx.reward -= opts.delivery_reward;
                }
                ctx.events.push(Event::Delivered {
                    agent,
                    correct,
                    recipe,
                    item: inv,
                });
                inv = ItemCode::EMPTY;
                if correct && opts.sample_recipe_on_delivery {
                    let recipes = &config.layout.recipes;
                    state.recipe = recipes[state.rng.index(recipes.len())];
                    ctx.events.push(Event::RecipeChanged { recipe: state.recipe });
                }
            }
        }
        StaticCell::ButtonRecipeIndicator => {
            state.grid.timers[idx] = opts.button_duration;
            ctx.fresh_timers.push(idx);
            ctx.reward += opts.button_cost;
            ctx.events.push(Event::ButtonPressed { agent, pos: target });
        }
        StaticCell::RecipeIndicator | StaticCell::Empty => {}
    }
    state.agents[agent].inventory = inv;
}

/// Some pot is cooking or done with exactly the recipe's contents.
fn recipe_dish_in_progress(grid: &Grid, recipe: crate::layout::Recipe) -> bool {
    grid.statics.iter().enumerate().any(|(i, &c)| {
        c == StaticCell::Pot
            && (grid.timers[i] > 0 || grid.items[i].is_cooked())
            && grid.items[i].count_bits() == recipe.code().count_bits()
    })
}

fn globals(config: &EnvConfig, state: &mut GameState, fresh: &[usize], events: &mut Vec<Event>) {
    let opts = &config.options;
    state.t += 1;
    let g = &mut state.grid;
    for idx in 0..g.statics.len() {
        let timer = g.timers[idx];
        if timer > 0 && !fresh.contains(&idx) {
            g.timers[idx] = timer - 1;
            if timer == 1 && g.statics[idx] == StaticCell::Pot {
                g.items[idx] = g.items[idx].with_cooked();
                events.push(Event::CookingFinished { pos: g.pos(idx) });
            }
        }
        if opts.auto_start_cooking
            && g.statics[idx] == StaticCell::Pot
            && g.timers[idx] == 0
            && g.items[idx].is_raw_ingredients()
            && g.items[idx].total() == 3
        {
            g.timers[idx] = opts.cook_time;
            events.push(Event::CookingStarted { pos: g.pos(idx) });
        }
    }
}

#[cfg(test)]
mod tests;
