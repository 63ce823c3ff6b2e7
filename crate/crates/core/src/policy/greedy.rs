//! Scripted chef with full observability.
//!
//! Each step it picks the first executable task from a fixed priority list
//! (deliver, plate, fill the pot, ...) and walks a shortest path to a floor
//! cell facing the task's station. Paths avoid the other agents when they can;
//! an agent blocked three steps in a row takes one random move to break
//! corridor standoffs.

use std::collections::VecDeque;

use super::{AgentView, Policy, PolicyKind, PolicySpec};
use crate::env::Action;
use crate::grid::{Direction, Grid, Pos, StaticCell};
use crate::item::ItemCode;
use crate::rng::SplitMix64;

const STUCK_LIMIT: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Finish {
    Interact,
    /// Stand facing the station without interacting.
    Wait,
}

struct Task {
    stations: Vec<Pos>,
    finish: Finish,
}

#[derive(Debug, Clone, Default)]
pub struct GreedyPolicy {
    last: Option<(Pos, Action)>,
    stuck: u32,
}

impl GreedyPolicy {
    pub fn new() -> Self {
        Self::default()
    }

    /// The deterministic planner output, ignoring the stuck breaker.
    pub fn plan(view: &AgentView<'_>) -> Action {
        let state = view.state;
        let me = state.agents[view.agent];
        let others: Vec<Pos> = state
            .agents
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != view.agent)
            .map(|(_, a)| a.pos)
            .collect();
        for task in tasks(view) {
            for blockers in [&others[..], &[]] {
                if let Some(a) = navigate(&state.grid, me.pos, me.dir, blockers, &task) {
                    return a;
                }
            }
        }
        Action::Stay
    }
}

impl Policy for GreedyPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Greedy
    }

    fn reset(&mut self) {
        *self = Self::default();
    }

    fn act(&mut self, view: &AgentView<'_>, rng: &mut SplitMix64) -> Action {
        let g = &view.state.grid;
        let pos = view.state.agents[view.agent].pos;
        if let Some((prev, action)) = self.last {
            let wanted_floor = action
                .direction()
                .and_then(|d| prev.step(d, g.width, g.height))
                .is_some_and(|p| g.static_at(p).is_walkable());
            if wanted_floor && prev == pos {
                self.stuck += 1;
            } else {
                self.stuck = 0;
            }
        }
        let action = if self.stuck >= STUCK_LIMIT {
            self.stuck = 0;
            Action::from(Direction::ALL[rng.index(4)])
        } else {
            Self::plan(view)
        };
        self.last = Some((pos, action));
        action
    }

    fn clone_box(&self) -> Box<dyn Policy> {
        Box::new(self.clone())
    }

    fn spec(&self) -> Option<PolicySpec> {
        Some(PolicySpec::bare(PolicyKind::Greedy))
    }
}

fn cells_where(g: &Grid, mut pred: impl FnMut(StaticCell, ItemCode, u32) -> bool) -> Vec<Pos> {
    (0..g.statics.len())
        .filter(|&i| pred(g.statics[i], g.items[i], g.timers[i]))
        .map(|i| g.pos(i))
        .collect()
}

fn tasks(view: &AgentView<'_>) -> Vec<Task> {
    let state = view.state;
    let g = &state.grid;
    let auto_start = view.config.options.auto_start_cooking;
    let recipe = state.recipe;
    let hand = state.agents[view.agent].inventory;
    let task = |stations: Vec<Pos>, finish| Task { stations, finish };
    let interact = |stations| task(stations, Finish::Interact);

    let is_pot = |c: StaticCell| c == StaticCell::Pot;
    let idle = |item: ItemCode, timer: u32| timer == 0 && !item.is_cooked();
    let empty_counters = cells_where(g, |c, item, _| c == StaticCell::Wall && item.is_empty());
    let cooked = cells_where(g, |c, item, timer| is_pot(c) && item.is_cooked() && timer == 0);
    let cooking = cells_where(g, |c, _, timer| is_pot(c) && timer > 0);
    // idle pots still open for recipe-aligned ingredients
    let aligned_open = cells_where(g, |c, item, timer| {
        is_pot(c) && idle(item, timer) && item.total() < 3 && item.counts_within(recipe.code())
    });

    let mut out = Vec::new();
    if hand.is_dish() {
        if recipe.matches(hand) {
            out.push(interact(cells_where(g, |c, _, _| c == StaticCell::Delivery)));
        } else {
            out.push(interact(empty_counters));
            out.push(interact(cells_where(g, |c, _, _| c == StaticCell::Delivery)));
        }
    } else if hand.is_bare_plate() {
        out.push(interact(cooked));
        out.push(task(cooking, Finish::Wait));
        out.push(interact(empty_counters));
    } else if hand.is_raw_ingredients() {
        let fits = |item: ItemCode, timer: u32, aligned: bool| {
            idle(item, timer)
                && item
                    .merge_counts(hand)
                    .is_some_and(|m| !aligned || m.counts_within(recipe.code()))
        };
        out.push(interact(cells_where(g, |c, item, timer| {
            is_pot(c) && fits(item, timer, true)
        })));
        if aligned_open.is_empty() {
            out.push(interact(cells_where(g, |c, item, timer| {
                is_pot(c) && fits(item, timer, false)
            })));
        }
        out.push(interact(empty_counters));
    } else {
        out.push(interact(cells_where(g, |c, item, _| {
            c == StaticCell::Wall && item.is_dish() && recipe.matches(item)
        })));
        if !cooked.is_empty() || !cooking.is_empty() {
            out.push(interact(cells_where(g, |c, item, _| {
                c == StaticCell::PlatePile || (c == StaticCell::Wall && item.is_bare_plate())
            })));
        }
        if !auto_start {
            out.push(interact(cells_where(g, |c, item, timer| {
                is_pot(c) && idle(item, timer) && item.total() == 3
            })));
        }
        let mut wanted = vec![false; view.config.layout.num_ingredients];
        for &p in &aligned_open {
            let item = g.items[g.idx(p)];
            for (i, w) in wanted.iter_mut().enumerate() {
                *w |= recipe.count(i) > item.count(i);
            }
        }
        if aligned_open.is_empty() {
            // a misaligned pot can only be cleared by filling and cooking it
            let stale = cells_where(g, |c, item, timer| is_pot(c) && idle(item, timer) && item.total() < 3);
            if !stale.is_empty() {
                if let Some(&i) = recipe.ingredients().first() {
                    wanted[i] = true;
                }
            }
        }
        out.push(interact(cells_where(g, |c, item, _| match c {
            StaticCell::IngredientPile(i) => wanted.get(i as usize).copied().unwrap_or(false),
            StaticCell::Wall => (0..wanted.len()).any(|i| wanted[i] && item == ItemCode::ingredient(i)),
            _ => false,
        })));
    }
    out
}

/// First action toward the best floor cell facing one of `task.stations`.
///
/// Candidates are ranked by path length, then by the index of the first
/// action; `None` when no station is reachable.
fn navigate(g: &Grid, from: Pos, facing: Direction, blockers: &[Pos], task: &Task) -> Option<Action> {
    if task.stations.is_empty() {
        return None;
    }
    let n = g.statics.len();
    let mut dist = vec![u32::MAX; n];
    let mut first = vec![Action::Stay; n];
    let mut queue = VecDeque::new();
    dist[g.idx(from)] = 0;
    queue.push_back(from);
    while let Some(p) = queue.pop_front() {
        let d = dist[g.idx(p)];
        for dir in Direction::ALL {
            let Some(q) = p.step(dir, g.width, g.height) else {
                continue;
            };
            let qi = g.idx(q);
            if dist[qi] != u32::MAX || !g.static_at(q).is_walkable() || blockers.contains(&q) {
                continue;
            }
            dist[qi] = d + 1;
            first[qi] = if p == from { Action::from(dir) } else { first[g.idx(p)] };
            queue.push_back(q);
        }
    }

    let mut best: Option<(u32, usize, Pos, Direction)> = None;
    for &s in &task.stations {
        for dir in Direction::ALL {
            // stand at `c`, facing `dir` toward the station
            let back = match dir {
                Direction::Up => Direction::Down,
                Direction::Down => Direction::Up,
                Direction::Left => Direction::Right,
                Direction::Right => Direction::Left,
            };
            let Some(c) = s.step(back, g.width, g.height) else {
                continue;
            };
            let d = dist[g.idx(c)];
            if d == u32::MAX {
                continue;
            }
            let rank = if d == 0 { 0 } else { first[g.idx(c)].index() };
            let cand = (d, rank, c, dir);
            if best.is_none_or(|b| (cand.0, cand.1) < (b.0, b.1)) {
                best = Some(cand);
            }
        }
    }
    let (d, _, c, dir) = best?;
    Some(if d > 0 {
        first[g.idx(c)]
    } else if facing != dir {
        Action::from(dir)
    } else {
        match task.finish {
            Finish::Interact => Action::Interact,
            Finish::Wait => Action::Stay,
        }
    })
}
