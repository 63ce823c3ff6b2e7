//! Per-agent observation tensors, view-radius masking and ingredient permutations.
//!
//! Tensors are `width x height x channels`, stored with index
//! `(x * height + y) * channels + c`. The channel layout for `I`
//! ingredients (`19 + 4I` channels in total):
//!
//! | group | width | contents |
//! |-------|-------|----------|
//! | `static` | 7 | one-hot: floor, counter, delivery, pot, recipe indicator, button indicator, plate pile |
//! | `piles` | I | one-hot ingredient pile |
//! | `item` | 2+I | item on the cell: plated, cooked, per-ingredient counts |
//! | `timer` | 1 | pot / button timer, raw ticks |
//! | `self_pos` | 1 | observing agent |
//! | `other_pos` | 1 | every other agent |
//! | `facing` | 4 | up, down, left, right at each agent's cell |
//! | `inventory` | 2+I | held item at each agent's cell |
//! | `recipe` | I | recipe counts at indicators (button: only while lit) |
//! | `delivery_signal` | 1 | all ones the step after a correct delivery, when enabled |
//!
//! `static` and `piles` together are one-hot at every visible cell.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EnvConfig, GameState};
use crate::grid::StaticCell;
use crate::item::ItemCode;
use crate::layout::Recipe;
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObsError {
    #[error("agent index {index} out of range for {agents} agents")]
    BadAgent { index: usize, agents: usize },
    #[error("permutation over {got} ingredients applied to {expected}")]
    Arity { expected: usize, got: usize },
    #[error("symmetry set is empty")]
    EmptySymmetries,
}

/// A bijection on ingredient indices. `mapping[i]` is where ingredient `i` is sent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IngredientPermutation(Vec<u8>);

impl IngredientPermutation {
    pub fn new(mapping: Vec<u8>) -> Self {
        Self(mapping)
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n as u8).collect())
    }

    /// The transposition of `a` and `b`, fixing everything else.
    pub fn swap(n: usize, a: usize, b: usize) -> Self {
        let mut m: Vec<u8> = (0..n as u8).collect();
        m.swap(a, b);
        Self(m)
    }

    /// Every permutation of `subset` that fixes all other ingredients.
    pub fn all_over_subset(n: usize, subset: &[usize]) -> Vec<Self> {
        fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if k <= 1 {
                out.push(a.clone());
                return;
            }
            for i in 0..k {
                heap(k - 1, a, out);
                if k.is_multiple_of(2) {
                    a.swap(i, k - 1);
                } else {
                    a.swap(0, k - 1);
                }
            }
        }
        let mut images = Vec::new();
        heap(subset.len(), &mut subset.to_vec(), &mut images);
        let mut out: Vec<Self> = images
            .into_iter()
            .map(|img| {
                let mut m: Vec<u8> = (0..n as u8).collect();
                for (&from, &to) in subset.iter().zip(&img) {
                    m[from] = to as u8;
                }
                Self(m)
            })
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mapping(&self) -> &[u8] {
        &self.0
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.0[i] as usize
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &m)| i == m as usize)
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.0.len()];
        for &m in &self.0 {
            let m = m as usize;
            if m >= seen.len() || seen[m] {
                return false;
            }
            seen[m] = true;
        }
        true
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u8; self.0.len()];
        for (i, &m) in self.0.iter().enumerate() {
            inv[m as usize] = i as u8;
        }
        Self(inv)
    }

    /// Moves ingredient counts: count of `i` becomes the count of `apply(i)`.
    pub fn relabel_item(&self, item: ItemCode) -> ItemCode {
        let flags = ItemCode(item.0 & 0b11);
        let mut out = flags;
        for i in 0..self.0.len() {
            let c = item.count(i) as u32;
            out.0 |= c << (2 + 2 * self.apply(i) as u32);
        }
        out
    }

    pub fn relabel_recipe(&self, recipe: Recipe) -> Recipe {
        let ings: Vec<usize> = recipe.ingredients().into_iter().map(|i| self.apply(i)).collect();
        Recipe::from_ingredients(&ings).expect("permuted recipe stays valid")
    }
}

/// Independent uniform draw from `symmetries` for each agent.
pub fn draw_permutations(
    rng: &mut SplitMix64,
    n_agents: usize,
    symmetries: &[IngredientPermutation],
) -> Result<Vec<IngredientPermutation>, ObsError> {
    if symmetries.is_empty() {
        return Err(ObsError::EmptySymmetries);
    }
    Ok((0..n_agents)
        .map(|_| symmetries[rng.index(symmetries.len())].clone())
        .collect())
}

/// Relabels every ingredient in a state: piles, items, inventories and the recipe.
/// Agent permutations are conjugated (`phi . p . phi^-1`), so observations satisfy
/// `observe(relabel_state(s, phi)) == permute(observe(s), phi)`.
pub fn relabel_state(state: &GameState, phi: &IngredientPermutation) -> GameState {
    let mut s = state.clone();
    for c in s.grid.statics.iter_mut() {
        if let StaticCell::IngredientPile(i) = c {
            *i = phi.apply(*i as usize) as u8;
        }
    }
    for it in s.grid.items.iter_mut() {
        *it = phi.relabel_item(*it);
    }
    for a in s.agents.iter_mut() {
        a.inventory = phi.relabel_item(a.inventory);
    }
    s.recipe = phi.relabel_recipe(s.recipe);
    // conjugate each agent's view: what it saw as p(i) it now sees for phi(i)
    for p in s.perms.iter_mut() {
        let mut q = vec![0u8; p.len()];
        for i in 0..p.len() {
            q[phi.apply(i)] = phi.apply(p.apply(i)) as u8;
        }
        *p = IngredientPermutation::new(q);
    }
    s
}

/// One named, contiguous channel range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelGroup {
    pub name: String,
    pub offset: usize,
    pub width: usize,
    /// Whether `permute` reorders this group by ingredient.
    pub ingredient_indexed: bool,
}

/// Machine-readable channel layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObsSchema {
    pub version: u32,
    pub num_ingredients: usize,
    pub channels: usize,
    pub index_order: String,
    pub groups: Vec<ChannelGroup>,
}

impl ObsSchema {
    pub fn group(&self, name: &str) -> &ChannelGroup {
        self.groups
            .iter()
            .find(|g| g.name == name)
            .unwrap_or_else(|| panic!("no channel group {name}"))
    }
}

#[derive(Debug, Clone, Copy)]
struct Offsets {
    ni: usize,
    piles: usize,
    item: usize,
    timer: usize,
    self_pos: usize,
    other_pos: usize,
    facing: usize,
    inventory: usize,
    recipe: usize,
    signal: usize,
    channels: usize,
}

impl Offsets {
    const fn new(ni: usize) -> Self {
        let piles = 7;
        let item = piles + ni;
        let timer = item + 2 + ni;
        let self_pos = timer + 1;
        let other_pos = self_pos + 1;
        let facing = other_pos + 1;
        let inventory = facing + 4;
        let recipe = inventory + 2 + ni;
        let signal = recipe + ni;
        Self {
            ni,
            piles,
            item,
            timer,
            self_pos,
            other_pos,
            facing,
            inventory,
            recipe,
            signal,
            channels: signal + 1,
        }
    }

    /// Starts of the ingredient-indexed ranges.
    fn ingredient_ranges(&self) -> [usize; 4] {
        [self.piles, self.item + 2, self.inventory + 2, self.recipe]
    }
}

pub fn num_channels(num_ingredients: usize) -> usize {
    19 + 4 * num_ingredients
}

pub fn obs_schema(num_ingredients: usize) -> ObsSchema {
    let o = Offsets::new(num_ingredients);
    let g = |name: &str, offset, width, ingredient_indexed| ChannelGroup {
        name: name.to_string(),
        offset,
        width,
        ingredient_indexed,
    };
    ObsSchema {
        version: 1,
        num_ingredients,
        channels: o.channels,
        index_order: "(x * height + y) * channels + c".to_string(),
        groups: vec![
            g("static", 0, 7, false),
            g("piles", o.piles, num_ingredients, true),
            g("item", o.item, 2 + num_ingredients, true),
            g("timer", o.timer, 1, false),
            g("self_pos", o.self_pos, 1, false),
            g("other_pos", o.other_pos, 1, false),
            g("facing", o.facing, 4, false),
            g("inventory", o.inventory, 2 + num_ingredients, true),
            g("recipe", o.recipe, num_ingredients, true),
            g("delivery_signal", o.signal, 1, false),
        ],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObsTensor<T> {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> ObsTensor<T> {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![T::zero(); width * height * channels],
        }
    }

    #[inline]
    pub fn offset(&self, x: usize, y: usize, c: usize) -> usize {
        (x * self.height + y) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> T {
        self.data[self.offset(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: T) {
        let o = self.offset(x, y, c);
        self.data[o] = v;
    }

    pub fn cell(&self, x: usize, y: usize) -> &[T] {
        let o = self.offset(x, y, 0);
        &self.data[o..o + self.channels]
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    /// Zeroes every cell at Chebyshev distance greater than `radius` from `(cx, cy)`.
    pub fn mask(&mut self, cx: usize, cy: usize, radius: usize) {
        for x in 0..self.width {
            for y in 0..self.height {
                if x.abs_diff(cx).max(y.abs_diff(cy)) > radius {
                    let o = self.offset(x, y, 0);
                    self.data[o..o + self.channels].fill(T::zero());
                }
            }
        }
    }
}

fn write_item<T: Scalar>(cell: &mut [T], base: usize, ni: usize, item: ItemCode) {
    if item.is_empty() {
        return;
    }
    cell[base] = if item.is_plated() { T::one() } else { T::zero() };
    cell[base + 1] = if item.is_cooked() { T::one() } else { T::zero() };
    for i in 0..ni {
        cell[base + 2 + i] = T::of(item.count(i) as f64);
    }
}

/// Agent `agent`'s observation: masked by the view radius, then permuted by the agent's own symmetry.
pub fn observe<T: Scalar>(config: &EnvConfig, state: &GameState, agent: usize) -> Result<ObsTensor<T>, ObsError> {
    let mut obs = observe_unpermuted(config, state, agent)?;
    let perm = &state.perms[agent];
    if !perm.is_identity() {
        obs = permute(&obs, perm)?;
    }
    Ok(obs)
}

/// Observation before the agent's permutation is applied (still masked).
pub fn observe_unpermuted<T: Scalar>(
    config: &EnvConfig,
    state: &GameState,
    agent: usize,
) -> Result<ObsTensor<T>, ObsError> {
    let n = state.agents.len();
    if agent >= n {
        return Err(ObsError::BadAgent {
            index: agent,
            agents: n,
        });
    }
    let g = &state.grid;
    let o = Offsets::new(config.layout.num_ingredients);
    let ni = o.ni;
    let mut obs = ObsTensor::zeros(g.width, g.height, o.channels);
    let one = T::one();
    let signal = state.delivered_signal && config.options.indicate_successful_delivery;
    let recipe = state.recipe.code();

    for y in 0..g.height {
        for x in 0..g.width {
            let idx = y * g.width + x;
            let off = obs.offset(x, y, 0);
            let cell = &mut obs.data[off..off + o.channels];
            let st = g.statics[idx];
            match st {
                StaticCell::Empty => cell[0] = one,
                StaticCell::Wall => cell[1] = one,
                StaticCell::Delivery => cell[2] = one,
                StaticCell::Pot => cell[3] = one,
                StaticCell::RecipeIndicator => cell[4] = one,
                StaticCell::ButtonRecipeIndicator => cell[5] = one,
                StaticCell::PlatePile => cell[6] = one,
                StaticCell::IngredientPile(i) => cell[o.piles + i as usize] = one,
            }
            write_item(cell, o.item, ni, g.items[idx]);
            let timer = g.timers[idx];
            cell[o.timer] = T::of(timer as f64);
            let lit = st == StaticCell::RecipeIndicator || (st == StaticCell::ButtonRecipeIndicator && timer > 0);
            if lit {
                for i in 0..ni {
                    cell[o.recipe + i] = T::of(recipe.count(i) as f64);
                }
            }
            if signal {
                cell[o.signal] = one;
            }
        }
    }

    for (i, a) in state.agents.iter().enumerate() {
        let off = obs.offset(a.pos.x, a.pos.y, 0);
        let cell = &mut obs.data[off..off + o.channels];
        cell[if i == agent { o.self_pos } else { o.other_pos }] = one;
        cell[o.facing + a.dir.index()] = one;
        write_item(cell, o.inventory, ni, a.inventory);
    }

    if let Some(r) = config.options.view_radius {
        let me = state.agents[agent].pos;
        obs.mask(me.x, me.y, r);
    }
    Ok(obs)
}

/// Reorders the ingredient-indexed channel groups: content at ingredient `i` moves to `phi(i)`.
pub fn permute<T: Scalar>(obs: &ObsTensor<T>, phi: &IngredientPermutation) -> Result<ObsTensor<T>, ObsError> {
    let ni = (obs.channels - 19) / 4;
    if phi.len() != ni || obs.channels != num_channels(ni) {
        return Err(ObsError::Arity {
            expected: ni,
            got: phi.len(),
        });
    }
    let o = Offsets::new(ni);
    let mut out = obs.clone();
    for (src, dst) in obs
        .data
        .chunks_exact(obs.channels)
        .zip(out.data.chunks_exact_mut(obs.channels))
    {
        for base in o.ingredient_ranges() {
            for i in 0..ni {
                dst[base + phi.apply(i)] = src[base + i];
            }
        }
    }
    Ok(out)
}
