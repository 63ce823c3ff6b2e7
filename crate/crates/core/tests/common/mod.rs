#![allow(dead_code)]

pub mod oracles;
pub mod stats;

use overcooked_core::env::EnvOptions;
use overcooked_core::item::encode_item;
use overcooked_core::layout::{parse_layout, Layout};
use overcooked_core::observation::IngredientPermutation;
use overcooked_core::{step, Action, EnvConfig, GameState, ItemCode, SplitMix64, StaticCell};

/// Open rooms with three and four agents; built-ins only have two.
pub const THREE_AGENTS: &str = "
WWWPWWW
0A    X
W  A  W
1    AW
WWBWRWW
";

pub const FOUR_AGENTS: &str = "
WWWPWWPW
0 A  A X
W      W
1 A  A W
WWBWWRWW
";

pub fn multi_agent_layouts() -> Vec<Layout> {
    vec![parse_layout(THREE_AGENTS).unwrap(), parse_layout(FOUR_AGENTS).unwrap()]
}

pub fn random_action(rng: &mut SplitMix64) -> Action {
    Action::ALL[rng.index(6)]
}

pub fn random_joint(rng: &mut SplitMix64, n: usize) -> Vec<Action> {
    (0..n).map(|_| random_action(rng)).collect()
}

/// A uniformly drawn valid item for `n` ingredients (possibly empty).
pub fn random_item(rng: &mut SplitMix64, n: usize) -> ItemCode {
    loop {
        let mut counts = vec![0u8; n];
        let total = rng.index(4);
        for _ in 0..total {
            counts[rng.index(n)] += 1;
        }
        let cooked = total > 0 && rng.index(2) == 1;
        let plated = rng.index(2) == 1;
        if let Ok(item) = encode_item(plated, cooked, &counts) {
            return item;
        }
    }
}

/// Random valid state: random walk from reset, then random counter, pot,
/// inventory, timer, recipe and signal contents.
pub fn random_state(config: &EnvConfig, rng: &mut SplitMix64) -> GameState {
    let mut s = overcooked_core::reset(config, rng.next_u64()).unwrap();
    let n = config.num_agents();
    for _ in 0..rng.index(30) {
        s = step(config, &s, &random_joint(rng, n)).unwrap().0;
    }
    let ni = config.num_ingredients();
    for idx in 0..s.grid.statics.len() {
        match s.grid.statics[idx] {
            StaticCell::Wall if rng.index(4) == 0 => s.grid.items[idx] = random_item(rng, ni),
            StaticCell::Pot => {
                s.grid.items[idx] = random_item(rng, ni);
                s.grid.timers[idx] = if rng.index(3) == 0 { rng.below(20) as u32 } else { 0 };
            }
            StaticCell::ButtonRecipeIndicator => s.grid.timers[idx] = rng.below(11) as u32,
            _ => {}
        }
    }
    for a in s.agents.iter_mut() {
        a.inventory = random_item(rng, ni);
    }
    s.recipe = config.layout.recipes[rng.index(config.layout.recipes.len())];
    s.delivered_signal = rng.index(2) == 1;
    s
}

/// All permutations of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<IngredientPermutation> {
    let idx: Vec<usize> = (0..n).collect();
    IngredientPermutation::all_over_subset(n, &idx)
}

pub fn options(f: impl FnOnce(&mut EnvOptions)) -> EnvOptions {
    let mut o = EnvOptions::default();
    f(&mut o);
    o
}
