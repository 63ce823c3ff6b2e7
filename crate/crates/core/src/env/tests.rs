use super::*;
use crate::item::encode_item;
use crate::layout::{builtin, parse_layout, Recipe};

fn cfg_with(name: &str, f: impl FnOnce(&mut EnvOptions)) -> EnvConfig {
    let mut o = EnvOptions::default();
    f(&mut o);
    EnvConfig::new(builtin(name).unwrap(), o).unwrap()
}

fn cfg(name: &str) -> EnvConfig {
    cfg_with(name, |_| {})
}

/// Small open kitchen: agent 0 at (1,1), agent 1 at (3,2).
const KITCHEN: &str = "
WWPWWW
0A   X
W  A W
WBW1RW
";

fn kitchen(f: impl FnOnce(&mut EnvOptions)) -> EnvConfig {
    let mut o = EnvOptions::default();
    f(&mut o);
    let text = format!("{KITCHEN}\nrecipes=0,0,0;0,0,1\n");
    EnvConfig::new(parse_layout(&text).unwrap(), o).unwrap()
}

fn place(state: &mut GameState, agent: usize, x: usize, y: usize, dir: Direction) {
    state.agents[agent].pos = Pos::new(x, y);
    state.agents[agent].dir = dir;
}

#[test]
fn reset_fixed_spawns() {
    let c = cfg("cramped_room");
    let s = reset(&c, 11).unwrap();
    assert_eq!(s.t, 0);
    assert_eq!(s.positions(), c.layout.spawns);
    assert!(s
        .agents
        .iter()
        .all(|a| a.dir == Direction::Up && a.inventory.is_empty()));
    assert!(s.grid.items.iter().all(|i| i.is_empty()));
    assert!(s.grid.timers.iter().all(|&t| t == 0));
    assert!(s.perms.iter().all(|p| p.is_identity()));
}

#[test]
fn reset_is_deterministic() {
    let c = cfg_with("two_rooms", |o| o.random_agent_positions = true);
    for seed in 0..20 {
        assert_eq!(reset(&c, seed).unwrap(), reset(&c, seed).unwrap());
    }
}

#[test]
fn random_positions_stay_in_region() {
    let c = cfg_with("two_rooms", |o| o.random_agent_positions = true);
    let regions: Vec<Vec<Pos>> = c.layout.spawns.iter().map(|&s| c.layout.reachable_floor(s)).collect();
    let mut moved = false;
    for seed in 0..200 {
        let s = reset(&c, seed).unwrap();
        for (a, region) in s.agents.iter().zip(&regions) {
            assert!(region.contains(&a.pos));
        }
        assert_ne!(s.agents[0].pos, s.agents[1].pos);
        moved |= s.positions() != c.layout.spawns;
    }
    assert!(moved);
}

#[test]
fn random_positions_fail_when_region_too_small() {
    let l = parse_layout("WWPWW\nWWAWW\nWWAWW\nW0BXW\nWWWWW\n").unwrap();
    let o = EnvOptions {
        random_agent_positions: true,
        ..Default::default()
    };
    let c = EnvConfig::new(l, o).unwrap();
    // both spawns share a two-cell corridor: works
    reset(&c, 0).unwrap();
    let l = parse_layout("WWPWWW\nWWAWAW\nWWWWWW\nW0BXWW\n").unwrap();
    let o = EnvOptions {
        random_agent_positions: true,
        ..Default::default()
    };
    // single-cell regions: each agent has exactly its own cell
    let c = EnvConfig::new(l, o).unwrap();
    let s = reset(&c, 0).unwrap();
    assert_eq!(s.positions(), c.layout.spawns);
    let l = parse_layout("WWPWW\nWWAWW\nWWAWW\nW0BXW\nWWWWW\n").unwrap();
    let mut three = l.clone();
    three.spawns.push(Pos::new(2, 1));
    let o = EnvOptions {
        random_agent_positions: true,
        ..Default::default()
    };
    let c = EnvConfig::new(three, o).unwrap();
    assert!(matches!(reset(&c, 0), Err(EnvError::NoSpawnCell { agent: 2, .. })));
}

#[test]
fn reset_to_round_trip_and_rejections() {
    let c = cfg("cramped_room");
    let s = reset(&c, 5).unwrap();
    assert_eq!(reset_to(&c, &s).unwrap(), s);

    let (mut mid, _) = step(&c, &s, &[Action::Down, Action::Left]).unwrap();
    let r = reset_to(&c, &mid).unwrap();
    assert_eq!(r.t, 0);
    assert_eq!(r.agents, mid.agents);

    mid.agents[1].pos = mid.agents[0].pos;
    assert!(matches!(reset_to(&c, &mid), Err(EnvError::InvalidState(_))));

    let mut bad = s.clone();
    bad.grid.items[0] = ItemCode(0b11 << 2 | 0b11 << 4);
    assert!(reset_to(&c, &bad).is_err());

    let mut bad = s.clone();
    bad.grid.statics[0] = StaticCell::Pot;
    assert!(reset_to(&c, &bad).is_err());

    let other = cfg("coord_ring");
    assert!(reset_to(&other, &s).is_err());
}

#[test]
fn step_arity_and_done() {
    let c = cfg_with("cramped_room", |o| o.max_steps = 2);
    let s = reset(&c, 0).unwrap();
    assert_eq!(
        step(&c, &s, &[Action::Stay]).unwrap_err(),
        EnvError::WrongArity { expected: 2, got: 1 }
    );
    let (s1, o1) = step(&c, &s, &[Action::Stay, Action::Stay]).unwrap();
    assert!(!o1.done);
    let (s2, o2) = step(&c, &s1, &[Action::Stay, Action::Stay]).unwrap();
    assert!(o2.done);
    assert_eq!(s2.t, 2);
    assert_eq!(
        step(&c, &s2, &[Action::Stay, Action::Stay]).unwrap_err(),
        EnvError::EpisodeDone(2)
    );
}

#[test]
fn move_into_wall_turns_only() {
    let c = kitchen(|_| {});
    let mut s = reset(&c, 0).unwrap();
    place(&mut s, 0, 1, 1, Direction::Down);
    let (n, _) = step(&c, &s, &[Action::Up, Action::Stay]).unwrap();
    assert_eq!(n.agents[0].pos, Pos::new(1, 1));
    assert_eq!(n.agents[0].dir, Direction::Up);
}

#[test]
fn move_agents_examples() {
    let c = kitchen(|_| {});
    let mut s = reset(&c, 0).unwrap();
    place(&mut s, 0, 1, 1, Direction::Up);
    let m = move_agents(&s, &[Action::Right, Action::Stay]);
    assert_eq!(m.positions[0], Pos::new(2, 1));
    assert_eq!(m.dirs[0], Direction::Right);
    assert_eq!(m.positions[1], s.agents[1].pos);
    assert_eq!(m.dirs[1], s.agents[1].dir);

    // (2,1) below the pot at (2,0): moving up is blocked
    place(&mut s, 0, 2, 1, Direction::Left);
    let m = move_agents(&s, &[Action::Up, Action::Interact]);
    assert_eq!(m.positions[0], Pos::new(2, 1));
    assert_eq!(m.dirs[0], Direction::Up);
}

#[test]
fn collision_examples() {
    let p = Pos::new;
    // both claim (2,2)
    assert_eq!(
        resolve_collisions(&[p(2, 2), p(2, 2)], &[p(1, 2), p(3, 2)]),
        vec![p(1, 2), p(3, 2)]
    );
    // swap rejection
    assert_eq!(
        resolve_collisions(&[p(2, 1), p(1, 1)], &[p(1, 1), p(2, 1)]),
        vec![p(1, 1), p(2, 1)]
    );
    // A moves into C's unchanged cell; B then collides with A's reverted cell.
    let prev = [p(1, 1), p(1, 2), p(2, 1)];
    let prop = [p(2, 1), p(1, 1), p(2, 1)];
    let (fin, passes) = resolve_collisions_traced(&prop, &prev);
    assert_eq!(fin, prev.to_vec());
    assert_eq!(passes, 2);
    // rotation of three is not a pairwise swap
    let prev = [p(1, 1), p(2, 1), p(2, 2)];
    let prop = [p(2, 1), p(2, 2), p(1, 1)];
    assert_eq!(resolve_collisions(&prop, &prev), prop.to_vec());
}

#[test]
fn agents_block_each_other_in_step() {
    let c = kitchen(|_| {});
    let mut s = reset(&c, 0).unwrap();
    place(&mut s, 0, 2, 1, Direction::Right);
    place(&mut s, 1, 3, 1, Direction::Left);
    let (n, _) = step(&c, &s, &[Action::Right, Action::Left]).unwrap();
    assert_eq!(n.agents[0].pos, Pos::new(2, 1));
    assert_eq!(n.agents[1].pos, Pos::new(3, 1));
}

#[test]
fn pile_pickup_and_pot_placement() {
    let c = kitchen(|_| {});
    let mut s = reset(&c, 0).unwrap();
    s.recipe = Recipe::from_ingredients(&[0, 0, 1]).unwrap();
    place(&mut s, 0, 1, 1, Direction::Left);
    let (n, o) = step(&c, &s, &[Action::Interact, Action::Stay]).unwrap();
    assert_eq!(n.agents[0].inventory, encode_item(false, false, &[1, 0]).unwrap());
    assert!(o.events.iter().any(|e| matches!(e, Event::PickedUp { .. })));

    // ingredient 1 pile at (3,3)
    let mut s2 = n.clone();
    place(&mut s2, 1, 3, 2, Direction::Down);
    let (n2, _) = step(&c, &s2, &[Action::Stay, Action::Interact]).unwrap();
    assert_eq!(n2.agents[1].inventory, encode_item(false, false, &[0, 1]).unwrap());

    // into the pot at (2,0)
    let mut s3 = n2.clone();
    place(&mut s3, 0, 2, 1, Direction::Up);
    let (n3, o3) = step(&c, &s3, &[Action::Interact, Action::Stay]).unwrap();
    assert!(n3.agents[0].inventory.is_empty());
    assert_eq!(n3.grid.items[2], encode_item(false, false, &[1, 0]).unwrap());
    assert_eq!(o3.shaped, vec![3.0, 0.0]);
}

#[test]
fn misaligned_pot_placement_not_shaped() {
    let c = kitchen(|_| {});
    let mut s = reset(&c, 0).unwrap();
    s.recipe = Recipe::from_ingredients(&[0, 0, 0]).unwrap();
    place(&mut s, 0, 2, 1, Direction::Up);
    s.agents[0].inventory = ItemCode::ingredient(1);
    let (n, o) = step(&c, &s, &[Action::Interact, Action::Stay]).unwrap();
    assert_eq!(n.grid.items[2], ItemCode::ingredient(1));
    assert_eq!(o.shaped, vec![0.0, 0.0]);
}

#[test]
fn pot_cooks_in_cook_time_ticks() {
    let c = kitchen(|o| o.cook_time = 5);
    let mut s = reset(&c, 0).unwrap();
    s.recipe = Recipe::from_ingredients(&[0, 0, 0]).unwrap();
    s.grid.items[2] = encode_item(false, false, &[2, 0]).unwrap();
    place(&mut s, 0, 2, 1, Direction::Up);
    s.agents[0].inventory = ItemCode::ingredient(0);
    let (mut s, o) = step(&c, &s, &[Action::Interact, Action::Stay]).unwrap();
    assert!(o.events.contains(&Event::CookingStarted { pos: Pos::new(2, 0) }));
    assert_eq!(s.grid.timers[2], 5);
    for k in 1..=5 {
        assert!(!s.grid.items[2].is_cooked());
        s = step(&c, &s, &[Action::Stay, Action::Stay]).unwrap().0;
        assert_eq!(s.grid.timers[2], 5 - k);
    }
    assert!(s.grid.items[2].is_cooked());
    assert_eq!(s.grid.items[2].counts(2), vec![3, 0]);
    // locked while cooking: placement at timer>0 was not possible, and cooked pots stay put
    let s2 = step(&c, &s, &[Action::Stay, Action::Stay]).unwrap().0;
    assert_eq!(s2.grid.items[2], s.grid.items[2]);
    assert_eq!(s2.grid.timers[2], 0);
}

#[test]
fn manual_start_cooking() {
    let c = kitchen(|o| {
        o.auto_start_cooking = false;
        o.cook_time = 3;
    });
    let mut s = reset(&c, 0).unwrap();
    s.grid.items[2] = encode_item(false, false, &[3, 0]).unwrap();
    place(&mut s, 0, 2, 1, Direction::Up);
    let s1 = step(&c, &s, &[Action::Stay, Action::Stay]).unwrap().0;
    assert_eq!(s1.grid.timers[2], 0);
    s.agents[0].inventory = ItemCode::ingredient(0);
    // full pot rejects another unit
    let s_full = step(&c, &s, &[Action::Interact, Action::Stay]).unwrap().0;
    assert_eq!(s_full.agents[0].inventory, ItemCode::ingredient(0));
    s.agents[0].inventory = ItemCode::EMPTY;
    let (mut s, o) = step(&c, &s, &[Action::Interact, Action::Stay]).unwrap();
    assert!(o.events.contains(&Event::CookingStarted { pos: Pos::new(2, 0) }));
    assert_eq!(s.grid.timers[2], 3);
    for _ in 0..3 {
        s = step(&c, &s, &[Action::Stay, Action::Stay]).unwrap().0;
    }
    assert!(s.grid.items[2].is_cooked());
}

#[test]
fn adding_to_cooking_pot_is_noop() {
    let c = kitchen(|_| {});
    let mut s = reset(&c, 0).unwrap();
    s.grid.items[2] = encode_item(false, false, &[2, 0]).unwrap();
    s.grid.timers[2] = 4;
    place(&mut s, 0, 2, 1, Direction::Up);
    s.agents[0].inventory = ItemCode::ingredient(0);
    let n = step(&c, &s, &[Action::Interact, Action::Stay]).unwrap().0;
    assert_eq!(n.agents[0].inventory, ItemCode::ingredient(0));
    assert_eq!(n.grid.items[2].total(), 2);
}

#[test]
fn plate_and_deliver() {
    let c = kitchen(|_| {});
    let mut s = reset(&c, 0).unwrap();
    s.recipe = Recipe::from_ingredients(&[0, 0, 1]).unwrap();
    s.grid.items[2] = encode_item(false, true, &[2, 1]).unwrap();
    // plate pile at (1,3), agent at (1,2) facing down
    place(&mut s, 0, 1, 2, Direction::Down);
    let (s, o) = step(&c, &s, &[Action::Interact, Action::Stay]).unwrap();
    assert_eq!(s.agents[0].inventory, ItemCode::PLATE);
    assert_eq!(o.shaped[0], 3.0);

    let mut s = s;
    place(&mut s, 0, 2, 1, Direction::Up);
    let (s, o) = step(&c, &s, &[Action::Interact, Action::Stay]).unwrap();
    assert_eq!(s.agents[0].inventory, encode_item(true, true, &[2, 1]).unwrap());
    assert!(s.grid.items[2].is_empty());
    assert_eq!(o.shaped[0], 5.0);

    // delivery at (5,1)
    let mut s = s;
    place(&mut s, 0, 4, 1, Direction::Right);
    let units = s.total_ingredient_units();
    let (s, o) = step(&c, &s, &[Action::Interact, Action::Stay]).unwrap();
    assert_eq!(o.rewards, vec![20.0, 20.0]);
    assert!(s.agents[0].inventory.is_empty());
    assert_eq!(s.total_ingredient_units(), units - 3);
    assert!(!s.delivered_signal);
}

#[test]
fn plate_pickup_not_shaped_without_matching_pot() {
    let c = kitchen(|_| {});
    let mut s = reset(&c, 0).unwrap();
    s.recipe = Recipe::from_ingredients(&[0, 0, 0]).unwrap();
    s.grid.items[2] = encode_item(false, true, &[2, 1]).unwrap();
    place(&mut s, 0, 1, 2, Direction::Down);
    let (_, o) = step(&c, &s, &[Action::Interact, Action::Stay]).unwrap();
    assert_eq!(o.shaped[0], 0.0);
}

#[test]
fn wrong_delivery_rewards() {
    for negative in [false, true] {
        let c = kitchen(|o| o.negative_rewards = negative);
        let mut s = reset(&c, 0).unwrap();
        s.recipe = Recipe::from_ingredients(&[0, 0, 0]).unwrap();
        place(&mut s, 0, 4, 1, Direction::Right);
        s.agents[0].inventory = encode_item(true, true, &[2, 1]).unwrap();
        let (n, o) = step(&c, &s, &[Action::Interact, Action::Stay]).unwrap();
        let expect = if negative { -20.0 } else { 0.0 };
        assert_eq!(o.rewards, vec![expect, expect]);
        assert!(n.agents[0].inventory.is_empty());
        assert!(o
            .events
            .iter()
            .any(|e| matches!(e, Event::Delivered { correct: false, .. })));
    }
}

#[test]
fn undeliverable_items_stay_in_hand() {
    let c = kitchen(|_| {});
    let mut s = reset(&c, 0).unwrap();
    place(&mut s, 0, 4, 1, Direction::Right);
    for item in [
        ItemCode::PLATE,
        ItemCode::ingredient(0),
        encode_item(false, true, &[3, 0]).unwrap(),
    ] {
        s.agents[0].inventory = item;
        let (n, o) = step(&c, &s, &[Action::Interact, Action::Stay]).unwrap();
        assert_eq!(n.agents[0].inventory, item);
        assert_eq!(o.rewards, vec![0.0, 0.0]);
    }
}

#[test]
fn delivery_signal_and_resample() {
    let c = kitchen(|o| {
        o.indicate_successful_delivery = true;
        o.sample_recipe_on_delivery = true;
    });
    let mut s = reset(&c, 0).unwrap();
    let r = s.recipe;
    place(&mut s, 0, 4, 1, Direction::Right);
    s.agents[0].inventory = r.code().with_cooked().with_plated();
    let rng_before = s.rng;
    let (n, o) = step(&c, &s, &[Action::Interact, Action::Stay]).unwrap();
    assert!(n.delivered_signal);
    assert_ne!(n.rng, rng_before);
    assert!(o.events.iter().any(|e| matches!(e, Event::RecipeChanged { .. })));
    let n2 = step(&c, &n, &[Action::Stay, Action::Stay]).unwrap().0;
    assert!(!n2.delivered_signal);
}

#[test]
fn counter_place_and_pick() {
    let c = kitchen(|_| {});
    let mut s = reset(&c, 0).unwrap();
    // counter at (0,2) left of (1,2)
    place(&mut s, 0, 1, 2, Direction::Left);
    s.agents[0].inventory = ItemCode::PLATE;
    let idx = s.grid.idx(Pos::new(0, 2));
    let n = step(&c, &s, &[Action::Interact, Action::Stay]).unwrap().0;
    assert_eq!(n.grid.items[idx], ItemCode::PLATE);
    assert!(n.agents[0].inventory.is_empty());
    let n2 = step(&c, &n, &[Action::Interact, Action::Stay]).unwrap().0;
    assert_eq!(n2.agents[0].inventory, ItemCode::PLATE);
    assert!(n2.grid.items[idx].is_empty());
    // full hand on full counter: no-op
    let mut full = n.clone();
    full.agents[0].inventory = ItemCode::ingredient(0);
    let n3 = step(&c, &full, &[Action::Interact, Action::Stay]).unwrap().0;
    assert_eq!(n3.grid.items[idx], ItemCode::PLATE);
    assert_eq!(n3.agents[0].inventory, ItemCode::ingredient(0));
}

#[test]
fn recipe_indicator_is_inert() {
    let c = kitchen(|_| {});
    let mut s = reset(&c, 0).unwrap();
    place(&mut s, 1, 4, 2, Direction::Down);
    let (n, o) = step(&c, &s, &[Action::Stay, Action::Interact]).unwrap();
    assert_eq!(o.rewards, vec![0.0, 0.0]);
    assert!(o.events.is_empty());
    assert_eq!(n.grid, s.grid);
}

#[test]
fn contested_pickup_first_agent_wins() {
    let c = kitchen(|_| {});
    let mut s = reset(&c, 0).unwrap();
    let idx = s.grid.idx(Pos::new(3, 0));
    s.grid.items[idx] = ItemCode::PLATE;
    place(&mut s, 0, 3, 1, Direction::Up);
    place(&mut s, 1, 4, 1, Direction::Left);
    // agent 1 faces agent 0's floor cell; only agent 0 faces the counter
    let n = step(&c, &s, &[Action::Interact, Action::Interact]).unwrap().0;
    assert_eq!(n.agents[0].inventory, ItemCode::PLATE);
    assert!(n.agents[1].inventory.is_empty());
}

#[test]
fn update_globals_examples() {
    let c = kitchen(|_| {});
    let mut s = reset(&c, 0).unwrap();
    s.grid.items[2] = encode_item(false, false, &[1, 1]).unwrap();
    s.grid.timers[2] = 5;
    let n = update_globals(&c, &s);
    assert_eq!(n.grid.timers[2], 4);
    assert_eq!(n.grid.items[2], s.grid.items[2]);
    assert_eq!(n.t, s.t + 1);

    s.grid.items[2] = encode_item(false, false, &[3, 0]).unwrap();
    s.grid.timers[2] = 1;
    let n = update_globals(&c, &s);
    assert_eq!(n.grid.timers[2], 0);
    assert_eq!(n.grid.items[2], encode_item(false, true, &[3, 0]).unwrap());

    let manual = kitchen(|o| o.auto_start_cooking = false);
    s.grid.timers[2] = 0;
    let n = update_globals(&manual, &s);
    assert_eq!(n.grid.timers[2], 0);
    let n = update_globals(&c, &s);
    assert_eq!(n.grid.timers[2], 20);
}

#[test]
fn process_interaction_examples() {
    let c = cfg("grounded_coord_simple");
    let mut s = reset(&c, 0).unwrap();
    // agent 0 at (1,1) facing the pile of ingredient 0 at (0,1)
    place(&mut s, 0, 1, 1, Direction::Left);
    let (n, r) = process_interaction(&c, &s, 0).unwrap();
    assert_eq!(n.agents[0].inventory, encode_item(false, false, &[1, 0]).unwrap());
    assert_eq!(r.reward, 0.0);
    // agent 1 beside the button
    place(&mut s, 1, 7, 2, Direction::Right);
    let (n, r) = process_interaction(&c, &s, 1).unwrap();
    assert_eq!(n.grid.timers[n.grid.idx(Pos::new(8, 2))], 10);
    assert_eq!(r.reward, -2.0);
    assert!(process_interaction(&c, &s, 5).is_err());
}

#[test]
fn step_is_pure() {
    let c = cfg("counter_circuit");
    let s = reset(&c, 9).unwrap();
    let snapshot = s.clone();
    let a = step(&c, &s, &[Action::Right, Action::Left]).unwrap();
    let b = step(&c, &s, &[Action::Right, Action::Left]).unwrap();
    assert_eq!(s, snapshot);
    assert_eq!(a, b);
}

#[test]
fn state_json_round_trip() {
    let c = cfg_with("cramped_room_v2", |o| {
        o.other_play_symmetries = Some(crate::IngredientPermutation::all_over_subset(2, &[0, 1]));
    });
    let s = reset(&c, 4).unwrap();
    let json = s.to_json();
    let back: GameState = serde_json::from_str(&json).unwrap();
    assert_eq!(back, s);
    assert_eq!(back.hash_hex(), s.hash_hex());
    // canonical field order
    let keys: Vec<&str> = [
        "\"grid\"",
        "\"agents\"",
        "\"t\"",
        "\"recipe\"",
        "\"perms\"",
        "\"delivered_signal\"",
        "\"rng\"",
    ]
    .to_vec();
    let mut last = 0;
    for k in keys {
        let at = json.find(k).unwrap();
        assert!(at >= last, "{k}");
        last = at;
    }
}
