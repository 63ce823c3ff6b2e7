//! Deterministic OvercookedV2 simulator.
//!
//! The crate covers the environment state machine ([`env`]), the layout DSL
//! ([`layout`]), per-agent observations with other-play permutations
//! ([`observation`]), baseline policies ([`policy`]), the Button Game toy
//! experiment ([`button_game`]), the cross-play / state-augmentation harness
//! ([`eval`]) and rendering ([`render`]).
//!
//! Numeric outputs (observations, Q-tables, statistics) are generic over
//! [`Scalar`]; the `*F32` / `*F64` aliases below fix the common choices.

pub mod button_game;
pub mod env;
pub mod eval;
pub mod grid;
pub mod item;
pub mod layout;
pub mod observation;
pub mod policy;
pub mod render;
pub mod rng;
pub mod scalar;

pub use env::{
    check_state, move_agents, process_interaction, reset, reset_to, resolve_collisions, step, step_in_place,
    update_globals, Action, AgentState, EnvConfig, EnvError, EnvOptions, Event, GameState, StepOutcome,
};
pub use grid::{Direction, Grid, Pos, StaticCell};
pub use item::{decode_item, encode_item, ItemCode, ItemError, ItemParts};
pub use layout::{builtin, matches_recipe, parse_layout, serialize_layout, validate, Layout, Recipe};
pub use observation::{observe, permute, IngredientPermutation, ObsSchema, ObsTensor};
pub use rng::SplitMix64;
pub use scalar::Scalar;

pub type ObsTensorF32 = observation::ObsTensor<f32>;
pub type ObsTensorF64 = observation::ObsTensor<f64>;
pub type QTablesF32 = button_game::QTables<f32>;
pub type QTablesF64 = button_game::QTables<f64>;
pub type CrossPlayMatrixF32 = eval::CrossPlayMatrix<f32>;
pub type CrossPlayMatrixF64 = eval::CrossPlayMatrix<f64>;
