use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::layout::{parse_layout, serialize_layout, Layout, LayoutError};
use crate::observation::IngredientPermutation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("cook_time must be at least 1")]
    CookTime,
    #[error("max_steps must be at least 1")]
    MaxSteps,
    #[error("symmetry {index} is not a bijection on {num_ingredients} ingredients")]
    BadSymmetry { index: usize, num_ingredients: usize },
    #[error("other-play symmetry set is empty")]
    EmptySymmetries,
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("invalid config override: {0}")]
    Override(String),
}

/// Shaped reward magnitudes for recipe-aligned progress.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapedRewards {
    pub pot_placement: f32,
    pub plate_pickup: f32,
    pub dish_pickup: f32,
}

impl Default for ShapedRewards {
    fn default() -> Self {
        Self {
            pot_placement: 3.0,
            plate_pickup: 3.0,
            dish_pickup: 5.0,
        }
    }
}

/// Environment options. `layout` is shared; everything else is plain data.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub layout: Arc<Layout>,
    pub options: EnvOptions,
}

/// Every tunable besides the layout. Serializable so it can live in config
/// files, replay headers and session requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvOptions {
    pub view_radius: Option<usize>,
    pub random_agent_positions: bool,
    pub negative_rewards: bool,
    pub sample_recipe_on_delivery: bool,
    pub indicate_successful_delivery: bool,
    pub auto_start_cooking: bool,
    pub cook_time: u32,
    pub button_duration: u32,
    pub button_cost: f32,
    pub max_steps: u32,
    pub delivery_reward: f32,
    pub shaped_rewards: ShapedRewards,
    pub other_play_symmetries: Option<Vec<IngredientPermutation>>,
}

impl Default for EnvOptions {
    fn default() -> Self {
        Self {
            view_radius: None,
            random_agent_positions: false,
            negative_rewards: false,
            sample_recipe_on_delivery: false,
            indicate_successful_delivery: false,
            auto_start_cooking: true,
            cook_time: 20,
            button_duration: 10,
            button_cost: -2.0,
            max_steps: 400,
            delivery_reward: 20.0,
            shaped_rewards: ShapedRewards::default(),
            other_play_symmetries: None,
        }
    }
}

/// Serialized form used in replay headers and digests: layout travels as DSL text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub layout: String,
    pub options: EnvOptions,
}

impl EnvConfig {
    pub fn new(layout: Layout, options: EnvOptions) -> Result<Self, ConfigError> {
        let cfg = Self {
            layout: Arc::new(layout),
            options,
        };
        cfg.check()?;
        Ok(cfg)
    }

    /// Default options on a built-in layout.
    pub fn builtin(name: &str) -> Result<Self, ConfigError> {
        Self::new(crate::layout::builtin(name)?, EnvOptions::default())
    }

    pub fn with_options(&self, options: EnvOptions) -> Result<Self, ConfigError> {
        let cfg = Self {
            layout: Arc::clone(&self.layout),
            options,
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        let o = &self.options;
        if o.cook_time < 1 {
            return Err(ConfigError::CookTime);
        }
        if o.max_steps < 1 {
            return Err(ConfigError::MaxSteps);
        }
        if let Some(sym) = &o.other_play_symmetries {
            if sym.is_empty() {
                return Err(ConfigError::EmptySymmetries);
            }
            for (index, p) in sym.iter().enumerate() {
                if p.len() != self.layout.num_ingredients || !p.is_bijection() {
                    return Err(ConfigError::BadSymmetry {
                        index,
                        num_ingredients: self.layout.num_ingredients,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn num_agents(&self) -> usize {
        self.layout.num_agents()
    }

    pub fn num_ingredients(&self) -> usize {
        self.layout.num_ingredients
    }

    pub fn record(&self) -> ConfigRecord {
        ConfigRecord {
            layout: serialize_layout(&self.layout),
            options: self.options.clone(),
        }
    }

    pub fn from_record(record: &ConfigRecord) -> Result<Self, ConfigError> {
        Self::new(parse_layout(&record.layout)?, record.options.clone())
    }

    /// Hex SHA-256 of the canonical JSON config record.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(&self.record()).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Applies `key=value` overrides (values parsed as JSON, bare words as strings).
    pub fn apply_overrides(&self, pairs: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut value = serde_json::to_value(&self.options).expect("options serialize");
        let map = value.as_object_mut().expect("options are an object");
        for (k, v) in pairs {
            if !map.contains_key(k) {
                return Err(ConfigError::Override(format!("unknown option {k:?}")));
            }
            let parsed = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.clone()));
            map.insert(k.clone(), parsed);
        }
        let options: EnvOptions = serde_json::from_value(value).map_err(|e| ConfigError::Override(e.to_string()))?;
        self.with_options(options)
    }
}
