//! Settings resolution: defaults, then config files, then flags.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context};
use overcooked_core::policy::PolicySpec;
use overcooked_core::{builtin, parse_layout, EnvConfig, EnvOptions, Layout};
use serde::{Deserialize, Serialize};

use crate::Global;

/// Shape of a `--config` TOML file. Every key is optional.
///
/// ```toml
/// layout = "coord_ring"
/// seed = 3
/// episodes = 100
/// policies = ["greedy", "random"]
/// jobs = 2
///
/// [env]
/// cook_time = 10
/// view_radius = 2
/// ```
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    layout: Option<String>,
    seed: Option<u64>,
    episodes: Option<usize>,
    view_radius: Option<usize>,
    policies: Option<Vec<String>>,
    jobs: Option<usize>,
    #[serde(default)]
    env: BTreeMap<String, toml::Value>,
}

/// Everything a subcommand needs besides its own flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub layout: String,
    pub seed: u64,
    pub episodes: Option<usize>,
    pub policies: Option<Vec<String>>,
    pub jobs: Option<usize>,
    /// Environment option overrides in application order; later entries win.
    pub env: Vec<(String, String)>,
}

pub const DEFAULT_LAYOUT: &str = "cramped_room";

fn split_override(arg: &str) -> Option<(String, String)> {
    let (k, v) = arg.split_once('=')?;
    Some((k.trim().to_string(), v.trim().to_string()))
}

impl Settings {
    pub fn resolve(g: &Global) -> anyhow::Result<Self> {
        let mut s = Settings {
            layout: DEFAULT_LAYOUT.to_string(),
            seed: 0,
            episodes: None,
            policies: None,
            jobs: None,
            env: Vec::new(),
        };
        let mut flag_env = Vec::new();
        for arg in &g.config {
            match split_override(arg) {
                Some(pair) => flag_env.push(pair),
                None => s.merge_file(Path::new(arg))?,
            }
        }
        s.env.extend(flag_env);
        if let Some(l) = &g.layout {
            s.layout = l.clone();
        }
        if let Some(v) = g.seed {
            s.seed = v;
        }
        if let Some(v) = g.episodes {
            s.episodes = Some(v);
        }
        if let Some(v) = &g.policies {
            s.policies = Some(v.clone());
        }
        if let Some(v) = g.jobs {
            s.jobs = Some(v);
        }
        if let Some(r) = g.view_radius {
            s.env.push(("view_radius".into(), r.to_string()));
        }
        if s.jobs == Some(0) {
            bail!("--jobs must be at least 1");
        }
        Ok(s)
    }

    fn merge_file(&mut self, path: &Path) -> anyhow::Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| {
            format!(
                "reading config file {} (use KEY=VALUE for a single option)",
                path.display()
            )
        })?;
        let f: FileConfig = toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))?;
        for (k, v) in f.env {
            let json = serde_json::to_string(&v).context("config value")?;
            self.env.push((k, json));
        }
        if let Some(r) = f.view_radius {
            self.env.push(("view_radius".into(), r.to_string()));
        }
        self.layout = f.layout.unwrap_or(std::mem::take(&mut self.layout));
        self.seed = f.seed.unwrap_or(self.seed);
        self.episodes = f.episodes.or(self.episodes);
        self.policies = f.policies.or(self.policies.take());
        self.jobs = f.jobs.or(self.jobs);
        Ok(())
    }

    pub fn episodes_or(&self, default: usize) -> anyhow::Result<usize> {
        match self.episodes.unwrap_or(default) {
            0 => bail!("--episodes must be at least 1"),
            n => Ok(n),
        }
    }

    pub fn env_config(&self) -> anyhow::Result<EnvConfig> {
        let layout = load_layout(&self.layout)?;
        EnvConfig::new(layout, EnvOptions::default())
            .and_then(|c| c.apply_overrides(&self.env))
            .context("invalid environment options")
    }

    /// Policy arguments, or `default` when none were given.
    pub fn policy_args(&self, default: &[&str]) -> Vec<String> {
        self.policies
            .clone()
            .unwrap_or_else(|| default.iter().map(|s| s.to_string()).collect())
    }

    /// Thread pool honouring `--jobs`; `None` leaves rayon's global pool.
    pub fn pool(&self) -> anyhow::Result<Option<rayon::ThreadPool>> {
        self.jobs
            .map(|n| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .context("starting worker threads")
            })
            .transpose()
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> anyhow::Result<R> {
        Ok(match self.pool()? {
            Some(p) => p.install(f),
            None => f(),
        })
    }
}

/// A built-in name or a path to a layout file.
pub fn load_layout(arg: &str) -> anyhow::Result<Layout> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return parse_layout(&text).with_context(|| format!("parsing {}", path.display()));
    }
    Ok(builtin(arg)?)
}

pub fn policy_specs(args: &[String]) -> anyhow::Result<Vec<PolicySpec>> {
    args.iter()
        .map(|a| PolicySpec::resolve(a).with_context(|| format!("policy {a:?}")))
        .collect()
}

/// One spec per seat: a single policy fills every seat.
pub fn seat_specs(args: &[String], seats: usize) -> anyhow::Result<Vec<PolicySpec>> {
    let specs = policy_specs(args)?;
    match specs.len() {
        1 => Ok(vec![specs[0].clone(); seats]),
        n if n == seats => Ok(specs),
        n => bail!("layout has {seats} seats but {n} policies were given"),
    }
}
