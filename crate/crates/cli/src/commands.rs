//! Batch subcommands. Each resolves its inputs first (user errors), then
//! computes (internal errors), then writes every output at once.

use std::path::Path;

use anyhow::{anyhow, Context};
use overcooked_core::button_game::{run_experiment, ButtonGameConfig, ButtonGameReport, EpsilonSchedule, IqlParams};
use overcooked_core::eval::{
    collect_buffer, crossplay, episode_seed, expected_buffer_len, rollout as run_rollout, verify_replay_file,
    write_replay, BufferEntry, CrossPlayMatrix, CrossPlayParams, Trajectory, XpPairing,
};
use overcooked_core::policy::{Policy, PolicySpec};
use overcooked_core::render::{encode_animation, frame, render_ascii};
use overcooked_core::{reset, validate, EnvConfig, EnvOptions, GameState};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{emit, emit_matrix, to_json, write_atomic, Staged};
use crate::settings::{load_layout, policy_specs, seat_specs, Settings};
use crate::{Classify, Failure, Format, Outcome};

fn build(specs: &[PolicySpec]) -> anyhow::Result<Vec<Box<dyn Policy>>> {
    specs.iter().map(|s| s.build().context("building policy")).collect()
}

fn user_error(msg: String) -> Failure {
    Failure::User(anyhow!(msg))
}

fn replay_bytes(t: &Trajectory) -> Vec<u8> {
    let mut out = Vec::new();
    write_replay(t, &mut out).expect("writing to memory");
    out
}

#[derive(Serialize)]
struct RolloutSummary<'a> {
    layout: &'a str,
    seed: u64,
    policies: Vec<String>,
    episode_seeds: Vec<u64>,
    returns: Vec<f32>,
    mean_return: f64,
    steps: usize,
}

pub fn rollout(s: &Settings, out: Option<&Path>) -> Outcome {
    let config = s.env_config().user()?;
    let specs = seat_specs(&s.policy_args(&["random"]), config.num_agents()).user()?;
    build(&specs).user()?;
    let episodes = s.episodes_or(1).user()?;
    let single = out.is_some_and(|p| p.extension().is_some_and(|e| e == "jsonl"));
    if single && episodes != 1 {
        return Err(user_error(format!(
            "a .jsonl --out holds one episode; give a directory for {episodes}"
        )));
    }

    let seeds: Vec<u64> = (0..episodes).map(|e| episode_seed(s.seed, e)).collect();
    let trajs = s
        .install(|| {
            seeds
                .par_iter()
                .map(|&seed| run_rollout(&config, &mut build(&specs)?, seed, None).map_err(anyhow::Error::from))
                .collect::<anyhow::Result<Vec<_>>>()
        })
        .user()?
        .internal()?;

    let returns: Vec<f32> = trajs.iter().map(Trajectory::total_reward).collect();
    let summary = RolloutSummary {
        layout: &config.layout.name,
        seed: s.seed,
        policies: specs.iter().map(PolicySpec::label).collect(),
        mean_return: returns.iter().map(|&r| r as f64).sum::<f64>() / episodes as f64,
        episode_seeds: seeds,
        returns,
        steps: trajs.iter().map(Trajectory::len).sum(),
    };
    match out {
        Some(path) if single => write_atomic(path, &replay_bytes(&trajs[0])).user()?,
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("creating {}", dir.display()))
                .user()?;
            let mut staged = Staged::default();
            for (e, t) in trajs.iter().enumerate() {
                staged
                    .add(&dir.join(format!("episode-{e:04}.jsonl")), &replay_bytes(t))
                    .user()?;
            }
            staged.add(&dir.join("summary.json"), &to_json(&summary)).user()?;
            staged.commit().user()?;
        }
        None => {}
    }
    emit(None, &to_json(&summary)).internal()
}

#[derive(Serialize)]
struct XpReport<'a> {
    layout: &'a str,
    seed: u64,
    #[serde(flatten)]
    matrix: &'a CrossPlayMatrix<f64>,
}

pub fn eval_xp(s: &Settings, out: Option<&Path>, unordered: bool) -> Outcome {
    let config = s.env_config().user()?;
    if config.num_agents() != 2 {
        return Err(user_error(format!(
            "cross-play needs a two-agent layout; {} has {}",
            config.layout.name,
            config.num_agents()
        )));
    }
    let labels = s.policy_args(&["greedy", "random"]);
    let population = build(&policy_specs(&labels).user()?).user()?;
    let params = CrossPlayParams {
        episodes: s.episodes_or(500).user()?,
        seed: s.seed,
        pairing: if unordered {
            XpPairing::Unordered
        } else {
            XpPairing::Ordered
        },
        jobs: s.jobs,
    };
    let m = crossplay::<f64>(&config, &population, labels, &params).internal()?;
    eprintln!(
        "SP {:.3} ± {:.3}  XP {:.3} ± {:.3}  gap {:.3}",
        m.sp_mean, m.sp_std, m.xp_mean, m.xp_std, m.gap
    );
    let report = XpReport {
        layout: &config.layout.name,
        seed: s.seed,
        matrix: &m,
    };
    emit_matrix(out, &m.to_csv(), &report).user()
}

#[derive(Serialize)]
struct BufferReport<'a> {
    layout: &'a str,
    seed: u64,
    population: &'a [String],
    rollouts: usize,
    horizon: u32,
    expected_len: usize,
    len: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    entries: Option<&'a [BufferEntry]>,
}

pub fn augment_collect(s: &Settings, out: Option<&Path>) -> Outcome {
    let config = s.env_config().user()?;
    let labels = s.policy_args(&["greedy", "random"]);
    let population = build(&policy_specs(&labels).user()?).user()?;
    let rollouts = s.episodes_or(1).user()?;
    let buffer = s
        .install(|| collect_buffer(&config, &population, rollouts, s.seed))
        .user()?
        .internal()?;
    let mut report = BufferReport {
        layout: &config.layout.name,
        seed: s.seed,
        population: &labels,
        rollouts,
        horizon: config.options.max_steps,
        expected_len: expected_buffer_len(population.len(), rollouts, config.options.max_steps),
        len: buffer.len(),
        entries: None,
    };
    if let Some(path) = out {
        report.entries = Some(&buffer.entries);
        write_atomic(path, &to_json(&report)).user()?;
        report.entries = None;
    }
    emit(None, &to_json(&report)).internal()
}

#[derive(Serialize)]
struct BgOutput<'a> {
    #[serde(flatten)]
    report: &'a ButtonGameReport<f64>,
    gap: f64,
}

pub fn button_game(
    s: &Settings,
    out: Option<&Path>,
    seeds: usize,
    buttons: usize,
    alpha: Option<f64>,
    epsilon: Option<f64>,
) -> Outcome {
    let config = ButtonGameConfig::new(buttons).user()?;
    if seeds == 0 {
        return Err(user_error("--seeds must be at least 1".into()));
    }
    let mut params = IqlParams::default();
    params.episodes = s.episodes_or(params.episodes).user()?;
    if let Some(a) = alpha {
        if !(a > 0.0 && a <= 1.0) {
            return Err(user_error(format!("--alpha must be in (0, 1], got {a}")));
        }
        params.alpha = a;
    }
    if let Some(e) = epsilon {
        if !(0.0..=1.0).contains(&e) {
            return Err(user_error(format!("--epsilon must be in [0, 1], got {e}")));
        }
        params.epsilon = EpsilonSchedule::Constant { epsilon: e };
    }
    let seed_list: Vec<u64> = (0..seeds as u64).map(|k| s.seed.wrapping_add(k)).collect();
    let report = s
        .install(|| run_experiment::<f64>(&config, &seed_list, &params))
        .user()?
        .internal()?;
    eprintln!(
        "SP {:.3}  XP {:.3}  best response column {:?}",
        report.sp_mean, report.xp_mean, report.br_column
    );
    let csv: String = report
        .matrix
        .iter()
        .map(|row| row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    let output = BgOutput {
        report: &report,
        gap: report.sp_mean - report.xp_mean,
    };
    emit_matrix(out, &csv, &output).user()
}

fn format_for(out: Option<&Path>, format: Option<Format>) -> Format {
    format.unwrap_or_else(|| match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        Some("gif") => Format::Gif,
        _ => Format::Ascii,
    })
}

pub fn render(s: &Settings, out: Option<&Path>, replay: Option<&Path>, format: Option<Format>) -> Outcome {
    let (config, states, scores) = match replay {
        Some(path) => {
            let traj = verify_replay_file(path)
                .with_context(|| format!("checking {}", path.display()))
                .user()?;
            let config = EnvConfig::from_record(&traj.config).user()?;
            let states = traj.states(&config).internal()?;
            let scores: Vec<f32> = std::iter::once(0.0)
                .chain(traj.steps.iter().scan(0.0, |acc, st| {
                    *acc += st.rewards.first().copied().unwrap_or(0.0);
                    Some(*acc)
                }))
                .collect();
            (config, states, scores)
        }
        None => {
            let config = s.env_config().user()?;
            let state: GameState = reset(&config, s.seed).user()?;
            (config, vec![state], vec![0.0])
        }
    };
    let bytes = match format_for(out, format) {
        Format::Ascii => states
            .iter()
            .map(|st| render_ascii(st, &config))
            .collect::<Vec<_>>()
            .join("\n")
            .into_bytes(),
        Format::Json => {
            let frames: Vec<_> = states
                .iter()
                .zip(&scores)
                .map(|(st, &sc)| frame(st, &config, sc, None))
                .collect();
            if replay.is_some() {
                to_json(&frames)
            } else {
                to_json(&frames[0])
            }
        }
        Format::Gif => {
            if out.is_none() {
                return Err(user_error("GIF output needs --out".into()));
            }
            let mut buf = Vec::new();
            encode_animation(&states, &config, &mut buf).user()?;
            buf
        }
    };
    emit(out, &bytes).user()
}

pub fn validate_layout(arg: &str) -> Outcome {
    let layout = load_layout(arg).user()?;
    let mut issues: Vec<String> = validate(&layout).into_iter().map(|i| i.to_string()).collect();
    if issues.is_empty() {
        if let Err(e) = EnvConfig::new(layout.clone(), EnvOptions::default()) {
            issues.push(e.to_string());
        }
    }
    if !issues.is_empty() {
        let list: String = issues.iter().map(|i| format!("\n  - {i}")).collect();
        return Err(user_error(format!("{arg}: {} issue(s):{list}", issues.len())));
    }
    println!(
        "ok: {} ({}x{}, {} agents, {} ingredients, {} recipes)",
        layout.name,
        layout.width,
        layout.height,
        layout.num_agents(),
        layout.num_ingredients,
        layout.recipes.len()
    );
    Ok(())
}

pub fn serve(addr: &str) -> Outcome {
    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .internal()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))
            .user()?;
        eprintln!("listening on http://{}", listener.local_addr().internal()?);
        overcooked_server::serve(listener).await.internal()
    })
}
