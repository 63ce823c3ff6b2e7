//! `overcooked`: one binary for rollouts, evaluation, the button game,
//! rendering, layout checks, the session server and terminal play.
//!
//! Exit codes: 0 success, 1 user error (bad flags, inputs or layouts),
//! 2 internal error.

mod commands;
mod output;
mod play;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "overcooked", version, about = "Overcooked coordination environment toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Precedence: flag > config file > default.
#[derive(Args, Debug, Default)]
pub struct Global {
    /// Built-in layout name or path to a layout file.
    #[arg(long, global = true)]
    pub layout: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub episodes: Option<usize>,
    /// Chebyshev view radius; also turns on fog in `play`.
    #[arg(long, global = true)]
    pub view_radius: Option<usize>,
    /// Comma-separated policy names or JSON policy files.
    #[arg(long, global = true, value_delimiter = ',')]
    pub policies: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// A TOML config file, or a single `KEY=VALUE` environment option. Repeatable.
    #[arg(long, global = true, value_name = "FILE|KEY=VALUE")]
    pub config: Vec<String>,
    /// Worker threads for episodes, matrix cells and seeds.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Play episodes and record replays (`--out x.jsonl` for one episode, a directory for several).
    Rollout,
    /// Cross-play matrix of a policy population with SP/XP/gap statistics.
    EvalXp {
        /// Aggregate (i, j) and (j, i) into one cross-play sample.
        #[arg(long)]
        unordered: bool,
    },
    /// Collect the start-state buffer: every tenth state of every pairing's rollouts.
    AugmentCollect,
    /// Train self-play pairs and a best response on the button game; emit the cross-play matrix.
    ButtonGame {
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long, default_value_t = 5)]
        buttons: usize,
        #[arg(long)]
        alpha: Option<f64>,
        /// Constant exploration rate.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Render a replay (or a layout's initial state) as ASCII, frame JSON or GIF.
    Render {
        /// Replay file; without it the initial state of `--layout` is rendered.
        replay: Option<PathBuf>,
        /// Defaults to the `--out` extension, else ascii.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Check a layout file or built-in name; exits 1 listing every problem.
    ValidateLayout { layout: String },
    /// Run the HTTP/WebSocket session server.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
    /// Play in the terminal: wasd or arrow names, e/space interact, enter to stay, r reset, q quit.
    Play {
        /// Seat you control; the others use `--policies`.
        #[arg(long, default_value_t = 0)]
        seat: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Ascii,
    Json,
    Gif,
}

/// An error with its exit code.
pub enum Failure {
    User(anyhow::Error),
    Internal(anyhow::Error),
}

pub type Outcome<T = ()> = Result<T, Failure>;

pub trait Classify<T> {
    fn user(self) -> Outcome<T>;
    fn internal(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn user(self) -> Outcome<T> {
        self.map_err(|e| Failure::User(e.into()))
    }

    fn internal(self) -> Outcome<T> {
        self.map_err(|e| Failure::Internal(e.into()))
    }
}

fn run(cli: Cli) -> Outcome {
    let s = settings::Settings::resolve(&cli.global).user()?;
    let out = cli.global.out.as_deref();
    if let Some(p) = out {
        output::check_parent(p).user()?;
    }
    match cli.command {
        Command::Rollout => commands::rollout(&s, out),
        Command::EvalXp { unordered } => commands::eval_xp(&s, out, unordered),
        Command::AugmentCollect => commands::augment_collect(&s, out),
        Command::ButtonGame {
            seeds,
            buttons,
            alpha,
            epsilon,
        } => commands::button_game(&s, out, seeds, buttons, alpha, epsilon),
        Command::Render { replay, format } => commands::render(&s, out, replay.as_deref(), format),
        Command::ValidateLayout { layout } => commands::validate_layout(&layout),
        Command::Serve { addr } => commands::serve(&addr),
        Command::Play { seat } => play::play(&s, out, seat),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::User(e))) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Ok(Err(Failure::Internal(e))) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
        // the panic hook already printed the message
        Err(_) => ExitCode::from(2),
    }
}
