//! Terminal play: one human seat against policies, one line per action.

use std::io::{self, BufRead, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::anyhow;
use overcooked_core::eval::write_replay;
use overcooked_core::Action;
use overcooked_server::{Seat, Session, SessionOptions};

use crate::output::write_atomic;
use crate::settings::{seat_specs, Settings};
use crate::{Classify, Failure, Outcome};

enum Input {
    Act(Action),
    Reset,
    Quit,
    Unknown,
}

fn parse(line: &str) -> Input {
    match line.trim().to_ascii_lowercase().as_str() {
        "w" | "up" => Input::Act(Action::Up),
        "s" | "down" => Input::Act(Action::Down),
        "a" | "left" => Input::Act(Action::Left),
        "d" | "right" => Input::Act(Action::Right),
        "e" | "interact" | "space" => Input::Act(Action::Interact),
        "" | "." | "stay" => Input::Act(Action::Stay),
        "r" | "reset" => Input::Reset,
        "q" | "quit" => Input::Quit,
        _ => Input::Unknown,
    }
}

fn draw(out: &mut impl Write, session: &Session, seat: usize) -> io::Result<()> {
    let f = session.frame_for(Some(seat));
    writeln!(out, "t {}/{}  score {}", f.t, f.max_steps, f.score)?;
    for row in &f.rows {
        writeln!(out, "{row}")?;
    }
    match &f.recipe {
        Some(r) => writeln!(out, "recipe {r:?}")?,
        None => writeln!(out, "recipe hidden")?,
    }
    if let Some(Some(me)) = f.agents.get(seat) {
        writeln!(
            out,
            "you: agent {seat} at ({},{}) holding {}",
            me.pos.x, me.pos.y, me.inventory_summary
        )?;
    }
    write!(out, "> ")?;
    out.flush()
}

pub fn play(s: &Settings, out: Option<&Path>, seat: usize) -> Outcome {
    let config = s.env_config().user()?;
    let n = config.num_agents();
    if seat >= n {
        return Err(Failure::User(anyhow!(
            "--seat {seat} does not exist; the layout has {n} seats"
        )));
    }
    let mut others = seat_specs(&s.policy_args(&["greedy"]), n - 1).user()?.into_iter();
    let seats = (0..n)
        .map(|i| {
            if i == seat {
                Seat::Human
            } else {
                Seat::Policy(others.next().expect("one spec per other seat"))
            }
        })
        .collect();
    let options = SessionOptions {
        fog: config.options.view_radius.is_some(),
        seed: s.seed,
        ..SessionOptions::default()
    };
    let mut session = Session::new("terminal".into(), config, seats, options)
        .map_err(anyhow::Error::msg)
        .user()?;
    session.connect(seat).internal()?;

    let mut stdout = io::stdout().lock();
    draw(&mut stdout, &session, seat).internal()?;
    for line in io::stdin().lock().lines() {
        let line = line.internal()?;
        match parse(&line) {
            Input::Quit => break,
            Input::Unknown => {
                write!(
                    stdout,
                    "unknown input {:?}: w/a/s/d move, e interact, enter stay, r reset, q quit\n> ",
                    line.trim()
                )
                .internal()?;
                stdout.flush().internal()?;
                continue;
            }
            Input::Reset => session.reset().internal()?,
            Input::Act(a) => match session.submit(seat, a, Instant::now()) {
                Ok(Some(tick)) if tick.done => {
                    writeln!(stdout, "episode over: score {}; r to play again", session.score()).internal()?
                }
                Ok(_) => {}
                Err(e) => writeln!(stdout, "{e}").internal()?,
            },
        }
        draw(&mut stdout, &session, seat).internal()?;
    }
    writeln!(stdout, "\nfinal score {}", session.score()).internal()?;
    if let Some(path) = out {
        let mut bytes = Vec::new();
        write_replay(&session.trajectory(), &mut bytes).internal()?;
        write_atomic(path, &bytes).user()?;
    }
    Ok(())
}
