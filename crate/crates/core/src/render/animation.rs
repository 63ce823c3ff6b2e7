//! GIF export with a fixed 16-colour palette and square tiles.

use std::io::{self, Write};
use std::path::Path;

use crate::env::{EnvConfig, EnvError, GameState};
use crate::eval::Trajectory;
use crate::grid::StaticCell;
use crate::item::ItemCode;

/// Tile edge in pixels.
pub const TILE: usize = 16;

#[rustfmt::skip]
pub const PALETTE: [[u8; 3]; 16] = [
    [0x10, 0x10, 0x10], // 0 outline / unknown
    [0xD8, 0xD0, 0xB8], // 1 floor
    [0x8B, 0x5A, 0x2B], // 2 counter
    [0x3C, 0xB3, 0x71], // 3 delivery
    [0x50, 0x50, 0x58], // 4 pot
    [0x7B, 0x3F, 0xA0], // 5 recipe indicator
    [0xD0, 0x40, 0xA0], // 6 button indicator
    [0xF4, 0xF4, 0xF4], // 7 plate
    [0xF0, 0xC0, 0x30], // 8 ingredient 0, 6, ...
    [0xE0, 0x40, 0x30], // 9 ingredient 1, 7, ...
    [0x40, 0x90, 0x40], // 10 ingredient 2, 8, ...
    [0xF0, 0x80, 0x20], // 11 ingredient 3, 9
    [0x90, 0x60, 0x30], // 12 ingredient 4
    [0x30, 0xB0, 0xC0], // 13 ingredient 5
    [0x28, 0x58, 0xD8], // 14 even agents
    [0xC8, 0x20, 0x20], // 15 odd agents
];

const OUTLINE: u8 = 0;
const PLATE: u8 = 7;

fn ingredient_color(i: usize) -> u8 {
    8 + (i % 6) as u8
}

fn cell_color(c: StaticCell) -> u8 {
    match c {
        StaticCell::Empty => 1,
        StaticCell::Wall => 2,
        StaticCell::Delivery => 3,
        StaticCell::Pot => 4,
        StaticCell::RecipeIndicator => 5,
        StaticCell::ButtonRecipeIndicator => 6,
        StaticCell::PlatePile => PLATE,
        StaticCell::IngredientPile(i) => ingredient_color(i as usize),
    }
}

struct Canvas {
    width: usize,
    pixels: Vec<u8>,
}

impl Canvas {
    fn rect(&mut self, x0: usize, y0: usize, w: usize, h: usize, color: u8) {
        for y in y0..y0 + h {
            let row = y * self.width;
            self.pixels[row + x0..row + x0 + w].fill(color);
        }
    }
}

/// Draws an item as a plate disc (if plated) with up to three ingredient dots.
fn draw_item(cv: &mut Canvas, px: usize, py: usize, item: ItemCode, ni: usize) {
    if item.is_empty() {
        return;
    }
    if item.is_plated() {
        cv.rect(px + 3, py + 3, TILE - 6, TILE - 6, PLATE);
    }
    let mut slot = 0;
    for i in 0..ni {
        for _ in 0..item.count(i) {
            let x = px + 4 + 3 * slot;
            cv.rect(x, py + 6, 2, 4, ingredient_color(i));
            slot += 1;
        }
    }
    if item.is_cooked() {
        cv.rect(px + 4, py + 11, TILE - 8, 1, OUTLINE);
    }
}

fn draw_state(state: &GameState, config: &EnvConfig) -> Vec<u8> {
    let g = &state.grid;
    let ni = config.num_ingredients();
    let width = g.width * TILE;
    let mut cv = Canvas {
        width,
        pixels: vec![OUTLINE; width * g.height * TILE],
    };
    for idx in 0..g.statics.len() {
        let p = g.pos(idx);
        let (px, py) = (p.x * TILE, p.y * TILE);
        let st = g.statics[idx];
        cv.rect(px + 1, py + 1, TILE - 2, TILE - 2, cell_color(st));
        draw_item(&mut cv, px, py, g.items[idx], ni);
        let timer = g.timers[idx];
        if timer > 0 {
            // progress bar along the bottom edge, one pixel per remaining tick (capped)
            let len = (timer as usize).min(TILE - 4);
            cv.rect(px + 2, py + TILE - 3, len, 1, PLATE);
        }
        if st == StaticCell::RecipeIndicator || (st == StaticCell::ButtonRecipeIndicator && timer > 0) {
            for (k, i) in state.recipe.ingredients().into_iter().enumerate() {
                cv.rect(px + 3 + 4 * k, py + 3, 2, 2, ingredient_color(i));
            }
        }
    }
    for (i, a) in state.agents.iter().enumerate() {
        let (px, py) = (a.pos.x * TILE, a.pos.y * TILE);
        let color = 14 + (i % 2) as u8;
        cv.rect(px + 2, py + 2, TILE - 4, TILE - 4, color);
        // facing marker on the edge the agent looks at
        let (dx, dy) = a.dir.delta();
        let mx = (px as isize + 6 + dx * 5) as usize;
        let my = (py as isize + 6 + dy * 5) as usize;
        cv.rect(mx, my, 4, 4, OUTLINE);
        draw_item(&mut cv, px, py, a.inventory, ni);
    }
    cv.pixels
}

/// Encodes one frame per state (initial state first) into `out`.
pub fn encode_animation(states: &[GameState], config: &EnvConfig, out: impl Write) -> io::Result<usize> {
    let Some(first) = states.first() else {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "no states to render"));
    };
    let w = first.grid.width * TILE;
    let h = first.grid.height * TILE;
    let (w16, h16) = match (u16::try_from(w), u16::try_from(h)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return Err(io::Error::new(io::ErrorKind::InvalidInput, "grid too large for GIF")),
    };
    let palette: Vec<u8> = PALETTE.iter().flatten().copied().collect();
    let to_io = |e: gif::EncodingError| io::Error::other(e.to_string());
    let mut enc = gif::Encoder::new(out, w16, h16, &palette).map_err(to_io)?;
    enc.set_repeat(gif::Repeat::Infinite).map_err(to_io)?;
    for s in states {
        let mut frame = gif::Frame::from_indexed_pixels(w16, h16, draw_state(s, config), None);
        frame.delay = 10;
        enc.write_frame(&frame).map_err(to_io)?;
    }
    enc.into_inner().map_err(to_io)?;
    Ok(states.len())
}

/// Writes the trajectory as an animated GIF (atomically); returns the frame count.
pub fn export_animation(traj: &Trajectory, config: &EnvConfig, path: &Path) -> io::Result<usize> {
    let states = traj
        .states(config)
        .map_err(|e: EnvError| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    let n = encode_animation(&states, config, io::BufWriter::new(tmp.as_file()))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::reset;
    use crate::eval::{rollout, StepRecord};
    use crate::policy::{Policy, RandomPolicy};

    fn count_frames(bytes: &[u8]) -> usize {
        let mut opts = gif::DecodeOptions::new();
        opts.set_color_output(gif::ColorOutput::Indexed);
        let mut dec = opts.read_info(bytes).unwrap();
        let mut n = 0;
        while dec.read_next_frame().unwrap().is_some() {
            n += 1;
        }
        n
    }

    #[test]
    fn one_frame_per_state_and_deterministic() {
        let c = EnvConfig::builtin("cramped_room")
            .unwrap()
            .with_options(crate::env::EnvOptions {
                max_steps: 12,
                ..Default::default()
            })
            .unwrap();
        let mut ps: Vec<Box<dyn Policy>> = vec![Box::new(RandomPolicy), Box::new(RandomPolicy)];
        let t = rollout(&c, &mut ps, 2, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.gif");
        let b = dir.path().join("b.gif");
        assert_eq!(export_animation(&t, &c, &a).unwrap(), 13);
        export_animation(&t, &c, &b).unwrap();
        let bytes = std::fs::read(&a).unwrap();
        assert_eq!(bytes, std::fs::read(&b).unwrap());
        assert_eq!(count_frames(&bytes), 13);
    }

    #[test]
    fn empty_trajectory_single_frame() {
        let c = EnvConfig::builtin("cramped_room").unwrap();
        let s = reset(&c, 0).unwrap();
        let t = Trajectory {
            config: c.record(),
            digest: c.digest(),
            seed: 0,
            final_hash: s.hash_hex(),
            initial_state: s,
            steps: Vec::<StepRecord>::new(),
        };
        let mut buf = Vec::new();
        let states = t.states(&c).unwrap();
        assert_eq!(encode_animation(&states, &c, &mut buf).unwrap(), 1);
        assert_eq!(count_frames(&buf), 1);
    }
}
