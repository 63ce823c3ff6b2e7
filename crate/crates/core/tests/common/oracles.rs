#![allow(dead_code)]

use std::collections::HashMap;

use overcooked_core::layout::enumerate_recipes;
use overcooked_core::{Pos, SplitMix64};

/// Literal reading of the movement rule: while any cell is claimed by more than
/// one agent, every claimant goes back; afterwards any pair that exchanged cells
/// goes back too.
pub fn collisions_oracle(proposed: &[Pos], previous: &[Pos]) -> Vec<Pos> {
    let mut cur = proposed.to_vec();
    loop {
        let mut claims: HashMap<Pos, usize> = HashMap::new();
        for p in &cur {
            *claims.entry(*p).or_default() += 1;
        }
        let contested: Vec<usize> = (0..cur.len()).filter(|&i| claims[&cur[i]] > 1).collect();
        if contested.is_empty() {
            break;
        }
        for i in contested {
            cur[i] = previous[i];
        }
    }
    let swapped: Vec<usize> = (0..cur.len())
        .filter(|&i| {
            (0..cur.len()).any(|j| j != i && cur[i] == previous[j] && cur[j] == previous[i] && cur[i] != cur[j])
        })
        .collect();
    for i in swapped {
        cur[i] = previous[i];
    }
    cur
}

/// Cells within the grid reachable by one move (or staying) from `p`.
pub fn one_step_options(p: Pos, width: usize, height: usize) -> Vec<Pos> {
    let mut out = vec![p];
    if p.y > 0 {
        out.push(Pos::new(p.x, p.y - 1));
    }
    if p.y + 1 < height {
        out.push(Pos::new(p.x, p.y + 1));
    }
    if p.x > 0 {
        out.push(Pos::new(p.x - 1, p.y));
    }
    if p.x + 1 < width {
        out.push(Pos::new(p.x + 1, p.y));
    }
    out
}

/// Every placement of `n` distinct agents on a `w x h` grid.
pub fn placements(n: usize, w: usize, h: usize) -> Vec<Vec<Pos>> {
    let cells: Vec<Pos> = (0..h).flat_map(|y| (0..w).map(move |x| Pos::new(x, y))).collect();
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(cells: &[Pos], n: usize, cur: &mut Vec<Pos>, out: &mut Vec<Vec<Pos>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for &c in cells {
            if !cur.contains(&c) {
                cur.push(c);
                rec(cells, n, cur, out);
                cur.pop();
            }
        }
    }
    rec(&cells, n, &mut cur, &mut out);
    out
}

/// Cartesian product of per-agent option lists.
pub fn product(options: &[Vec<Pos>]) -> Vec<Vec<Pos>> {
    let mut out = vec![Vec::new()];
    for opts in options {
        let mut next = Vec::with_capacity(out.len() * opts.len());
        for prefix in &out {
            for &o in opts {
                let mut v = prefix.clone();
                v.push(o);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Independent oracle: every (plated, cooked, counts) triple that is a legal
/// item, mapped to its packed code `plated | cooked << 1 | sum c_i << (2 + 2i)`.
pub fn item_oracle(n: usize) -> HashMap<u32, (bool, bool, Vec<u8>)> {
    let mut out = HashMap::new();
    let mut counts = vec![0u8; n];
    loop {
        let total: u32 = counts.iter().map(|&c| c as u32).sum();
        if total <= 3 {
            for plated in [false, true] {
                for cooked in [false, true] {
                    if cooked && total == 0 {
                        continue;
                    }
                    let mut code = plated as u32 | (cooked as u32) << 1;
                    for (i, &c) in counts.iter().enumerate() {
                        code += (c as u32) << (2 + 2 * i);
                    }
                    out.insert(code, (plated, cooked, counts.clone()));
                }
            }
        }
        // odometer over 0..=3 per digit
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            counts[i] += 1;
            if counts[i] <= 3 {
                break;
            }
            counts[i] = 0;
            i += 1;
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// A random well-formed document: non-walkable border with the mandatory
/// stations on it, random interior, optional explicit recipe subset.
pub fn generated_document(seed: u64) -> String {
    let mut rng = SplitMix64::new(seed);
    let w = 4 + rng.index(7);
    let h = 4 + rng.index(5);
    let piles = 1 + rng.index(4);
    let border = ['W', 'W', 'W', 'P', 'X', 'B', 'R', 'L'];
    let interior = [' ', ' ', ' ', ' ', 'W', 'A', 'P'];
    let mut g = vec![vec![' '; w]; h];
    for (y, row) in g.iter_mut().enumerate() {
        for (x, c) in row.iter_mut().enumerate() {
            let edge = x == 0 || y == 0 || x + 1 == w || y + 1 == h;
            *c = if edge {
                if rng.index(5) == 0 {
                    char::from(b'0' + rng.index(piles) as u8)
                } else {
                    border[rng.index(border.len())]
                }
            } else {
                interior[rng.index(interior.len())]
            };
        }
    }
    // mandatory content at fixed spots so every document is structurally valid
    g[0][1] = 'P';
    g[0][2] = 'X';
    g[h - 1][1] = 'B';
    for i in 0..piles {
        g[1 + i % (h - 2)][if i < h - 2 { 0 } else { w - 1 }] = char::from(b'0' + i as u8);
    }
    g[1][1] = 'A';
    let mut text: String = g.iter().map(|r| r.iter().collect::<String>() + "\n").collect();
    if rng.index(2) == 0 {
        let all = enumerate_recipes(&(0..piles).collect::<Vec<_>>());
        let keep: Vec<String> = all
            .iter()
            .filter(|_| rng.index(2) == 0)
            .map(|r| r.to_string())
            .collect();
        if !keep.is_empty() {
            text.push_str(&format!("\nrecipes={}\n", keep.join(";")));
        }
    }
    text
}
