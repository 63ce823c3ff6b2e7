//! Layout DSL: parsing, serialization, validation and the built-in registry.
//!
//! A layout document is a block of grid lines, optionally followed by a blank
//! line and `key=value` directives:
//!
//! ```text
//! WWPWW
//! 0A A1
//! L   R
//! WBWXW
//!
//! recipes=0,0,1;0,1,1
//! ```
//!
//! | char | meaning |
//! |------|---------|
//! | `W` | wall / counter |
//! | `A` | agent spawn (floor) |
//! | `X` | delivery station |
//! | `B` | plate pile |
//! | `P` | pot |
//! | `R` | recipe indicator |
//! | `L` | button recipe indicator |
//! | `0`-`9` | ingredient pile |
//! | space | floor |
//!
//! Agents are numbered in row-major order of their `A` cells. Without a
//! `recipes` directive every multiset of three present ingredients is allowed.

mod builtin;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::grid::{Direction, Pos, StaticCell};
use crate::item::{ItemCode, MAX_INGREDIENTS};

pub use builtin::{builtin, builtin_names, builtin_text, BUILTIN_NAMES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("unknown character {ch:?} at row {row}, column {col}")]
    UnknownChar { ch: char, row: usize, col: usize },
    #[error("layout grid is empty")]
    EmptyGrid,
    #[error("layout has no agents")]
    NoAgents,
    #[error("layout has no {0}")]
    MissingStation(&'static str),
    #[error("border cell ({x}, {y}) is walkable")]
    OpenBorder { x: usize, y: usize },
    #[error("recipe {recipe} uses ingredient {ingredient} which has no pile")]
    AbsentIngredient { recipe: String, ingredient: usize },
    #[error("invalid recipe {0:?}: recipes are exactly three ingredient indices")]
    BadRecipe(String),
    #[error("duplicate recipe {0}")]
    DuplicateRecipe(String),
    #[error("malformed directive {0:?}")]
    BadDirective(String),
    #[error("unknown directive {0:?}")]
    UnknownDirective(String),
    #[error("unknown layout {name:?}; available: {}", available.join(", "))]
    UnknownBuiltin { name: String, available: Vec<String> },
}

/// A target dish: a multiset of exactly three ingredients, stored as packed counts.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Recipe(ItemCode);

impl Recipe {
    /// Builds a recipe from three ingredient indices, e.g. `[0, 0, 1]`.
    pub fn from_ingredients(ingredients: &[usize]) -> Result<Recipe, LayoutError> {
        let describe = || format!("{ingredients:?}");
        if ingredients.len() != 3 || ingredients.iter().any(|&i| i >= MAX_INGREDIENTS) {
            return Err(LayoutError::BadRecipe(describe()));
        }
        let mut code = ItemCode::EMPTY;
        for &i in ingredients {
            code = code
                .merge_counts(ItemCode::ingredient(i))
                .ok_or_else(|| LayoutError::BadRecipe(describe()))?;
        }
        Ok(Recipe(code))
    }

    pub fn from_counts(counts: &[u8]) -> Result<Recipe, LayoutError> {
        let mut ingredients = Vec::new();
        for (i, &c) in counts.iter().enumerate() {
            ingredients.extend(std::iter::repeat_n(i, c as usize));
        }
        Recipe::from_ingredients(&ingredients)
    }

    /// Packed counts in item encoding (no flags).
    #[inline]
    pub fn code(self) -> ItemCode {
        self.0
    }

    #[inline]
    pub fn count(self, i: usize) -> u8 {
        self.0.count(i)
    }

    pub fn counts(self, num_ingredients: usize) -> Vec<u8> {
        self.0.counts(num_ingredients)
    }

    /// Sorted ingredient indices, e.g. `[0, 0, 1]`.
    pub fn ingredients(self) -> Vec<usize> {
        (0..MAX_INGREDIENTS)
            .flat_map(|i| std::iter::repeat_n(i, self.count(i) as usize))
            .collect()
    }

    /// True iff `item` is a plated, cooked dish with exactly these counts.
    #[inline]
    pub fn matches(self, item: ItemCode) -> bool {
        item.is_dish() && item.count_bits() == self.0.count_bits()
    }
}

pub fn matches_recipe(item: ItemCode, recipe: Recipe) -> bool {
    recipe.matches(item)
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.ingredients().iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl fmt::Debug for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Recipe[{self}]")
    }
}

impl Serialize for Recipe {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.ingredients().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Recipe {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        Recipe::from_ingredients(&v).map_err(serde::de::Error::custom)
    }
}

/// All multisets of size three over `present`, in lexicographic order of sorted index triples.
pub fn enumerate_recipes(present: &[usize]) -> Vec<Recipe> {
    let mut sorted = present.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut out = Vec::new();
    for (a, &i) in sorted.iter().enumerate() {
        for (b, &j) in sorted.iter().enumerate().skip(a) {
            for &k in sorted.iter().skip(b) {
                out.push(Recipe::from_ingredients(&[i, j, k]).expect("valid triple"));
            }
        }
    }
    out
}

/// Parsed static map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub cells: Vec<StaticCell>,
    pub spawns: Vec<Pos>,
    /// One past the highest pile index present.
    pub num_ingredients: usize,
    pub recipes: Vec<Recipe>,
}

impl Layout {
    #[inline]
    pub fn idx(&self, p: Pos) -> usize {
        p.y * self.width + p.x
    }

    #[inline]
    pub fn cell(&self, p: Pos) -> StaticCell {
        self.cells[self.idx(p)]
    }

    pub fn num_agents(&self) -> usize {
        self.spawns.len()
    }

    /// Ingredient indices that have a pile, ascending.
    pub fn present_ingredients(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .cells
            .iter()
            .filter_map(|c| match c {
                StaticCell::IngredientPile(i) => Some(*i as usize),
                _ => None,
            })
            .collect();
        set.into_iter().collect()
    }

    pub fn default_recipes(&self) -> Vec<Recipe> {
        enumerate_recipes(&self.present_ingredients())
    }

    /// Floor cells reachable from `start` (inclusive), in BFS order.
    pub fn reachable_floor(&self, start: Pos) -> Vec<Pos> {
        let mut seen = vec![false; self.cells.len()];
        let mut out = Vec::new();
        if !self.cell(start).is_walkable() {
            return out;
        }
        let mut queue = VecDeque::from([start]);
        seen[self.idx(start)] = true;
        while let Some(p) = queue.pop_front() {
            out.push(p);
            for d in Direction::ALL {
                if let Some(q) = p.step(d, self.width, self.height) {
                    let i = self.idx(q);
                    if !seen[i] && self.cells[i].is_walkable() {
                        seen[i] = true;
                        queue.push_back(q);
                    }
                }
            }
        }
        out
    }

    /// Non-floor cells orthogonally adjacent to any cell of `region`.
    pub fn adjacent_stations(&self, region: &[Pos]) -> BTreeSet<Pos> {
        let mut out = BTreeSet::new();
        for &p in region {
            for d in Direction::ALL {
                if let Some(q) = p.step(d, self.width, self.height) {
                    if !self.cell(q).is_walkable() {
                        out.insert(q);
                    }
                }
            }
        }
        out
    }

    pub fn rows(&self) -> Vec<String> {
        let mut rows: Vec<String> = self
            .cells
            .chunks(self.width)
            .map(|r| r.iter().map(|c| c.glyph()).collect())
            .collect();
        for s in &self.spawns {
            let row: &mut String = &mut rows[s.y];
            let mut chars: Vec<char> = row.chars().collect();
            chars[s.x] = 'A';
            *row = chars.into_iter().collect();
        }
        rows
    }
}

/// Parses a layout document. The name defaults to `"custom"` unless a `name=` directive is given.
pub fn parse_layout(text: &str) -> Result<Layout, LayoutError> {
    let mut lines = text.lines().peekable();
    // Leading blank lines (e.g. from a triple-quoted string) are skipped.
    while lines.peek().is_some_and(|l| l.trim().is_empty()) {
        lines.next();
    }
    let mut grid_lines = Vec::new();
    for line in lines.by_ref() {
        if line.trim().is_empty() {
            break;
        }
        grid_lines.push(line.trim_end_matches('\r'));
    }
    let mut name = None;
    let mut recipe_spec = None;
    for line in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| LayoutError::BadDirective(line.to_string()))?;
        match key.trim() {
            "recipes" => recipe_spec = Some(value.trim().to_string()),
            "name" => name = Some(value.trim().to_string()),
            other => return Err(LayoutError::UnknownDirective(other.to_string())),
        }
    }
    if grid_lines.is_empty() {
        return Err(LayoutError::EmptyGrid);
    }

    let width = grid_lines.iter().map(|l| l.chars().count()).max().unwrap_or(0);
    let height = grid_lines.len();
    let mut cells = Vec::with_capacity(width * height);
    let mut spawns = Vec::new();
    for (row, line) in grid_lines.iter().enumerate() {
        let mut n = 0;
        for (col, ch) in line.chars().enumerate() {
            n += 1;
            if ch == 'A' {
                spawns.push(Pos::new(col, row));
                cells.push(StaticCell::Empty);
                continue;
            }
            let cell = StaticCell::from_glyph(ch).ok_or(LayoutError::UnknownChar { ch, row, col })?;
            cells.push(cell);
        }
        cells.extend(std::iter::repeat_n(StaticCell::Empty, width - n));
    }

    let num_ingredients = cells
        .iter()
        .filter_map(|c| match c {
            StaticCell::IngredientPile(i) => Some(*i as usize + 1),
            _ => None,
        })
        .max()
        .unwrap_or(0);

    let mut layout = Layout {
        name: name.unwrap_or_else(|| "custom".to_string()),
        width,
        height,
        cells,
        spawns,
        num_ingredients,
        recipes: Vec::new(),
    };

    layout.recipes = match recipe_spec {
        Some(spec) => parse_recipes(&spec)?,
        None => layout.default_recipes(),
    };
    check_structure(&layout)?;
    Ok(layout)
}

fn parse_recipes(spec: &str) -> Result<Vec<Recipe>, LayoutError> {
    let mut out: Vec<Recipe> = Vec::new();
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let idx: Result<Vec<usize>, _> = part.split(',').map(|s| s.trim().parse::<usize>()).collect();
        let idx = idx.map_err(|_| LayoutError::BadRecipe(part.to_string()))?;
        let recipe = Recipe::from_ingredients(&idx)?;
        if out.contains(&recipe) {
            return Err(LayoutError::DuplicateRecipe(recipe.to_string()));
        }
        out.push(recipe);
    }
    Ok(out)
}

/// Structural invariants enforced at parse time.
fn check_structure(layout: &Layout) -> Result<(), LayoutError> {
    if layout.width == 0 || layout.height == 0 {
        return Err(LayoutError::EmptyGrid);
    }
    if layout.spawns.is_empty() {
        return Err(LayoutError::NoAgents);
    }
    let has = |pred: fn(&StaticCell) -> bool| layout.cells.iter().any(pred);
    if !has(|c| matches!(c, StaticCell::Delivery)) {
        return Err(LayoutError::MissingStation("delivery station"));
    }
    if !has(|c| matches!(c, StaticCell::Pot)) {
        return Err(LayoutError::MissingStation("pot"));
    }
    if !has(|c| matches!(c, StaticCell::PlatePile)) {
        return Err(LayoutError::MissingStation("plate pile"));
    }
    if !has(|c| matches!(c, StaticCell::IngredientPile(_))) {
        return Err(LayoutError::MissingStation("ingredient pile"));
    }
    for y in 0..layout.height {
        for x in 0..layout.width {
            let border = x == 0 || y == 0 || x + 1 == layout.width || y + 1 == layout.height;
            if border && layout.cell(Pos::new(x, y)).is_walkable() {
                return Err(LayoutError::OpenBorder { x, y });
            }
        }
    }
    if layout.recipes.is_empty() {
        return Err(LayoutError::BadRecipe("<none>".to_string()));
    }
    let present = layout.present_ingredients();
    for r in &layout.recipes {
        for i in r.ingredients() {
            if !present.contains(&i) {
                return Err(LayoutError::AbsentIngredient {
                    recipe: r.to_string(),
                    ingredient: i,
                });
            }
        }
    }
    Ok(())
}

/// Canonical DSL text. `parse_layout(&serialize_layout(l)) == l` for every valid layout.
pub fn serialize_layout(layout: &Layout) -> String {
    let mut out = layout.rows().join("\n");
    out.push_str("\n\nname=");
    out.push_str(&layout.name);
    out.push('\n');
    if layout.recipes != layout.default_recipes() {
        let parts: Vec<String> = layout.recipes.iter().map(|r| r.to_string()).collect();
        out.push_str("recipes=");
        out.push_str(&parts.join(";"));
        out.push('\n');
    }
    out
}

/// Reachability problems found by [`validate`]. An empty list means the layout is playable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutIssue {
    pub message: String,
}

impl fmt::Display for LayoutIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn interactable(c: StaticCell) -> bool {
    matches!(
        c,
        StaticCell::Delivery
            | StaticCell::Pot
            | StaticCell::PlatePile
            | StaticCell::IngredientPile(_)
            | StaticCell::ButtonRecipeIndicator
    )
}

pub fn validate(layout: &Layout) -> Vec<LayoutIssue> {
    let mut issues = Vec::new();
    let mut push = |m: String| issues.push(LayoutIssue { message: m });

    let regions: Vec<Vec<Pos>> = layout.spawns.iter().map(|&s| layout.reachable_floor(s)).collect();
    let per_agent: Vec<BTreeSet<Pos>> = regions.iter().map(|r| layout.adjacent_stations(r)).collect();
    let reachable: BTreeSet<Pos> = per_agent.iter().flatten().copied().collect();

    for (i, (spawn, stations)) in layout.spawns.iter().zip(&per_agent).enumerate() {
        if !layout.cell(*spawn).is_walkable() {
            push(format!("agent {i} spawns on a non-floor cell"));
        }
        if !stations.iter().any(|&p| interactable(layout.cell(p))) {
            push(format!("agent {i} cannot reach any station"));
        }
    }

    let kind_reachable = |pred: &dyn Fn(StaticCell) -> bool| reachable.iter().any(|&p| pred(layout.cell(p)));
    if !kind_reachable(&|c| c == StaticCell::Pot) {
        push("pot unreachable".to_string());
    }
    if !kind_reachable(&|c| c == StaticCell::Delivery) {
        push("delivery station unreachable".to_string());
    }
    if !kind_reachable(&|c| c == StaticCell::PlatePile) {
        push("plate pile unreachable".to_string());
    }
    for i in layout.present_ingredients() {
        if !kind_reachable(&|c| c == StaticCell::IngredientPile(i as u8)) {
            push(format!("ingredient pile {i} unreachable"));
        }
    }

    for (idx, &cell) in layout.cells.iter().enumerate() {
        let p = Pos::new(idx % layout.width, idx / layout.width);
        if interactable(cell) && !reachable.contains(&p) {
            push(format!("{} at ({}, {}) unreachable", cell.name(), p.x, p.y));
        }
    }

    let covered: BTreeSet<Pos> = regions.iter().flatten().copied().collect();
    for (idx, &cell) in layout.cells.iter().enumerate() {
        let p = Pos::new(idx % layout.width, idx / layout.width);
        if cell.is_walkable() && !covered.contains(&p) {
            push(format!("floor at ({}, {}) unreachable from any spawn", p.x, p.y));
        }
    }

    let present = layout.present_ingredients();
    for r in &layout.recipes {
        for i in r.ingredients() {
            if !present.contains(&i) {
                push(format!("recipe {r} needs ingredient {i} which has no pile"));
            }
        }
    }
    if layout.recipes.is_empty() {
        push("no possible recipes".to_string());
    }
    issues
}
