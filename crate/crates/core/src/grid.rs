//! Grid geometry and the three-layer cell store.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::item::ItemCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub x: usize,
    pub y: usize,
}

impl Pos {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Neighbouring cell in `dir`, or `None` when it falls off the grid.
    #[inline]
    pub fn step(self, dir: Direction, width: usize, height: usize) -> Option<Pos> {
        let (dx, dy) = dir.delta();
        let x = self.x as isize + dx;
        let y = self.y as isize + dy;
        if x < 0 || y < 0 || x >= width as isize || y >= height as isize {
            None
        } else {
            Some(Pos::new(x as usize, y as usize))
        }
    }

    pub fn chebyshev(self, other: Pos) -> usize {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }

    pub fn manhattan(self, other: Pos) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    #[inline]
    pub const fn delta(self) -> (isize, isize) {
        match self {
            Direction::Up => (0, -1),
            Direction::Down => (0, 1),
            Direction::Left => (-1, 0),
            Direction::Right => (1, 0),
        }
    }

    #[inline]
    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn arrow(self) -> char {
        match self {
            Direction::Up => '^',
            Direction::Down => 'v',
            Direction::Left => '<',
            Direction::Right => '>',
        }
    }
}

/// Static object occupying a cell (grid layer 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StaticCell {
    Empty,
    Wall,
    Delivery,
    Pot,
    RecipeIndicator,
    ButtonRecipeIndicator,
    PlatePile,
    IngredientPile(u8),
}

impl StaticCell {
    /// Layout DSL character. Spawn markers are not static cells; an `A` parses to `Empty`.
    pub fn glyph(self) -> char {
        match self {
            StaticCell::Empty => ' ',
            StaticCell::Wall => 'W',
            StaticCell::Delivery => 'X',
            StaticCell::Pot => 'P',
            StaticCell::RecipeIndicator => 'R',
            StaticCell::ButtonRecipeIndicator => 'L',
            StaticCell::PlatePile => 'B',
            StaticCell::IngredientPile(i) => char::from(b'0' + i),
        }
    }

    pub fn from_glyph(c: char) -> Option<StaticCell> {
        Some(match c {
            ' ' => StaticCell::Empty,
            'W' => StaticCell::Wall,
            'X' => StaticCell::Delivery,
            'P' => StaticCell::Pot,
            'R' => StaticCell::RecipeIndicator,
            'L' => StaticCell::ButtonRecipeIndicator,
            'B' => StaticCell::PlatePile,
            '0'..='9' => StaticCell::IngredientPile(c as u8 - b'0'),
            _ => return None,
        })
    }

    #[inline]
    pub fn is_walkable(self) -> bool {
        matches!(self, StaticCell::Empty)
    }

    pub fn name(self) -> &'static str {
        match self {
            StaticCell::Empty => "floor",
            StaticCell::Wall => "counter",
            StaticCell::Delivery => "delivery",
            StaticCell::Pot => "pot",
            StaticCell::RecipeIndicator => "recipe indicator",
            StaticCell::ButtonRecipeIndicator => "button indicator",
            StaticCell::PlatePile => "plate pile",
            StaticCell::IngredientPile(_) => "ingredient pile",
        }
    }
}

/// Full grid: static layer, item layer, timer layer. Row-major, index `y * width + x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    pub statics: Vec<StaticCell>,
    pub items: Vec<ItemCode>,
    pub timers: Vec<u32>,
}

impl Grid {
    pub fn from_statics(width: usize, height: usize, statics: Vec<StaticCell>) -> Self {
        debug_assert_eq!(statics.len(), width * height);
        let n = statics.len();
        Self {
            width,
            height,
            statics,
            items: vec![ItemCode::EMPTY; n],
            timers: vec![0; n],
        }
    }

    #[inline]
    pub fn idx(&self, p: Pos) -> usize {
        p.y * self.width + p.x
    }

    #[inline]
    pub fn pos(&self, idx: usize) -> Pos {
        Pos::new(idx % self.width, idx / self.width)
    }

    #[inline]
    pub fn static_at(&self, p: Pos) -> StaticCell {
        self.statics[self.idx(p)]
    }

    pub fn static_rows(&self) -> Vec<String> {
        self.statics
            .chunks(self.width)
            .map(|row| row.iter().map(|c| c.glyph()).collect())
            .collect()
    }
}

/// Canonical JSON form: static layer as DSL rows, items and timers as flat integer arrays.
#[derive(Serialize, Deserialize)]
struct GridRepr {
    width: usize,
    height: usize,
    statics: Vec<String>,
    items: Vec<ItemCode>,
    timers: Vec<u32>,
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GridRepr {
            width: self.width,
            height: self.height,
            statics: self.static_rows(),
            items: self.items.clone(),
            timers: self.timers.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = GridRepr::deserialize(d)?;
        let n = repr.width * repr.height;
        if repr.statics.len() != repr.height {
            return Err(D::Error::custom("static rows do not match height"));
        }
        let mut statics = Vec::with_capacity(n);
        for row in &repr.statics {
            let before = statics.len();
            for c in row.chars() {
                statics.push(
                    StaticCell::from_glyph(c).ok_or_else(|| D::Error::custom(format!("unknown static glyph {c:?}")))?,
                );
            }
            if statics.len() - before != repr.width {
                return Err(D::Error::custom("static row does not match width"));
            }
        }
        if repr.items.len() != n || repr.timers.len() != n {
            return Err(D::Error::custom("layer length does not match grid size"));
        }
        Ok(Grid {
            width: repr.width,
            height: repr.height,
            statics,
            items: repr.items,
            timers: repr.timers,
        })
    }
}
