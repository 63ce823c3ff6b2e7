//! Bit-packed item encoding shared by counters, pots and inventories.
//!
//! ```text
//! bit 0        plated
//! bit 1        cooked
//! bits 2+2i..  count of ingredient i (0..=3), two bits each
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound on ingredient types (the layout DSL has digits `0`-`9`).
pub const MAX_INGREDIENTS: usize = 10;
/// Largest number of ingredient units any item may hold.
pub const MAX_UNITS: u8 = 3;

const PLATED: u32 = 1;
const COOKED: u32 = 1 << 1;
const COUNT_SHIFT: u32 = 2;
const COUNT_MASK: u32 = (1 << (2 * MAX_INGREDIENTS as u32)) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ItemError {
    #[error("ingredient {index} has count {count}, at most 3 allowed")]
    CountTooLarge { index: usize, count: u8 },
    #[error("total ingredient count {0} exceeds 3")]
    TotalTooLarge(u32),
    #[error("cooked item with no ingredients")]
    CookedEmpty,
    #[error("{0} ingredients requested, at most 10 supported")]
    TooManyIngredients(usize),
    #[error("code {code:#x} sets bits beyond ingredient {num_ingredients}")]
    StrayBits { code: u32, num_ingredients: usize },
}

/// Raw item bitfield. `0` is the empty item; `1` is a bare plate.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemCode(pub u32);

/// Decoded view of an [`ItemCode`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemParts {
    pub plated: bool,
    pub cooked: bool,
    pub counts: Vec<u8>,
}

pub fn encode_item(plated: bool, cooked: bool, counts: &[u8]) -> Result<ItemCode, ItemError> {
    if counts.len() > MAX_INGREDIENTS {
        return Err(ItemError::TooManyIngredients(counts.len()));
    }
    let mut raw = 0u32;
    let mut total = 0u32;
    for (index, &count) in counts.iter().enumerate() {
        if count > MAX_UNITS {
            return Err(ItemError::CountTooLarge { index, count });
        }
        total += count as u32;
        raw |= (count as u32) << (COUNT_SHIFT + 2 * index as u32);
    }
    if total > MAX_UNITS as u32 {
        return Err(ItemError::TotalTooLarge(total));
    }
    if cooked && total == 0 {
        return Err(ItemError::CookedEmpty);
    }
    if plated {
        raw |= PLATED;
    }
    if cooked {
        raw |= COOKED;
    }
    Ok(ItemCode(raw))
}

pub fn decode_item(code: ItemCode, num_ingredients: usize) -> Result<ItemParts, ItemError> {
    code.validate(num_ingredients)?;
    Ok(ItemParts {
        plated: code.is_plated(),
        cooked: code.is_cooked(),
        counts: code.counts(num_ingredients),
    })
}

impl ItemCode {
    pub const EMPTY: ItemCode = ItemCode(0);
    pub const PLATE: ItemCode = ItemCode(PLATED);

    /// A single raw unit of ingredient `i`.
    #[inline]
    pub const fn ingredient(i: usize) -> ItemCode {
        ItemCode(1 << (COUNT_SHIFT + 2 * i as u32))
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn is_plated(self) -> bool {
        self.0 & PLATED != 0
    }

    #[inline]
    pub fn is_cooked(self) -> bool {
        self.0 & COOKED != 0
    }

    /// Ingredient counts packed as two-bit fields, flags stripped.
    #[inline]
    pub fn count_bits(self) -> u32 {
        (self.0 >> COUNT_SHIFT) & COUNT_MASK
    }

    #[inline]
    pub fn count(self, i: usize) -> u8 {
        ((self.0 >> (COUNT_SHIFT + 2 * i as u32)) & 0b11) as u8
    }

    #[inline]
    pub fn total(self) -> u32 {
        let bits = self.count_bits();
        // Sum of two-bit lanes: popcount of the low bits plus twice the high bits.
        (bits & 0x5_5555).count_ones() + 2 * (bits & 0xA_AAAA).count_ones()
    }

    pub fn counts(self, num_ingredients: usize) -> Vec<u8> {
        (0..num_ingredients).map(|i| self.count(i)).collect()
    }

    #[inline]
    pub fn with_plated(self) -> ItemCode {
        ItemCode(self.0 | PLATED)
    }

    #[inline]
    pub fn with_cooked(self) -> ItemCode {
        ItemCode(self.0 | COOKED)
    }

    /// A bare plate: plated, nothing on it.
    #[inline]
    pub fn is_bare_plate(self) -> bool {
        self.0 == PLATED
    }

    /// Raw ingredients only (no plate, not cooked, at least one unit).
    #[inline]
    pub fn is_raw_ingredients(self) -> bool {
        self.0 & (PLATED | COOKED) == 0 && self.0 != 0
    }

    /// Plated and cooked: a deliverable dish.
    #[inline]
    pub fn is_dish(self) -> bool {
        self.0 & (PLATED | COOKED) == (PLATED | COOKED)
    }

    /// Adds the counts of `other` lane-wise. Returns `None` if the merged item
    /// would hold more than three units in total.
    pub fn merge_counts(self, other: ItemCode) -> Option<ItemCode> {
        if self.total() + other.total() > MAX_UNITS as u32 {
            return None;
        }
        // No lane can overflow: the total stays at most 3.
        let bits = self.count_bits() + other.count_bits();
        Some(ItemCode((self.0 & (PLATED | COOKED)) | (bits << COUNT_SHIFT)))
    }

    /// True iff every per-ingredient count of `self` is at most that of `other`.
    pub fn counts_within(self, other: ItemCode) -> bool {
        (0..MAX_INGREDIENTS).all(|i| self.count(i) <= other.count(i))
    }

    pub fn validate(self, num_ingredients: usize) -> Result<(), ItemError> {
        if num_ingredients > MAX_INGREDIENTS {
            return Err(ItemError::TooManyIngredients(num_ingredients));
        }
        let used_bits = COUNT_SHIFT + 2 * num_ingredients as u32;
        if used_bits < 32 && self.0 >> used_bits != 0 {
            return Err(ItemError::StrayBits {
                code: self.0,
                num_ingredients,
            });
        }
        let total = self.total();
        if total > MAX_UNITS as u32 {
            return Err(ItemError::TotalTooLarge(total));
        }
        if self.is_cooked() && total == 0 {
            return Err(ItemError::CookedEmpty);
        }
        Ok(())
    }

    /// Short human-readable form, e.g. `plate+cooked[3,0]` or `raw[0,1]`.
    pub fn describe(self, num_ingredients: usize) -> String {
        if self.is_empty() {
            return "empty".to_string();
        }
        if self.is_bare_plate() {
            return "plate".to_string();
        }
        let mut s = String::new();
        if self.is_plated() {
            s.push_str("plate+");
        }
        s.push_str(if self.is_cooked() { "cooked" } else { "raw" });
        let counts: Vec<String> = self.counts(num_ingredients).iter().map(|c| c.to_string()).collect();
        s.push('[');
        s.push_str(&counts.join(","));
        s.push(']');
        s
    }
}

impl fmt::Debug for ItemCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ItemCode({})", self.0)
    }
}
