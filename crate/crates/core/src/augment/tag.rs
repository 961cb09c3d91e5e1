//! Artificial equipment tags.
//!
//! A tag is the acronym of the equipment name (first character of every
//! word, uppercased) followed by `group_count` groups of `[A-Z0-9]` with
//! lengths in `group_length`. Each junction before a group is a dash with
//! probability `dash_probability`, otherwise the group is appended directly:
//! `CP-4KX-Q07`, `HE7T-0PW1`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::Rng;

const ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TagPattern {
    /// Inclusive range.
    pub group_count: (usize, usize),
    /// Inclusive range.
    pub group_length: (usize, usize),
    pub dash_probability: f64,
}

impl Default for TagPattern {
    fn default() -> Self {
        TagPattern {
            group_count: (2, 3),
            group_length: (2, 4),
            dash_probability: 0.7,
        }
    }
}

impl TagPattern {
    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (usize, usize)| lo >= 1 && lo <= hi;
        if !ok(self.group_count) || !ok(self.group_length) {
            return Err(Error::Config("tag pattern ranges must be non-empty and start at 1 or more".into()));
        }
        if !(0.0..=1.0).contains(&self.dash_probability) {
            return Err(Error::Config("dash_probability must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

pub fn acronym(eq_name: &str) -> String {
    eq_name
        .split_whitespace()
        .filter_map(|w| w.chars().find(|c| c.is_alphanumeric()))
        .flat_map(char::to_uppercase)
        .collect()
}

pub fn generate_tag(eq_name: &str, pattern: &TagPattern, rng: &mut Rng) -> String {
    let mut tag = acronym(eq_name);
    let groups = rng.random_range(pattern.group_count.0..=pattern.group_count.1);
    for _ in 0..groups {
        if rng.random_bool(pattern.dash_probability) {
            tag.push('-');
        }
        let len = rng.random_range(pattern.group_length.0..=pattern.group_length.1);
        for _ in 0..len {
            tag.push(ALPHABET[rng.random_range(0..ALPHABET.len())] as char);
        }
    }
    tag
}

/// Two or more non-empty alphanumeric groups joined by dashes.
pub fn looks_like_tag(token: &str) -> bool {
    let mut groups = 0;
    for part in token.split('-') {
        if part.is_empty() || !part.chars().all(char::is_alphanumeric) {
            return false;
        }
        groups += 1;
    }
    groups >= 2
}
