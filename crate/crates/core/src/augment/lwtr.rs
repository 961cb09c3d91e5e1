//! Label-wise token replacement: `floor(m/2)` of the `m` entity-tagged tokens
//! of a table are swapped for training tokens carrying the same tag. No
//! applicability check is made, so `nominal pressure` may become
//! `height pressure`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::neural::{Augmenter, Rng};
use crate::table::{Corpus, NerTag, Table, Token};

pub struct Lwtr {
    donors: BTreeMap<NerTag, Vec<Token>>,
    n_samples: usize,
}

impl Lwtr {
    /// Donor pools hold every entity-tagged token occurrence of `train`.
    pub fn new(train: &Corpus, n_samples: usize) -> Self {
        let mut donors: BTreeMap<NerTag, Vec<Token>> = BTreeMap::new();
        for table in train.tables() {
            for (_, cell) in table.cells() {
                if let Some(tags) = cell.tags() {
                    for (tok, tag) in cell.tokens().iter().zip(tags) {
                        if *tag != NerTag::O {
                            donors.entry(*tag).or_default().push(tok.clone());
                        }
                    }
                }
            }
        }
        Lwtr { donors, n_samples }
    }

    /// A donor for `tag` whose text differs from `current`, if one exists.
    fn draw(&self, tag: NerTag, current: &Token, rng: &mut Rng) -> Option<Token> {
        let pool = self.donors.get(&tag)?;
        if pool.iter().all(|t| t == current) {
            return None;
        }
        loop {
            let cand = &pool[rng.random_range(0..pool.len())];
            if cand != current {
                return Some(cand.clone());
            }
        }
    }

    /// Replaces `floor(m/2)` entity tokens; tags are never changed.
    pub fn generate(&self, table: &Table, rng: &mut Rng) -> Result<Table> {
        let mut positions: Vec<(usize, usize, usize, NerTag)> = Vec::new();
        for ((i, j), cell) in table.cells() {
            if let Some(tags) = cell.tags() {
                for (t, tag) in tags.iter().enumerate() {
                    if *tag != NerTag::O {
                        positions.push((i, j, t, *tag));
                    }
                }
            }
        }
        let m = positions.len();
        if m < 2 {
            return Err(Error::Precondition(format!(
                "table {:?} has {m} labeled tokens, LWTR needs at least 2",
                table.id()
            )));
        }
        let target = m / 2;
        positions.shuffle(rng);
        let mut out = table.clone().with_id(format!("{}.aug", table.id()));
        let mut replaced = 0;
        for (i, j, t, tag) in positions {
            if replaced == target {
                break;
            }
            let current = &table.cell(i, j).tokens()[t];
            if let Some(donor) = self.draw(tag, current, rng) {
                out.cell_mut(i, j).replace_token(t, donor);
                replaced += 1;
            }
        }
        if replaced < target {
            log::warn!(
                "table {:?}: only {replaced} of {target} tokens had a differing donor",
                table.id()
            );
        }
        Ok(out)
    }
}

impl Augmenter for Lwtr {
    fn samples_per_table(&self) -> usize {
        self.n_samples
    }

    fn augment(&self, table: &Table, rng: &mut Rng) -> Result<Table> {
        match self.generate(table, rng) {
            Err(Error::Precondition(_)) => Ok(table.clone().with_id(format!("{}.aug", table.id()))),
            other => other,
        }
    }
}

/// One LWTR sample for `table` with donors from `train`.
pub fn lwtr_augment(table: &Table, train: &Corpus, rng: &mut Rng) -> Result<Table> {
    Lwtr::new(train, 1).generate(table, rng)
}
