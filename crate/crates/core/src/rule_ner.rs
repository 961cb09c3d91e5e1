//! Dictionary matching baseline.
//!
//! Equipment, quantity and unit surface names, tokenized like cell text, are
//! matched longest-first against the normalized tokens of every cell, header
//! and body alike. Matches never cross cell boundaries.
//! Tags are then guessed with a column heuristic: among columns whose body has
//! no dictionary match, the one with the most distinct non-empty body values
//! (leftmost on ties) is taken as the tag column. A cell of that column whose
//! concatenated text mixes letters and digits or consists of dash-joined
//! groups has all its tokens tagged `I-TAG`.

use std::collections::{HashMap, HashSet};

use crate::augment::looks_like_tag;
use crate::rdl::RdlGraph;
use crate::table::{EntityType, NerTag, Table};
use crate::text::{has_letter_and_digit, normalize, tokenize};

/// Per-cell predicted tags, indexed `[row][col]` with row 0 the header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RulePrediction {
    pub tags: Vec<Vec<Vec<NerTag>>>,
    pub tag_column: Option<usize>,
}

impl RulePrediction {
    /// Copy of `table` carrying the predicted tags.
    pub fn apply(&self, table: &Table) -> Table {
        let mut out = table.clone();
        for (i, row) in self.tags.iter().enumerate() {
            for (j, tags) in row.iter().enumerate() {
                out.cell_mut(i, j)
                    .set_tags(Some(tags.clone()))
                    .expect("prediction mirrors the table");
            }
        }
        out
    }
}

pub struct RuleNer {
    phrases: HashMap<Vec<String>, EntityType>,
    max_len: usize,
}

fn pieces(text: &str) -> Vec<String> {
    tokenize(text).iter().map(|t| t.normalized()).collect()
}

impl RuleNer {
    pub fn new(graph: &RdlGraph) -> Self {
        let mut phrases = HashMap::new();
        for (names, ent) in [
            (graph.eq_names(), EntityType::Eq),
            (graph.quant_names(), EntityType::Quant),
            (graph.uom_names(), EntityType::Uom),
        ] {
            for name in names {
                let p = pieces(name);
                if !p.is_empty() {
                    phrases.entry(p).or_insert(ent);
                }
            }
        }
        let max_len = phrases.keys().map(Vec::len).max().unwrap_or(0);
        RuleNer { phrases, max_len }
    }

    /// Dictionary tags for the tokens of one cell (`None` = no match).
    fn match_cell(&self, tokens: &[crate::table::Token]) -> Vec<Option<EntityType>> {
        let seq: Vec<String> = tokens.iter().map(|t| normalize(t.as_str())).collect();
        let mut out = vec![None; seq.len()];
        let mut i = 0;
        while i < seq.len() {
            let longest = self.max_len.min(seq.len() - i);
            let hit = (1..=longest)
                .rev()
                .find_map(|len| self.phrases.get(&seq[i..i + len]).map(|e| (len, *e)));
            match hit {
                Some((len, ent)) => {
                    for slot in &mut out[i..i + len] {
                        *slot = Some(ent);
                    }
                    i += len;
                }
                None => i += 1,
            }
        }
        out
    }

    pub fn predict(&self, table: &Table) -> RulePrediction {
        let rows = table.n_rows() + 1;
        let cols = table.n_cols();
        let mut tags = vec![vec![Vec::new(); cols]; rows];
        let mut body_has_match = vec![false; cols];
        for ((i, j), cell) in table.cells() {
            let matched = self.match_cell(cell.tokens());
            if i > 0 && matched.iter().any(Option::is_some) {
                body_has_match[j] = true;
            }
            tags[i][j] = matched
                .into_iter()
                .map(|m| m.map_or(NerTag::O, EntityType::tag))
                .collect();
        }

        let mut tag_column: Option<(usize, usize)> = None;
        for j in (0..cols).filter(|&j| !body_has_match[j]) {
            let distinct: HashSet<String> = table
                .body()
                .iter()
                .map(|row| &row[j])
                .filter(|c| !c.is_empty())
                .map(|c| c.normalized_text())
                .collect();
            let n = distinct.len();
            if n > 0 && tag_column.is_none_or(|(_, best)| n > best) {
                tag_column = Some((j, n));
            }
        }
        if let Some((j, _)) = tag_column {
            for i in 1..rows {
                // tokenization splits "P-101A" apart, so judge the whole cell
                let joined: String = table.cell(i, j).tokens().iter().map(|t| t.as_str()).collect();
                if has_letter_and_digit(&joined) || looks_like_tag(&joined) {
                    tags[i][j].fill(NerTag::Tag);
                }
            }
        }
        RulePrediction {
            tags,
            tag_column: tag_column.map(|(j, _)| j),
        }
    }
}

/// Convenience wrapper building the matcher for a single table.
pub fn rule_predict(table: &Table, graph: &RdlGraph) -> RulePrediction {
    RuleNer::new(graph).predict(table)
}
