//! Table linearization for the encoder.
//!
//! Tokens are emitted header first (`h_1 .. h_m`) and then body cells in
//! row-major order. Every token records the cell it came from, its position
//! inside that cell (restarting at 0 for each cell) and a header/body
//! segment. Token `i` may attend to token `j` only if both come from the same
//! row or the same column.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{Corpus, NerTag, Table, Token};
use crate::text;

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const RESERVED: usize = 2;
pub const DEFAULT_MAX_LEN: usize = 512;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionMode {
    /// Row/column visibility mask, cell-level positions, header/body segments.
    #[default]
    TableMask,
    /// Plain sequence: everything visible, global positions, one segment.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Segment {
    Header = 0,
    Body = 1,
}

impl Segment {
    pub fn id(self) -> usize {
        self as usize
    }
}

/// Location of one cell's tokens inside the linearized sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellSpan {
    pub row: usize,
    pub col: usize,
    pub start: usize,
    pub len: usize,
}

/// Square binary matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VisibilityMask {
    size: usize,
    bits: Vec<bool>,
}

impl VisibilityMask {
    pub fn all_visible(size: usize) -> Self {
        VisibilityMask {
            size,
            bits: vec![true; size * size],
        }
    }

    /// `visible(i, j)` iff `rows[i] == rows[j]` or `cols[i] == cols[j]`.
    pub fn from_coordinates(rows: &[usize], cols: &[usize]) -> Self {
        assert_eq!(rows.len(), cols.len());
        let size = rows.len();
        let mut bits = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                bits.push(rows[i] == rows[j] || cols[i] == cols[j]);
            }
        }
        VisibilityMask { size, bits }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.size + j]
    }

    pub fn set(&mut self, i: usize, j: usize, visible: bool) {
        self.bits[i * self.size + j] = visible;
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.bits[i * self.size..(i + 1) * self.size]
    }

    pub fn count_visible(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// A table flattened into per-token streams.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearizedInput {
    pub tokens: Vec<Token>,
    pub token_ids: Vec<usize>,
    pub segments: Vec<Segment>,
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub mask: VisibilityMask,
    /// Gold tag per token; `None` where the cell is unannotated.
    pub tags: Vec<Option<NerTag>>,
    pub spans: Vec<CellSpan>,
}

impl LinearizedInput {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    pub fn labeled_count(&self) -> usize {
        self.tags.iter().filter(|t| t.is_some()).count()
    }

    /// Token grid rebuilt from the spans, indexed `[row][col]` with row 0 the header.
    pub fn token_grid(&self, n_rows: usize, n_cols: usize) -> Vec<Vec<Vec<Token>>> {
        let mut grid = vec![vec![Vec::new(); n_cols]; n_rows + 1];
        for s in &self.spans {
            grid[s.row][s.col] = self.tokens[s.start..s.start + s.len].to_vec();
        }
        grid
    }
}

/// Recomputes the row/column visibility mask of an input from its coordinates.
pub fn visibility_matrix(input: &LinearizedInput) -> VisibilityMask {
    VisibilityMask::from_coordinates(&input.rows, &input.cols)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Linearizer {
    pub mode: AttentionMode,
    pub max_len: usize,
}

impl Default for Linearizer {
    fn default() -> Self {
        Linearizer {
            mode: AttentionMode::TableMask,
            max_len: DEFAULT_MAX_LEN,
        }
    }
}

impl Linearizer {
    pub fn new(mode: AttentionMode, max_len: usize) -> Self {
        Linearizer { mode, max_len }
    }

    pub fn linearize(&self, table: &Table, vocab: &Vocabulary) -> Result<LinearizedInput> {
        let total: usize = table.cells().map(|(_, c)| c.len()).sum();
        if total > self.max_len {
            return Err(Error::SequenceTooLong {
                len: total,
                max: self.max_len,
            });
        }
        let mut out = LinearizedInput {
            tokens: Vec::with_capacity(total),
            token_ids: Vec::with_capacity(total),
            segments: Vec::with_capacity(total),
            positions: Vec::with_capacity(total),
            rows: Vec::with_capacity(total),
            cols: Vec::with_capacity(total),
            mask: VisibilityMask::all_visible(0),
            tags: Vec::with_capacity(total),
            spans: Vec::with_capacity((table.n_rows() + 1) * table.n_cols()),
        };
        for ((row, col), cell) in table.cells() {
            let start = out.tokens.len();
            let segment = if row == 0 {
                Segment::Header
            } else {
                Segment::Body
            };
            for (p, token) in cell.tokens().iter().enumerate() {
                out.token_ids.push(vocab.id(token.as_str()));
                out.tokens.push(token.clone());
                out.rows.push(row);
                out.cols.push(col);
                match self.mode {
                    AttentionMode::TableMask => {
                        out.segments.push(segment);
                        out.positions.push(p);
                    }
                    AttentionMode::Full => {
                        out.segments.push(Segment::Header);
                        out.positions.push(start + p);
                    }
                }
                out.tags.push(cell.tags().map(|t| t[p]));
            }
            out.spans.push(CellSpan {
                row,
                col,
                start,
                len: cell.len(),
            });
        }
        out.mask = match self.mode {
            AttentionMode::TableMask => VisibilityMask::from_coordinates(&out.rows, &out.cols),
            AttentionMode::Full => VisibilityMask::all_visible(total),
        };
        Ok(out)
    }
}

/// Linearizes with the row/column mask and the default length cap.
pub fn linearize(table: &Table, vocab: &Vocabulary) -> Result<LinearizedInput> {
    Linearizer::default().linearize(table, vocab)
}

/// Normalized token to id map. Ids 0 and 1 are reserved for PAD and UNK.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from normalized tokens in id order; duplicates are skipped.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocabulary::default();
        for t in tokens {
            v.push(t.into());
        }
        v
    }

    fn push(&mut self, token: String) {
        if !self.index.contains_key(&token) {
            self.index.insert(token.clone(), self.tokens.len() + RESERVED);
            self.tokens.push(token);
        }
    }

    /// Appends tokens not yet present, in sorted order.
    pub fn extend_sorted(&mut self, tokens: impl IntoIterator<Item = String>) {
        let mut new: Vec<String> = tokens
            .into_iter()
            .map(|t| text::normalize(&t))
            .filter(|t| !self.index.contains_key(t))
            .collect();
        new.sort();
        new.dedup();
        for t in new {
            self.push(t);
        }
    }

    /// Id of a raw token (normalized before lookup); unknown tokens map to UNK.
    pub fn id(&self, token: &str) -> usize {
        self.index
            .get(&text::normalize(token))
            .copied()
            .unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(&text::normalize(token))
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        match id {
            PAD_ID => Some("[PAD]"),
            UNK_ID => Some("[UNK]"),
            _ => self.tokens.get(id - RESERVED).map(String::as_str),
        }
    }

    /// Number of ids including the reserved ones.
    pub fn size(&self) -> usize {
        self.tokens.len() + RESERVED
    }

    /// Non-reserved entries in id order.
    pub fn entries(&self) -> &[String] {
        &self.tokens
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut s = String::new();
        for t in &self.tokens {
            s.push_str(t);
            s.push('\n');
        }
        fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut v = Vocabulary::default();
        for (n, line) in content.lines().enumerate() {
            if line.is_empty() || line.chars().any(char::is_whitespace) {
                return Err(Error::parse(
                    format!("{}:{}", path.display(), n + 1),
                    "vocabulary lines must hold exactly one token",
                ));
            }
            if v.index.contains_key(line) {
                return Err(Error::parse(
                    format!("{}:{}", path.display(), n + 1),
                    format!("duplicate token {line:?}"),
                ));
            }
            v.push(line.to_owned());
        }
        Ok(v)
    }
}

/// Every normalized token seen at least `min_count` times, most frequent first
/// and ties in lexicographic order.
pub fn build_vocab(corpus: &Corpus, min_count: usize) -> Vocabulary {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for table in corpus.tables() {
        for (_, cell) in table.cells() {
            for token in cell.tokens() {
                *counts.entry(token.normalized()).or_default() += 1;
            }
        }
    }
    let mut entries: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_count.max(1))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_tokens(entries.into_iter().map(|(t, _)| t))
}
