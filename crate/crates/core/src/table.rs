//! Tables, cells, IO tags and corpora.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;

/// A single token of cell text. Never empty, never contains whitespace.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Token(String);

impl Token {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.is_empty() || text.chars().any(char::is_whitespace) {
            return Err(Error::InvalidToken(text));
        }
        Ok(Token(text))
    }

    pub(crate) fn new_unchecked(text: String) -> Self {
        debug_assert!(!text.is_empty() && !text.chars().any(char::is_whitespace));
        Token(text)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn normalized(&self) -> String {
        text::normalize(&self.0)
    }
}

impl TryFrom<String> for Token {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Token::new(value)
    }
}

impl From<Token> for String {
    fn from(t: Token) -> String {
        t.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Entity types of the IO tag set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityType {
    #[serde(rename = "TAG")]
    Tag,
    #[serde(rename = "EQ")]
    Eq,
    #[serde(rename = "QUANT")]
    Quant,
    #[serde(rename = "UoM")]
    Uom,
}

impl EntityType {
    pub const ALL: [EntityType; 4] = [
        EntityType::Tag,
        EntityType::Eq,
        EntityType::Quant,
        EntityType::Uom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EntityType::Tag => "TAG",
            EntityType::Eq => "EQ",
            EntityType::Quant => "QUANT",
            EntityType::Uom => "UoM",
        }
    }

    pub fn tag(self) -> NerTag {
        match self {
            EntityType::Tag => NerTag::Tag,
            EntityType::Eq => NerTag::Eq,
            EntityType::Quant => NerTag::Quant,
            EntityType::Uom => NerTag::Uom,
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// IO tag: `O` or `I-<ENT>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NerTag {
    O,
    Tag,
    Eq,
    Quant,
    Uom,
}

impl NerTag {
    pub const COUNT: usize = 5;
    pub const ALL: [NerTag; 5] = [NerTag::O, NerTag::Tag, NerTag::Eq, NerTag::Quant, NerTag::Uom];

    /// Class index used by the classifier and the confusion matrix.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<NerTag> {
        NerTag::ALL.get(i).copied()
    }

    pub fn entity(self) -> Option<EntityType> {
        match self {
            NerTag::O => None,
            NerTag::Tag => Some(EntityType::Tag),
            NerTag::Eq => Some(EntityType::Eq),
            NerTag::Quant => Some(EntityType::Quant),
            NerTag::Uom => Some(EntityType::Uom),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NerTag::O => "O",
            NerTag::Tag => "I-TAG",
            NerTag::Eq => "I-EQ",
            NerTag::Quant => "I-QUANT",
            NerTag::Uom => "I-UoM",
        }
    }
}

impl FromStr for NerTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NerTag::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::parse("tag", format!("unknown tag {s:?}")))
    }
}

impl TryFrom<String> for NerTag {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<NerTag> for String {
    fn from(t: NerTag) -> String {
        t.as_str().to_owned()
    }
}

impl fmt::Display for NerTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A table cell: a token sequence with optional per-token tags.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cell {
    tokens: Vec<Token>,
    tags: Option<Vec<NerTag>>,
}

impl Cell {
    pub fn new(tokens: Vec<Token>, tags: Option<Vec<NerTag>>) -> Result<Self> {
        if let Some(tags) = &tags {
            if tags.len() != tokens.len() {
                return Err(Error::Precondition(format!(
                    "cell has {} tokens but {} tags",
                    tokens.len(),
                    tags.len()
                )));
            }
        }
        Ok(Cell { tokens, tags })
    }

    pub fn untagged(tokens: Vec<Token>) -> Self {
        Cell { tokens, tags: None }
    }

    /// Tokenizes `text` and leaves the cell unannotated.
    pub fn from_text(text: &str) -> Self {
        Cell::untagged(text::tokenize(text))
    }

    /// Every token carries the same tag.
    pub fn uniform(tokens: Vec<Token>, tag: NerTag) -> Self {
        let tags = vec![tag; tokens.len()];
        Cell {
            tokens,
            tags: Some(tags),
        }
    }

    /// Zero tokens, annotated (as opposed to unannotated).
    pub fn empty_tagged() -> Self {
        Cell {
            tokens: Vec::new(),
            tags: Some(Vec::new()),
        }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn tags(&self) -> Option<&[NerTag]> {
        self.tags.as_deref()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn set_tags(&mut self, tags: Option<Vec<NerTag>>) -> Result<()> {
        if let Some(t) = &tags {
            if t.len() != self.tokens.len() {
                return Err(Error::Precondition(format!(
                    "cell has {} tokens but {} tags",
                    self.tokens.len(),
                    t.len()
                )));
            }
        }
        self.tags = tags;
        Ok(())
    }

    /// Tags of the cell, treating an unannotated cell as all `O`.
    pub fn tags_or_outside(&self) -> Vec<NerTag> {
        self.tags
            .clone()
            .unwrap_or_else(|| vec![NerTag::O; self.tokens.len()])
    }

    pub(crate) fn replace_token(&mut self, i: usize, token: Token) {
        self.tokens[i] = token;
    }

    /// Space-joined token text.
    pub fn text(&self) -> String {
        self.tokens
            .iter()
            .map(Token::as_str)
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Space-joined normalized token text.
    pub fn normalized_text(&self) -> String {
        self.tokens
            .iter()
            .map(Token::normalized)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A table: header row (row 0) and an `n x m` body grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    id: String,
    header: Vec<Cell>,
    body: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(id: impl Into<String>, header: Vec<Cell>, body: Vec<Vec<Cell>>) -> Result<Self> {
        let id = id.into();
        let invalid = |reason: String| Error::InvalidTable {
            id: id.clone(),
            reason,
        };
        if header.is_empty() {
            return Err(invalid("table needs at least one column".into()));
        }
        if body.is_empty() {
            return Err(invalid("table needs at least one body row".into()));
        }
        for (i, row) in body.iter().enumerate() {
            if row.len() != header.len() {
                return Err(invalid(format!(
                    "body row {} has {} cells, header has {}",
                    i + 1,
                    row.len(),
                    header.len()
                )));
            }
        }
        Ok(Table { id, header, body })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn header(&self) -> &[Cell] {
        &self.header
    }

    pub fn body(&self) -> &[Vec<Cell>] {
        &self.body
    }

    /// Number of body rows (`n`).
    pub fn n_rows(&self) -> usize {
        self.body.len()
    }

    /// Number of columns (`m`).
    pub fn n_cols(&self) -> usize {
        self.header.len()
    }

    /// Row `i` of the table; row 0 is the header.
    pub fn row(&self, i: usize) -> Result<&[Cell]> {
        match i {
            0 => Ok(&self.header),
            _ => self.body.get(i - 1).map(Vec::as_slice).ok_or(Error::Range {
                what: "rows",
                index: i,
                len: self.n_rows() + 1,
            }),
        }
    }

    /// Cell at row `i` (0 = header) and column `j`.
    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        if i == 0 {
            &self.header[j]
        } else {
            &self.body[i - 1][j]
        }
    }

    pub(crate) fn cell_mut(&mut self, i: usize, j: usize) -> &mut Cell {
        if i == 0 {
            &mut self.header[j]
        } else {
            &mut self.body[i - 1][j]
        }
    }

    /// Column `j`: the header cell followed by the body cells, top to bottom.
    pub fn column(&self, j: usize) -> Result<Vec<&Cell>> {
        if j >= self.n_cols() {
            return Err(Error::Range {
                what: "columns",
                index: j,
                len: self.n_cols(),
            });
        }
        Ok(std::iter::once(&self.header[j])
            .chain(self.body.iter().map(|row| &row[j]))
            .collect())
    }

    /// All cells in row-major order starting with the header, with coordinates.
    pub fn cells(&self) -> impl Iterator<Item = ((usize, usize), &Cell)> {
        let m = self.n_cols();
        (0..=self.n_rows()).flat_map(move |i| (0..m).map(move |j| ((i, j), self.cell(i, j))))
    }

    pub fn is_fully_tagged(&self) -> bool {
        self.cells().all(|(_, c)| c.tags().is_some())
    }

    /// Number of tokens whose tag is not `O`.
    pub fn entity_token_count(&self) -> usize {
        self.cells()
            .filter_map(|(_, c)| c.tags())
            .flatten()
            .filter(|t| **t != NerTag::O)
            .count()
    }

    /// Copy of the table with every tag removed.
    pub fn without_tags(&self) -> Table {
        let strip = |c: &Cell| Cell::untagged(c.tokens.clone());
        Table {
            id: self.id.clone(),
            header: self.header.iter().map(strip).collect(),
            body: self
                .body
                .iter()
                .map(|r| r.iter().map(strip).collect())
                .collect(),
        }
    }
}

/// Set of entity types carried by any token of `cells`.
pub fn entity_types_in<'a>(cells: impl IntoIterator<Item = &'a Cell>) -> BTreeSet<EntityType> {
    cells
        .into_iter()
        .filter_map(Cell::tags)
        .flatten()
        .filter_map(|t| t.entity())
        .collect()
}

/// An ordered collection of tables with unique ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    tables: Vec<Table>,
}

impl Corpus {
    pub fn new(tables: Vec<Table>) -> Result<Self> {
        let mut seen = HashSet::new();
        for t in &tables {
            if !seen.insert(t.id()) {
                return Err(Error::DuplicateId(t.id().to_owned()));
            }
        }
        Ok(Corpus { tables })
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    pub fn into_tables(self) -> Vec<Table> {
        self.tables
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.id() == id)
    }

    /// Sub-corpus of the tables at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Corpus {
        Corpus {
            tables: indices.iter().map(|&i| self.tables[i].clone()).collect(),
        }
    }
}

/// Summary statistics of a corpus.
///
/// Token counts are taken over every cell, header and body, with empty cells
/// counting as zero. Kurtosis is the excess (Fisher) kurtosis of the
/// population moments; a zero-variance distribution reports 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub mean_tokens_per_cell: f64,
    pub std_tokens_per_cell: f64,
    pub kurtosis_tokens_per_cell: f64,
    pub mean_columns: f64,
    pub std_columns: f64,
}

pub fn compute_stats(corpus: &Corpus) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("corpus has no tables".into()));
    }
    let token_counts: Vec<f64> = corpus
        .tables()
        .iter()
        .flat_map(|t| t.cells().map(|(_, c)| c.len() as f64))
        .collect();
    let columns: Vec<f64> = corpus.tables().iter().map(|t| t.n_cols() as f64).collect();

    let (mean_tok, var_tok, m4_tok) = central_moments(&token_counts);
    let (mean_col, var_col, _) = central_moments(&columns);
    let kurtosis = if var_tok > 0.0 {
        m4_tok / (var_tok * var_tok) - 3.0
    } else {
        0.0
    };
    Ok(CorpusStats {
        mean_tokens_per_cell: mean_tok,
        std_tokens_per_cell: var_tok.sqrt(),
        kurtosis_tokens_per_cell: kurtosis,
        mean_columns: mean_col,
        std_columns: var_col.sqrt(),
    })
}

/// Mean, second and fourth central moments (population convention).
fn central_moments(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (m2, m4) = xs.iter().fold((0.0, 0.0), |(m2, m4), &x| {
        let d = x - mean;
        let d2 = d * d;
        (m2 + d2, m4 + d2 * d2)
    });
    (mean, m2 / n, m4 / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(text: &str) -> Cell {
        Cell::from_text(text)
    }

    fn tagged(text: &str, tag: NerTag) -> Cell {
        Cell::uniform(crate::text::tokenize(text), tag)
    }

    #[test]
    fn column_of_smallest_table() {
        let t = Table::new("t", vec![cell("A")], vec![vec![cell("x")]]).unwrap();
        let col = t.column(0).unwrap();
        assert_eq!(col, vec![&cell("A"), &cell("x")]);
        assert!(matches!(t.column(1), Err(Error::Range { index: 1, .. })));
    }

    #[test]
    fn column_of_pressure_table() {
        let t = Table::new(
            "fig1",
            vec![cell("Tag"), cell("Design pressure")],
            vec![
                vec![cell("P-101"), cell("10 bar")],
                vec![cell("P-102"), cell("16 bar")],
                vec![cell("V-201"), cell("2.5 barg")],
            ],
        )
        .unwrap();
        let col = t.column(1).unwrap();
        let texts: Vec<_> = col.iter().map(|c| c.text()).collect();
        assert_eq!(texts, ["Design pressure", "10 bar", "16 bar", "2.5 barg"]);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let r = Table::new("t", vec![cell("a"), cell("b")], vec![vec![cell("x")]]);
        assert!(matches!(r, Err(Error::InvalidTable { .. })));
        assert!(Table::new("t", vec![cell("a")], vec![]).is_err());
        assert!(Table::new("t", vec![], vec![vec![]]).is_err());
    }

    #[test]
    fn token_validation() {
        assert!(Token::new("").is_err());
        assert!(Token::new("a b").is_err());
        assert!(Token::new("DN50").is_ok());
    }

    #[test]
    fn tag_length_must_match() {
        let toks = crate::text::tokenize("a b");
        assert!(Cell::new(toks.clone(), Some(vec![NerTag::O])).is_err());
        assert!(Cell::new(toks, Some(vec![NerTag::O, NerTag::Eq])).is_ok());
    }

    #[test]
    fn tag_strings_round_trip() {
        for t in NerTag::ALL {
            assert_eq!(t.as_str().parse::<NerTag>().unwrap(), t);
        }
        assert!("B-EQ".parse::<NerTag>().is_err());
    }

    #[test]
    fn entity_types() {
        assert!(entity_types_in([&cell("a b")]).is_empty());
        assert!(entity_types_in([&tagged("a", NerTag::O)]).is_empty());
        let pump = tagged("Pump", NerTag::Eq);
        assert_eq!(entity_types_in([&pump]), BTreeSet::from([EntityType::Eq]));
        let mixed = Cell::new(
            crate::text::tokenize("pressure bar x"),
            Some(vec![NerTag::Quant, NerTag::Uom, NerTag::O]),
        )
        .unwrap();
        assert_eq!(
            entity_types_in([&mixed]),
            BTreeSet::from([EntityType::Quant, EntityType::Uom])
        );
    }

    #[test]
    fn constant_stats() {
        let t = Table::new(
            "t",
            vec![cell("a b c"), cell("d e f")],
            vec![vec![cell("g h i"), cell("j k l")]],
        )
        .unwrap();
        let s = compute_stats(&Corpus::new(vec![t]).unwrap()).unwrap();
        assert_eq!(s.mean_tokens_per_cell, 3.0);
        assert_eq!(s.std_tokens_per_cell, 0.0);
        assert_eq!(s.kurtosis_tokens_per_cell, 0.0);
        assert_eq!(s.mean_columns, 2.0);
        assert_eq!(s.std_columns, 0.0);
    }

    #[test]
    fn empty_corpus_stats_fail() {
        assert!(matches!(
            compute_stats(&Corpus::default()),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let t = Table::new("t", vec![cell("a")], vec![vec![cell("b")]]).unwrap();
        assert!(matches!(
            Corpus::new(vec![t.clone(), t]),
            Err(Error::DuplicateId(_))
        ));
    }
}
