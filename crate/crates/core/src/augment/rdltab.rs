//! RDLTab: synthesize a consistently tagged table from an original table,
//! the knowledge graph and header pools drawn from the training corpus.
//!
//! Column layout of the result, for an original with `n` body rows:
//!
//! 1. up to `k` annotation-free columns of the original (all `O`);
//! 2. an equipment column, one sampled equipment name per row (`I-EQ`),
//!    headed by a header taken from a training column that holds equipment;
//! 3. one quantity column per row `i`, headed by a quantity applicable to
//!    row `i`'s equipment (`I-QUANT`); only row `i` is filled, with a random
//!    number (`O`) optionally followed by an applicable unit (`I-UoM`);
//! 4. a tag column with one generated tag per row (`I-TAG`), headed by a
//!    header taken from a training column that holds tags.

use rand::Rng as _;

use super::tag::generate_tag;
use super::AugmentConfig;
use crate::error::{Error, Result};
use crate::neural::{Augmenter, Rng};
use crate::rdl::RdlGraph;
use crate::table::{entity_types_in, Cell, Corpus, EntityType, NerTag, Table, Token};
use crate::text::tokenize;

/// Header cells of training columns holding equipment and tag annotations.
#[derive(Clone, Debug, Default)]
pub struct HeaderPools {
    pub eq_headers: Vec<Cell>,
    pub tag_headers: Vec<Cell>,
}

impl HeaderPools {
    /// One entry per qualifying training column, so sampling is uniform over columns.
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut pools = HeaderPools::default();
        for table in corpus.tables() {
            for j in 0..table.n_cols() {
                let column = table.column(j).expect("in range");
                let types = entity_types_in(column.iter().copied());
                let header = tagged_copy(&table.header()[j]);
                if types.contains(&EntityType::Eq) {
                    pools.eq_headers.push(header.clone());
                }
                if types.contains(&EntityType::Tag) {
                    pools.tag_headers.push(header);
                }
            }
        }
        pools
    }
}

/// Copy of a cell with tags filled in as `O` where it is unannotated.
fn tagged_copy(cell: &Cell) -> Cell {
    Cell::new(cell.tokens().to_vec(), Some(cell.tags_or_outside())).expect("lengths match")
}

fn surface_tokens(name: &str) -> Vec<Token> {
    tokenize(name)
}

fn random_value(cfg: &AugmentConfig, rng: &mut Rng) -> Token {
    let (lo, hi) = cfg.numeric_value_range;
    let v: f64 = rng.random_range(lo..hi);
    let decimals = rng.random_range(0..=2usize);
    Token::new(format!("{v:.decimals$}")).expect("formatted numbers have no whitespace")
}

pub struct RdlTab<'a> {
    graph: &'a RdlGraph,
    pools: HeaderPools,
    cfg: AugmentConfig,
}

impl<'a> RdlTab<'a> {
    pub fn new(graph: &'a RdlGraph, train: &Corpus, cfg: AugmentConfig) -> Result<Self> {
        RdlTab::with_pools(graph, HeaderPools::from_corpus(train), cfg)
    }

    pub fn with_pools(graph: &'a RdlGraph, pools: HeaderPools, cfg: AugmentConfig) -> Result<Self> {
        cfg.validate()?;
        if pools.eq_headers.is_empty() {
            return Err(Error::Precondition(
                "no training column carries an EQ annotation".into(),
            ));
        }
        if pools.tag_headers.is_empty() {
            return Err(Error::Precondition(
                "no training column carries a TAG annotation".into(),
            ));
        }
        if graph.equipment_with_quantities().is_empty() {
            return Err(Error::Precondition("graph has no equipment with quantities".into()));
        }
        Ok(RdlTab { graph, pools, cfg })
    }

    pub fn config(&self) -> &AugmentConfig {
        &self.cfg
    }

    /// Generates one augmented table; its id is `<original id>.aug`.
    pub fn generate(&self, table: &Table, rng: &mut Rng) -> Result<Table> {
        let rows = table.n_rows();
        // each column: header cell followed by `rows` body cells
        let mut columns: Vec<Vec<Cell>> = Vec::new();

        let free: Vec<usize> = (0..table.n_cols())
            .filter(|&j| entity_types_in(table.column(j).expect("in range")).is_empty())
            .collect();
        if self.cfg.k > 0 && free.is_empty() {
            log::warn!(
                "table {:?} has no annotation-free column; augmenting without seed columns",
                table.id()
            );
        }
        let take = self.cfg.k.min(free.len());
        let mut picked: Vec<usize> = rand::seq::index::sample(rng, free.len(), take)
            .into_iter()
            .map(|i| free[i])
            .collect();
        picked.sort_unstable();
        for j in picked {
            columns.push(
                table
                    .column(j)?
                    .into_iter()
                    .map(|c| Cell::uniform(c.tokens().to_vec(), NerTag::O))
                    .collect(),
            );
        }

        let equipment: Vec<&str> = (0..rows)
            .map(|_| self.graph.sample_equipment_with_quantity(rng))
            .collect::<Result<_>>()?;
        let eq_header = &self.pools.eq_headers[rng.random_range(0..self.pools.eq_headers.len())];
        let mut eq_column = vec![eq_header.clone()];
        eq_column.extend(
            equipment
                .iter()
                .map(|name| Cell::uniform(surface_tokens(name), NerTag::Eq)),
        );
        columns.push(eq_column);

        for (i, eq) in equipment.iter().enumerate() {
            let quant = self.graph.sample_quantity(eq, rng)?;
            let mut column = vec![Cell::uniform(surface_tokens(quant), NerTag::Quant)];
            for r in 0..rows {
                if r != i {
                    column.push(Cell::empty_tagged());
                    continue;
                }
                let mut tokens = vec![random_value(&self.cfg, rng)];
                let mut tags = vec![NerTag::O];
                if rng.random_bool(self.cfg.uom_probability) {
                    if let Ok(uom) = self.graph.sample_uom(quant, rng) {
                        let uom_tokens = surface_tokens(uom);
                        tags.extend(std::iter::repeat_n(NerTag::Uom, uom_tokens.len()));
                        tokens.extend(uom_tokens);
                    }
                }
                column.push(Cell::new(tokens, Some(tags))?);
            }
            columns.push(column);
        }

        let tag_header =
            &self.pools.tag_headers[rng.random_range(0..self.pools.tag_headers.len())];
        let mut tag_column = vec![tag_header.clone()];
        for eq in &equipment {
            let tag = generate_tag(eq, &self.cfg.tag_pattern, rng);
            tag_column.push(Cell::uniform(vec![Token::new(tag)?], NerTag::Tag));
        }
        columns.push(tag_column);

        let header: Vec<Cell> = columns.iter().map(|c| c[0].clone()).collect();
        let body: Vec<Vec<Cell>> = (1..=rows)
            .map(|r| columns.iter().map(|c| c[r].clone()).collect())
            .collect();
        Table::new(format!("{}.aug", table.id()), header, body)
    }
}

impl Augmenter for RdlTab<'_> {
    fn samples_per_table(&self) -> usize {
        self.cfg.n_samples
    }

    fn augment(&self, table: &Table, rng: &mut Rng) -> Result<Table> {
        self.generate(table, rng)
    }
}

/// One RDLTab sample for `table`, with header pools taken from `train`.
pub fn rdltab_augment(
    table: &Table,
    graph: &RdlGraph,
    train: &Corpus,
    cfg: &AugmentConfig,
    rng: &mut Rng,
) -> Result<Table> {
    RdlTab::new(graph, train, cfg.clone())?.generate(table, rng)
}
