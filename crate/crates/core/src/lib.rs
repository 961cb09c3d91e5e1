//! Sub-cell named entity recognition in tables.
//!
//! The crate is organised around the pipeline a table goes through:
//!
//! - [`table`]: tables, cells, IO tags, corpora and their statistics
//! - [`corpus_io`]: the on-disk corpus format (`<id>.table.json`)
//! - [`encoding`]: linearisation with cell-level positions, header/body
//!   segments and the row/column visibility mask
//! - [`neural`]: a small transformer encoder with hand-written gradients
//! - [`rdl`]: equipment/quantity/unit dictionaries read from a triple file
//! - [`augment`]: knowledge-graph table synthesis (RDLTab) and label-wise
//!   token replacement (LWTR)
//! - [`rule_ner`]: the vocabulary matching baseline
//! - [`metrics`]: token-level F1
//! - [`harness`]: cross validation, synthetic corpora and the context probe

pub mod augment;
pub mod corpus_io;
pub mod encoding;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod neural;
pub mod rdl;
pub mod rule_ner;
pub mod table;
pub mod text;

pub use error::{Error, Result};
pub use table::{Cell, Corpus, CorpusStats, EntityType, NerTag, Table, Token};
