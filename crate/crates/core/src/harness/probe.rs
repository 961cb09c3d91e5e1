use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::encoding::{Linearizer, Vocabulary};
use crate::error::{Error, Result};
use crate::neural::{forward, EncoderModel};
use crate::table::{Cell, NerTag, Table};

const TARGET: &str = "l";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub context: String,
    /// Unnormalized scores in `NerTag::ALL` order.
    pub logits: [f64; NerTag::COUNT],
    pub argmax: NerTag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub target: String,
    pub results: Vec<ProbeResult>,
    /// The class each context is expected to favour; informative only.
    pub expected: Vec<(String, NerTag)>,
}

impl ProbeReport {
    pub fn to_text(&self) -> String {
        let mut s = format!("target token {:?}\n", self.target);
        let names: Vec<&str> = NerTag::ALL.iter().map(|t| t.as_str()).collect();
        writeln!(s, "{:<12} {}", "context", names.join("  ")).unwrap();
        for r in &self.results {
            let vals: Vec<String> = r.logits.iter().map(|v| format!("{v:.3}")).collect();
            writeln!(s, "{:<12} {}  argmax {}", r.context, vals.join("  "), r.argmax.as_str()).unwrap();
        }
        for (ctx, tag) in &self.expected {
            let got = self.results.iter().find(|r| &r.context == ctx).map(|r| r.argmax);
            let mark = if got == Some(*tag) { "as expected" } else { "differs" };
            writeln!(s, "expected {ctx}: {} ({mark})", tag.as_str()).unwrap();
        }
        s
    }
}

fn text_table(id: &str, header: &[&str], body: &[&[&str]]) -> Table {
    Table::new(
        id,
        header.iter().map(|h| Cell::from_text(h)).collect(),
        body.iter()
            .map(|row| row.iter().map(|c| Cell::from_text(c)).collect())
            .collect(),
    )
    .expect("probe tables are rectangular")
}

/// The two probe tables: a unit under an unrelated quantity header, and the
/// same unit under a header it belongs to.
pub fn probe_tables() -> (Table, Table) {
    let random = text_table(
        "probe-random",
        &["equipment", "power"],
        &[&["pump", "8 celsius"], &["tank", "90 l"]],
    );
    let consistent = text_table(
        "probe-consistent",
        &["equipment", "capacity"],
        &[&["pump", "8 m3"], &["tank", "90 l"]],
    );
    (random, consistent)
}

/// Logits of token `tok` of cell `(row, col)` (row 0 is the header) in each table.
pub fn probe_with_tables(
    model: &EncoderModel,
    vocab: &Vocabulary,
    linearizer: &Linearizer,
    tables: &[(&str, &Table)],
    cell: (usize, usize),
    tok: usize,
) -> Result<Vec<ProbeResult>> {
    let mut out = Vec::with_capacity(tables.len());
    for (context, table) in tables {
        let input = linearizer.linearize(table, vocab)?;
        let span = input
            .spans
            .iter()
            .find(|s| (s.row, s.col) == cell)
            .filter(|s| tok < s.len)
            .ok_or_else(|| Error::Probe(format!("table {:?} has no token {tok} in cell {cell:?}", table.id())))?;
        let target = &input.tokens[span.start + tok];
        if !vocab.contains(target.as_str()) {
            return Err(Error::Probe(format!("target token {:?} is not in the vocabulary", target.as_str())));
        }
        let logits = forward(model, &input)?;
        let row = logits.row(span.start + tok);
        let mut values = [0.0; NerTag::COUNT];
        for (v, l) in values.iter_mut().zip(row.iter()) {
            *v = *l;
        }
        let best = (0..NerTag::COUNT)
            .fold(0, |b, k| if values[k] > values[b] { k } else { b });
        out.push(ProbeResult {
            context: context.to_string(),
            logits: values,
            argmax: NerTag::from_index(best).expect("index below COUNT"),
        });
    }
    Ok(out)
}

/// Scores the unit token "l" in a random and in a consistent context.
pub fn probe_context(model: &EncoderModel, vocab: &Vocabulary, linearizer: &Linearizer) -> Result<ProbeReport> {
    if !vocab.contains(TARGET) {
        return Err(Error::Probe(format!("target token {TARGET:?} is not in the vocabulary")));
    }
    let (random, consistent) = probe_tables();
    let results = probe_with_tables(
        model,
        vocab,
        linearizer,
        &[("random", &random), ("consistent", &consistent)],
        (2, 1),
        1,
    )?;
    Ok(ProbeReport {
        target: TARGET.into(),
        results,
        expected: vec![("random".into(), NerTag::O), ("consistent".into(), NerTag::Uom)],
    })
}
