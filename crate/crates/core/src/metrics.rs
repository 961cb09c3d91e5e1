//! Token-level evaluation of IO tag predictions.
//!
//! Every token with a gold tag is one decision. For an entity class `c`:
//! `tp` counts tokens with gold `c` and predicted `c`, `fp` tokens predicted
//! `c` with another gold tag, `fn` tokens with gold `c` predicted otherwise.
//! Micro scores pool the counts of the four entity classes; `O` is never a
//! positive class. A ratio with a zero denominator (nothing to find and
//! nothing predicted) scores 1.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{Corpus, EntityType, NerTag, Table};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ClassScores {
    fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let ratio = |num: u64, den: u64| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        ClassScores {
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            f1: ratio(2 * tp, 2 * tp + fp + fn_),
            support: tp + fn_,
            tp,
            fp,
            fn_,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub per_class: BTreeMap<EntityType, ClassScores>,
    /// `confusion[gold][pred]`, indexed by [`NerTag::index`].
    pub confusion: [[u64; NerTag::COUNT]; NerTag::COUNT],
    pub tokens: u64,
}

impl EvalReport {
    fn from_confusion(confusion: [[u64; NerTag::COUNT]; NerTag::COUNT]) -> Self {
        let mut per_class = BTreeMap::new();
        let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
        for ent in EntityType::ALL {
            let c = ent.tag().index();
            let tp = confusion[c][c];
            let fp: u64 = (0..NerTag::COUNT).filter(|&g| g != c).map(|g| confusion[g][c]).sum();
            let fn_: u64 = (0..NerTag::COUNT).filter(|&p| p != c).map(|p| confusion[c][p]).sum();
            tp_all += tp;
            fp_all += fp;
            fn_all += fn_;
            per_class.insert(ent, ClassScores::from_counts(tp, fp, fn_));
        }
        let micro = ClassScores::from_counts(tp_all, fp_all, fn_all);
        EvalReport {
            micro_precision: micro.precision,
            micro_recall: micro.recall,
            micro_f1: micro.f1,
            per_class,
            confusion,
            tokens: confusion.iter().flatten().sum(),
        }
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<8} {:>9} {:>9} {:>9} {:>9}", "class", "precision", "recall", "f1", "support");
        for (ent, c) in &self.per_class {
            let _ = writeln!(
                s,
                "{:<8} {:>9.4} {:>9.4} {:>9.4} {:>9}",
                ent.name(),
                c.precision,
                c.recall,
                c.f1,
                c.support
            );
        }
        let support: u64 = self.per_class.values().map(|c| c.support).sum();
        let _ = writeln!(
            s,
            "{:<8} {:>9.4} {:>9.4} {:>9.4} {:>9}",
            "micro", self.micro_precision, self.micro_recall, self.micro_f1, support
        );
        let _ = writeln!(s);
        let _ = write!(s, "{:<8}", "gold\\pred");
        for t in NerTag::ALL {
            let _ = write!(s, " {:>8}", t.as_str());
        }
        let _ = writeln!(s);
        for g in NerTag::ALL {
            let _ = write!(s, "{:<9}", g.as_str());
            for p in NerTag::ALL {
                let _ = write!(s, " {:>8}", self.confusion[g.index()][p.index()]);
            }
            let _ = writeln!(s);
        }
        s
    }
}

fn accumulate(
    gold: &Table,
    pred: &Table,
    confusion: &mut [[u64; NerTag::COUNT]; NerTag::COUNT],
) -> Result<()> {
    let err = |message: String| Error::Alignment {
        table: gold.id().to_owned(),
        message,
    };
    if gold.n_rows() != pred.n_rows() || gold.n_cols() != pred.n_cols() {
        return Err(err(format!(
            "gold is {}x{}, prediction is {}x{}",
            gold.n_rows(),
            gold.n_cols(),
            pred.n_rows(),
            pred.n_cols()
        )));
    }
    for ((i, j), g) in gold.cells() {
        let Some(gold_tags) = g.tags() else { continue };
        let p = pred.cell(i, j);
        if p.len() != g.len() {
            return Err(err(format!(
                "cell ({i}, {j}) has {} gold tokens and {} predicted",
                g.len(),
                p.len()
            )));
        }
        let Some(pred_tags) = p.tags() else {
            return Err(err(format!("cell ({i}, {j}) has no predicted tags")));
        };
        for (gt, pt) in gold_tags.iter().zip(pred_tags) {
            confusion[gt.index()][pt.index()] += 1;
        }
    }
    Ok(())
}

/// Scores aligned `(gold, prediction)` table pairs.
pub fn evaluate_pairs<'a>(
    pairs: impl IntoIterator<Item = (&'a Table, &'a Table)>,
) -> Result<EvalReport> {
    let mut confusion = [[0u64; NerTag::COUNT]; NerTag::COUNT];
    for (g, p) in pairs {
        accumulate(g, p, &mut confusion)?;
    }
    Ok(EvalReport::from_confusion(confusion))
}

/// Scores `pred` against `gold`, matching tables by id.
pub fn evaluate(gold: &Corpus, pred: &Corpus) -> Result<EvalReport> {
    let mut pairs = Vec::with_capacity(gold.len());
    for g in gold.tables() {
        let p = pred.get(g.id()).ok_or_else(|| Error::Alignment {
            table: g.id().to_owned(),
            message: "missing from predictions".into(),
        })?;
        pairs.push((g, p));
    }
    evaluate_pairs(pairs)
}
