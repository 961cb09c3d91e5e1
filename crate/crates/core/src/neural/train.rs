use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::encoder::{accumulate_gradients, predict_tags};
use super::model::EncoderModel;
use super::optim::{linear_lr, Optimizer, OptimizerKind};
use super::Rng;
use crate::encoding::{LinearizedInput, Linearizer, Vocabulary};
use crate::error::{Error, Result};
use crate::metrics;
use crate::table::{Corpus, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub seed: u64,
    pub lr_grid: Vec<f64>,
    pub batch_grid: Vec<usize>,
    pub optimizer: OptimizerKind,
    /// Generate augmented tables once and reuse them every epoch.
    pub fixed_augmentation: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 5e-4,
            batch_size: 4,
            max_epochs: 20,
            early_stop_patience: 3,
            seed: 0,
            lr_grid: vec![5e-5, 1e-5, 5e-4],
            batch_grid: vec![2, 4, 8],
            optimizer: OptimizerKind::Sgd,
            fixed_augmentation: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.early_stop_patience == 0 {
            return Err(Error::Config(
                "batch_size, max_epochs and early_stop_patience must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Produces extra training tables from an original one.
pub trait Augmenter {
    /// Tables generated per original and epoch.
    fn samples_per_table(&self) -> usize;

    fn augment(&self, table: &Table, rng: &mut Rng) -> Result<Table>;
}

pub struct TrainSetup<'a> {
    pub vocab: &'a Vocabulary,
    pub linearizer: Linearizer,
    pub augmenter: Option<&'a dyn Augmenter>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub valid_f1: f64,
    /// Number of tables seen this epoch, originals plus augmented.
    pub stream_len: usize,
}

pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation F1.
    pub model: EncoderModel,
    pub trace: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Runs the model over `table` and returns a copy carrying the predicted tags.
pub fn predict_table(
    model: &EncoderModel,
    vocab: &Vocabulary,
    linearizer: &Linearizer,
    table: &Table,
) -> Result<Table> {
    let input = linearizer.linearize(table, vocab)?;
    let tags = predict_tags(model, &input)?;
    let mut out = table.clone();
    for span in &input.spans {
        out.cell_mut(span.row, span.col)
            .set_tags(Some(tags[span.start..span.start + span.len].to_vec()))?;
    }
    Ok(out)
}

fn validation_f1(
    model: &EncoderModel,
    valid: &Corpus,
    setup: &TrainSetup<'_>,
) -> Result<f64> {
    let mut pairs = Vec::with_capacity(valid.len());
    for table in valid.tables() {
        let pred = predict_table(model, setup.vocab, &setup.linearizer, table)?;
        pairs.push((table.clone(), pred));
    }
    Ok(metrics::evaluate_pairs(pairs.iter().map(|(g, p)| (g, p)))?.micro_f1)
}

/// Mini-batch training with a linearly decaying learning rate and early
/// stopping on validation micro F1.
pub fn train(
    mut model: EncoderModel,
    train: &Corpus,
    valid: &Corpus,
    cfg: &TrainConfig,
    setup: &TrainSetup<'_>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() || valid.is_empty() {
        return Err(Error::EmptyInput("training and validation corpora must be non-empty".into()));
    }
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let originals: Vec<LinearizedInput> = train
        .tables()
        .iter()
        .map(|t| setup.linearizer.linearize(t, setup.vocab))
        .collect::<Result<_>>()?;

    let mut optimizer = Optimizer::new(cfg.optimizer, &model.params);
    let mut grads = model.params.zeros_like();
    let mut trace = Vec::new();
    let mut best: Option<(f64, usize, EncoderModel)> = None;
    let mut since_best = 0;
    let mut fixed_aug: Option<Vec<LinearizedInput>> = None;
    let mut stopped_early = false;

    for epoch in 0..cfg.max_epochs {
        let lr = linear_lr(cfg.learning_rate, epoch, cfg.max_epochs);

        let augmented: Vec<LinearizedInput> = match (setup.augmenter, &fixed_aug) {
            (None, _) => Vec::new(),
            (Some(_), Some(fixed)) => fixed.clone(),
            (Some(aug), None) => {
                let mut out = Vec::with_capacity(train.len() * aug.samples_per_table());
                for table in train.tables() {
                    for _ in 0..aug.samples_per_table() {
                        let t = aug.augment(table, &mut rng)?;
                        out.push(setup.linearizer.linearize(&t, setup.vocab)?);
                    }
                }
                if cfg.fixed_augmentation {
                    fixed_aug = Some(out.clone());
                }
                out
            }
        };

        let stream: Vec<&LinearizedInput> = originals.iter().chain(augmented.iter()).collect();
        let mut order: Vec<usize> = (0..stream.len()).collect();
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let labeled: usize = batch.iter().map(|&i| stream[i].labeled_count()).sum();
            if labeled == 0 {
                continue;
            }
            grads.fill(0.0);
            let scale = 1.0 / labeled as f64;
            for &i in batch {
                let (s, c) =
                    accumulate_gradients(&model, stream[i], scale, Some(&mut rng), &mut grads)?;
                loss_sum += s;
                loss_count += c;
            }
            optimizer.step(&mut model.params, &grads, lr);
        }
        let train_loss = if loss_count == 0 {
            0.0
        } else {
            loss_sum / loss_count as f64
        };
        if !train_loss.is_finite() || !model.params.all_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: train_loss,
            });
        }

        let valid_f1 = validation_f1(&model, valid, setup)?;
        log::debug!("epoch {epoch}: lr {lr:.3e} loss {train_loss:.4} valid F1 {valid_f1:.4}");
        trace.push(EpochRecord {
            epoch,
            learning_rate: lr,
            train_loss,
            valid_f1,
            stream_len: stream.len(),
        });

        let improved = best.as_ref().is_none_or(|(f1, _, _)| valid_f1 > *f1);
        if improved {
            best = Some((valid_f1, epoch, model.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.early_stop_patience {
                stopped_early = epoch + 1 < cfg.max_epochs;
                break;
            }
        }
    }

    let (_, best_epoch, best_model) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        model: best_model,
        trace,
        best_epoch,
        stopped_early,
    })
}
