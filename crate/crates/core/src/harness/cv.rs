use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::config::{AugMode, ExperimentConfig};
use crate::augment::{derive_seed, AugmentConfig, Lwtr, RdlTab};
use crate::corpus_io::read_corpus;
use crate::encoding::{build_vocab, AttentionMode, Linearizer, Vocabulary};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_pairs, EvalReport};
use crate::neural::{
    predict_table, train, Augmenter, Checkpoint, EncoderModel, EpochRecord, Rng, TrainConfig,
    TrainOutcome, TrainSetup,
};
use crate::rdl::{load_graph, RdlGraph};
use crate::table::Corpus;
use crate::text::tokenize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub seed: u64,
    pub train_ids: Vec<String>,
    pub valid_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub trace: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub test: EvalReport,
}

/// Mean validation F1 of one grid point on the first fold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub mean_valid_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub attention_mode: AttentionMode,
    pub aug_mode: AugMode,
    pub n_samples: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub grid: Vec<GridPoint>,
    pub folds: Vec<FoldRecord>,
    pub mean_f1: f64,
    pub std_f1: f64,
}

/// Shuffles `0..n` and cuts it into `folds` contiguous groups whose sizes
/// differ by at most one, larger groups first.
pub fn assign_folds(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::Config("folds must be at least 2".into()));
    }
    if n < folds {
        return Err(Error::Config(format!("{n} tables cannot fill {folds} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut Rng::seed_from_u64(seed));
    let (base, extra) = (n / folds, n % folds);
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        out.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(out)
}

/// Splits `indices` into (train, valid) with `round(fraction * len)` tables,
/// at least one, held out for validation.
pub fn split_validation(indices: &[usize], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if indices.len() < 2 {
        return Err(Error::Config("need at least two tables to hold out validation".into()));
    }
    let mut order = indices.to_vec();
    order.shuffle(&mut Rng::seed_from_u64(seed));
    let n_valid = ((fraction * indices.len() as f64).round() as usize).clamp(1, indices.len() - 1);
    let valid = order.split_off(order.len() - n_valid);
    Ok((order, valid))
}

pub struct SplitOutcome {
    pub outcome: TrainOutcome,
    pub vocab: Vocabulary,
    pub linearizer: Linearizer,
    pub test: Option<EvalReport>,
}

/// Training vocabulary plus every token of every graph surface name.
fn vocabulary(train: &Corpus, graph: Option<&RdlGraph>, min_count: usize) -> Vocabulary {
    let mut vocab = build_vocab(train, min_count);
    if let Some(g) = graph {
        vocab.extend_sorted(
            g.surface_names()
                .flat_map(tokenize)
                .map(|t| t.as_str().to_owned()),
        );
    }
    vocab
}

fn make_augmenter<'a>(
    cfg: &ExperimentConfig,
    train: &Corpus,
    graph: Option<&'a RdlGraph>,
) -> Result<Option<Box<dyn Augmenter + 'a>>> {
    Ok(match cfg.aug_mode {
        AugMode::None => None,
        AugMode::Lwtr => Some(Box::new(Lwtr::new(train, cfg.n_samples))),
        AugMode::Rdltab => {
            let graph = graph.ok_or_else(|| Error::Config("rdltab augmentation needs a triple file".into()))?;
            let aug_cfg = AugmentConfig {
                n_samples: cfg.n_samples,
                ..cfg.augment.clone()
            };
            Some(Box::new(RdlTab::new(graph, train, aug_cfg)?))
        }
    })
}

/// Trains one model on `train`, early-stopping on `valid`, and scores it on
/// `test` when given. Model initialisation and training use `seed`.
pub fn run_split(
    cfg: &ExperimentConfig,
    train_cfg: &TrainConfig,
    train_set: &Corpus,
    valid: &Corpus,
    test: Option<&Corpus>,
    graph: Option<&RdlGraph>,
    seed: u64,
) -> Result<SplitOutcome> {
    let vocab = vocabulary(train_set, graph, cfg.vocab_min_count);
    let linearizer = Linearizer::new(cfg.attention_mode, cfg.max_len);
    let mut enc = cfg.encoder.clone();
    if cfg.attention_mode == AttentionMode::Full {
        // positions run over the whole sequence
        enc.max_position = enc.max_position.max(cfg.max_len);
    }
    let model = EncoderModel::new(enc, vocab.size(), seed)?;
    let augmenter = make_augmenter(cfg, train_set, graph)?;
    let setup = TrainSetup {
        vocab: &vocab,
        linearizer,
        augmenter: augmenter.as_deref(),
    };
    let tcfg = TrainConfig {
        seed,
        ..train_cfg.clone()
    };
    let outcome = train(model, train_set, valid, &tcfg, &setup)?;
    let test = match test {
        Some(test) => {
            let preds = test
                .tables()
                .iter()
                .map(|t| predict_table(&outcome.model, &vocab, &linearizer, t))
                .collect::<Result<Vec<_>>>()?;
            Some(evaluate_pairs(test.tables().iter().zip(&preds))?)
        }
        None => None,
    };
    Ok(SplitOutcome {
        outcome,
        vocab,
        linearizer,
        test,
    })
}

fn ids(corpus: &Corpus) -> Vec<String> {
    corpus.tables().iter().map(|t| t.id().to_owned()).collect()
}

/// Loads corpus and graph from the configured paths and cross-validates.
pub fn cross_validate(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let corpus_dir = cfg
        .corpus
        .as_ref()
        .ok_or_else(|| Error::Config("config has no corpus path".into()))?;
    let corpus = read_corpus(corpus_dir)?;
    let graph = cfg.triples.as_ref().map(load_graph).transpose()?;
    let record = cross_validate_corpus(cfg, &corpus, graph.as_ref())?;
    if let Some(dir) = &cfg.output_dir {
        write_run_outputs(&record, dir)?;
    }
    Ok(record)
}

/// k-fold cross validation. With `grid_search` the learning rate and batch
/// size are chosen on the first fold by best validation F1 and reused.
pub fn cross_validate_corpus(cfg: &ExperimentConfig, corpus: &Corpus, graph: Option<&RdlGraph>) -> Result<RunRecord> {
    cfg.validate()?;
    let folds = assign_folds(corpus.len(), cfg.folds, cfg.seed)?;

    let split = |f: usize| -> Result<(Corpus, Corpus, Corpus, u64)> {
        let seed = derive_seed(cfg.seed, f as u64 + 1);
        let rest: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        let (tr, va) = split_validation(&rest, cfg.valid_fraction, seed)?;
        Ok((corpus.select(&tr), corpus.select(&va), corpus.select(&folds[f]), seed))
    };

    let mut train_cfg = cfg.train.clone();
    let mut grid = Vec::new();
    let mut first: Option<SplitOutcome> = None;
    if cfg.grid_search {
        let (tr, va, te, seed) = split(0)?;
        let mut best: Option<(f64, SplitOutcome, f64, usize)> = None;
        for &lr in &cfg.train.lr_grid {
            for &bs in &cfg.train.batch_grid {
                let tc = TrainConfig {
                    learning_rate: lr,
                    batch_size: bs,
                    ..cfg.train.clone()
                };
                let out = run_split(cfg, &tc, &tr, &va, Some(&te), graph, seed)?;
                let trace = &out.outcome.trace;
                let mean = trace.iter().map(|e| e.valid_f1).sum::<f64>() / trace.len() as f64;
                log::info!("grid lr {lr:e} batch {bs}: mean valid F1 {mean:.4}");
                grid.push(GridPoint {
                    learning_rate: lr,
                    batch_size: bs,
                    mean_valid_f1: mean,
                });
                if best.as_ref().is_none_or(|(m, ..)| mean > *m) {
                    best = Some((mean, out, lr, bs));
                }
            }
        }
        let (_, out, lr, bs) = best.expect("grid is non-empty");
        train_cfg.learning_rate = lr;
        train_cfg.batch_size = bs;
        first = Some(out);
    }

    let mut records = Vec::with_capacity(folds.len());
    for f in 0..folds.len() {
        let (tr, va, te, seed) = split(f)?;
        let out = match first.take() {
            Some(out) if f == 0 => out,
            _ => run_split(cfg, &train_cfg, &tr, &va, Some(&te), graph, seed)?,
        };
        if cfg.save_models {
            if let Some(dir) = &cfg.output_dir {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                Checkpoint::from_model(&out.outcome.model, &out.vocab, cfg.attention_mode)
                    .save(dir.join(format!("fold{f}.model.json")))?;
            }
        }
        let test = out.test.expect("test split was given");
        log::info!("fold {f}: test micro F1 {:.4}", test.micro_f1);
        records.push(FoldRecord {
            fold: f,
            seed,
            train_ids: ids(&tr),
            valid_ids: ids(&va),
            test_ids: ids(&te),
            trace: out.outcome.trace,
            best_epoch: out.outcome.best_epoch,
            stopped_early: out.outcome.stopped_early,
            test,
        });
    }

    let f1s: Vec<f64> = records.iter().map(|r| r.test.micro_f1).collect();
    let mean = f1s.iter().sum::<f64>() / f1s.len() as f64;
    let var = f1s.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / f1s.len() as f64;
    Ok(RunRecord {
        attention_mode: cfg.attention_mode,
        aug_mode: cfg.aug_mode,
        n_samples: cfg.n_samples,
        seed: cfg.seed,
        learning_rate: train_cfg.learning_rate,
        batch_size: train_cfg.batch_size,
        grid,
        folds: records,
        mean_f1: mean,
        std_f1: var.sqrt(),
    })
}

/// Cross validation with full attention, global positions and one segment.
pub fn run_ablation(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let cfg = ExperimentConfig {
        attention_mode: AttentionMode::Full,
        ..cfg.clone()
    };
    cross_validate(&cfg)
}

fn curve_csv(trace: &[EpochRecord], value: impl Fn(&EpochRecord) -> f64) -> String {
    let mut s = String::from("epoch,value\n");
    for e in trace {
        writeln!(s, "{},{}", e.epoch, value(e)).expect("writing to a string");
    }
    s
}

/// Writes `run.json` and per-fold loss and validation-F1 curves.
pub fn write_run_outputs(record: &RunRecord, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: String, content: String| {
        let p = dir.join(name);
        fs::write(&p, content).map_err(|e| Error::io(&p, e))
    };
    write("run.json".into(), serde_json::to_string_pretty(record)? + "\n")?;
    for f in &record.folds {
        write(format!("fold{}_loss.csv", f.fold), curve_csv(&f.trace, |e| e.train_loss))?;
        write(format!("fold{}_valid_f1.csv", f.fold), curve_csv(&f.trace, |e| e.valid_f1))?;
    }
    Ok(())
}
