use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;

use tabner::augment::{derive_seed, AugmentConfig, Lwtr, RdlTab};
use tabner::corpus_io::{read_corpus, write_corpus};
use tabner::encoding::Linearizer;
use tabner::harness::{
    cross_validate, generate_synthetic_corpus, probe_context, synthetic_graph, ExperimentConfig,
};
use tabner::metrics::{evaluate, evaluate_pairs};
use tabner::neural::{Checkpoint, Rng};
use tabner::rdl::{load_graph, write_triples};
use tabner::rule_ner::RuleNer;
use tabner::table::{compute_stats, Corpus};
use tabner::{Error, Result};

#[derive(Parser)]
#[command(name = "tabner", version, about = "Named entity recognition inside table cells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Lwtr,
    Rdltab,
}

#[derive(Subcommand)]
enum Command {
    /// Token and column statistics of a corpus
    Stats {
        corpus: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Write augmented copies of every table of a corpus
    Augment {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        n: u8,
        #[arg(long)]
        triples: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Annotation-free columns kept by RDLTab
        #[arg(long, default_value_t = 2)]
        k: usize,
        corpus: PathBuf,
        out: PathBuf,
    },
    /// Cross-validate a model as described by a JSON config
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Token-level scores of predicted against gold tags
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Dictionary baseline; scores against the corpus tags when present
    RuleNer {
        #[arg(long)]
        triples: PathBuf,
        corpus: PathBuf,
        /// Directory for the predicted corpus
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Logits of the unit "l" in a random and a consistent context
    Probe {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Generate a tagged synthetic corpus from a triple file
    Synth {
        #[arg(long)]
        triples: PathBuf,
        #[arg(long)]
        tables: usize,
        #[arg(long)]
        rows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        out: PathBuf,
    },
    /// Write a synthetic equipment graph as a triple file
    SynthGraph {
        #[arg(long, default_value_t = 50)]
        equipment: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        out: PathBuf,
    },
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_owned(),
            source: e,
        })?;
    }
    fs::write(path, content).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn augment(mode: Mode, n: usize, triples: Option<&Path>, seed: u64, k: usize, corpus: &Corpus) -> Result<Corpus> {
    let graph = match (mode, triples) {
        (Mode::Rdltab, Some(p)) => Some(load_graph(p)?),
        (Mode::Rdltab, None) => return Err(Error::Config("--triples is required for rdltab".into())),
        (Mode::Lwtr, _) => None,
    };
    let rdltab = match &graph {
        Some(g) => {
            let cfg = AugmentConfig {
                k,
                n_samples: n,
                seed,
                ..Default::default()
            };
            Some(RdlTab::new(g, corpus, cfg)?)
        }
        None => None,
    };
    let lwtr = Lwtr::new(corpus, n);
    let mut out = Vec::with_capacity(corpus.len() * n);
    for (idx, table) in corpus.tables().iter().enumerate() {
        let mut rng = Rng::seed_from_u64(derive_seed(seed, idx as u64));
        for i in 0..n {
            let t = match &rdltab {
                Some(r) => r.generate(table, &mut rng)?,
                None => lwtr.generate(table, &mut rng)?,
            };
            out.push(t.with_id(format!("{}.aug{i}", table.id())));
        }
    }
    Corpus::new(out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stats { corpus, json } => {
            let corpus = read_corpus(&corpus)?;
            let s = compute_stats(&corpus)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&s)?);
            } else {
                println!("tables: {}", corpus.len());
                println!("tokens per cell: mean {:.4}, std {:.4}", s.mean_tokens_per_cell, s.std_tokens_per_cell);
                println!("tokens per cell: excess kurtosis {:.4}", s.kurtosis_tokens_per_cell);
                println!("columns per table: mean {:.4}, std {:.4}", s.mean_columns, s.std_columns);
            }
        }
        Command::Augment {
            mode,
            n,
            triples,
            seed,
            k,
            corpus,
            out,
        } => {
            let corpus = read_corpus(&corpus)?;
            let augmented = augment(mode, n as usize, triples.as_deref(), seed, k, &corpus)?;
            write_corpus(&augmented, &out)?;
            println!("wrote {} tables to {}", augmented.len(), out.display());
        }
        Command::Train { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let record = cross_validate(&cfg)?;
            for f in &record.folds {
                println!(
                    "fold {}: {} epochs, best epoch {}, test micro F1 {:.4}",
                    f.fold,
                    f.trace.len(),
                    f.best_epoch,
                    f.test.micro_f1
                );
            }
            println!(
                "lr {:e}, batch {}: micro F1 {:.4} ± {:.4}",
                record.learning_rate, record.batch_size, record.mean_f1, record.std_f1
            );
        }
        Command::Eval { gold, pred, json } => {
            let report = evaluate(&read_corpus(&gold)?, &read_corpus(&pred)?)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_text());
            }
        }
        Command::RuleNer { triples, corpus, out } => {
            let graph = load_graph(&triples)?;
            let corpus = read_corpus(&corpus)?;
            let ner = RuleNer::new(&graph);
            let preds = Corpus::new(
                corpus
                    .tables()
                    .iter()
                    .map(|t| ner.predict(t).apply(t))
                    .collect(),
            )?;
            if corpus.tables().iter().any(|t| t.is_fully_tagged()) {
                let report = evaluate_pairs(corpus.tables().iter().zip(preds.tables()))?;
                print!("{}", report.to_text());
            }
            if let Some(out) = out {
                write_corpus(&preds, &out)?;
                println!("wrote {} tables to {}", preds.len(), out.display());
            }
        }
        Command::Probe { model, json } => {
            let ck = Checkpoint::load(&model)?;
            let vocab = ck.vocabulary();
            let linearizer = Linearizer::new(ck.attention_mode, usize::MAX);
            let report = probe_context(&ck.to_model()?, &vocab, &linearizer)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_text());
            }
        }
        Command::Synth {
            triples,
            tables,
            rows,
            seed,
            out,
        } => {
            let graph = load_graph(&triples)?;
            let corpus = generate_synthetic_corpus(&graph, tables, rows, seed)?;
            write_corpus(&corpus, &out)?;
            println!("wrote {} tables to {}", corpus.len(), out.display());
        }
        Command::SynthGraph { equipment, seed, out } => {
            let triples = synthetic_graph(equipment, seed)?;
            write_file(&out, &write_triples(&triples))?;
            println!("wrote {} triples to {}", triples.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Divergence { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
