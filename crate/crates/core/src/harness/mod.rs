//! Experiment driver: cross validation, the full-attention ablation,
//! synthetic corpora and the context probe.

mod config;
mod cv;
mod probe;
mod synth;

pub use config::{AugMode, ExperimentConfig, SEED_ENV};
pub use cv::{
    assign_folds, cross_validate, cross_validate_corpus, run_ablation, run_split, split_validation,
    write_run_outputs, FoldRecord, GridPoint, RunRecord, SplitOutcome,
};
pub use probe::{probe_context, probe_tables, probe_with_tables, ProbeReport, ProbeResult};
pub use synth::{generate_synthetic_corpus, generate_synthetic_corpus_with, synthetic_graph, SynthOptions};
