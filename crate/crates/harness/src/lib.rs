//! Experiment harness: corpus ingestion, pipelines and reports behind the `cdm` command.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod pipeline;
pub mod report;
pub mod synthetic;

pub use config::{MeasureKind, Settings};
pub use corpus::{ingest, load_corpus, CorpusManifest};
pub use pipeline::{compare_compressors, compare_measures, run_pipeline, sweep_offset};
pub use synthetic::make_synthetic_corpus;
