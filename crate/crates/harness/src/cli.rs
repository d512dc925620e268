use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cdm_core::calibration::{DEFAULT_MAX_LEN, DEFAULT_TRIALS};
use cdm_core::compressor::SizeCache;
use cdm_core::encoding::encode_events;
use cdm_core::measures::{CorpusItem, MeasureSpec};
use cdm_core::stats::compare_methods;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{MeasureKind, Overrides, Settings};
use crate::corpus::{ingest, load_corpus, load_score, CorpusManifest};
use crate::pipeline::{self, write_json, write_text, Comparison};
use crate::report::{self, Accuracy, ExperimentReport, ReportProvenance, Skipped};
use crate::synthetic::make_synthetic_corpus;

pub const SWEEP_OFFSETS: [u64; 7] = [0, 20, 40, 45, 60, 80, 100];

#[derive(Debug, Parser)]
#[command(name = "cdm", version, about = "Compression-based similarity experiments on piano-roll scores")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON settings file; flags below override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Compressor id: a preset (blocksort, lz, bzip2, gzip, zip) or one defined in the config.
    #[arg(long, global = true)]
    pub compressor: Option<String>,
    #[arg(long, global = true)]
    pub measure: Option<MeasureKind>,
    /// Offset for cdm-offset; calibrated when omitted.
    #[arg(long, global = true)]
    pub offset: Option<u64>,
    /// Neighbours consulted per prediction [default: 5].
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for compression.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Persistent compressed-size cache (CSV).
    #[arg(long, global = true)]
    pub cache_path: Option<PathBuf>,
    /// Where results are written [default: out].
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the compressor's per-file overhead from random inputs.
    Calibrate {
        #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
        max_len: usize,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
    },
    /// Encode one score (.mid, .midi or .json) as a piano-roll bit string.
    Encode {
        input: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Distance matrix of a corpus.
    Distances { corpus: PathBuf },
    /// Leave-one-out K-NN classification of a corpus.
    Classify { corpus: PathBuf },
    /// Paired significance test between two leave-one-out result files.
    Compare {
        method1: PathBuf,
        method2: PathBuf,
        #[arg(long)]
        name1: Option<String>,
        #[arg(long)]
        name2: Option<String>,
    },
    /// Classify with several compressors; the first is the reference.
    CompareCompressors {
        corpus: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "blocksort,lz")]
        compressors: Vec<String>,
    },
    /// Plain CDM against CDM with offset on the same compressed sizes.
    CompareMeasures { corpus: PathBuf },
    /// Classification accuracy for each offset value.
    SweepOffset {
        corpus: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = SWEEP_OFFSETS)]
        offsets: Vec<u64>,
    },
    /// Write a seeded synthetic corpus in the ingest layout.
    MakeSynthetic {
        root: PathBuf,
        #[arg(long, default_value_t = 5)]
        classes: usize,
        #[arg(long, default_value_t = 15)]
        pieces: usize,
    },
}

impl GlobalArgs {
    pub fn settings(&self) -> Result<Settings> {
        let base = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        base.apply(Overrides {
            compressor: self.compressor.clone(),
            measure: self.measure,
            offset: self.offset,
            k: self.k,
            seed: self.seed,
            jobs: self.jobs,
            cache_path: self.cache_path.clone(),
            out_dir: self.out_dir.clone(),
        })
    }
}

struct Session {
    settings: Settings,
    cache: SizeCache,
}

impl Session {
    fn open(settings: Settings) -> Result<Self> {
        let cache = match &settings.cache_path {
            Some(path) => SizeCache::open(path).with_context(|| format!("opening cache {}", path.display()))?,
            None => SizeCache::in_memory(),
        };
        Ok(Self { settings, cache })
    }

    fn out(&self, name: &str) -> PathBuf {
        self.settings.out_dir.join(name)
    }

    fn corpus(&self, root: &Path) -> Result<(CorpusManifest, Vec<CorpusItem>)> {
        let (manifest, _warnings) = ingest(root)?;
        let items = load_corpus(&manifest)?;
        write_json(&self.out("manifest.json"), &ManifestFile { manifest: &manifest, settings: &self.settings })?;
        pipeline::persist_encoded(&self.out("encoded"), &items)?;
        Ok((manifest, items))
    }

    fn provenance(&self, manifest: &CorpusManifest, compressors: Vec<cdm_core::compressor::CompressorSpec>) -> ReportProvenance {
        ReportProvenance::new(self.settings.seed, self.settings.k, &manifest.root, manifest.items.len(), compressors)
    }

    /// Prints a table and keeps a text and CSV copy next to the other outputs.
    fn emit_table(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<String> {
        let text = report::render_table(header, rows);
        write_text(&self.out(&format!("{name}.txt")), &text)?;
        write_text(&self.out(&format!("{name}.csv")), &report::render_csv(header, rows))?;
        Ok(text)
    }
}

#[derive(Serialize)]
struct ManifestFile<'a> {
    #[serde(flatten)]
    manifest: &'a CorpusManifest,
    settings: &'a Settings,
}

#[derive(Serialize)]
struct CalibrationFile<'a> {
    #[serde(flatten)]
    model: &'a cdm_core::OffsetModel,
    rounded_intercept: i64,
    max_len: usize,
    trials: usize,
    seed: u64,
}

pub fn run(cli: Cli) -> Result<()> {
    let settings = cli.global.settings()?;
    if let Some(jobs) = settings.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let ctx = Session::open(settings)?;
    let result = dispatch(&ctx, cli.command);
    ctx.cache.flush()?;
    result
}

fn dispatch(ctx: &Session, command: Command) -> Result<()> {
    let s = &ctx.settings;
    match command {
        Command::Calibrate { max_len, trials } => {
            let spec = s.resolve(&s.compressor)?;
            let (model, points) = pipeline::calibrate(&spec, &ctx.cache, max_len, trials, s.seed)?;
            let file = CalibrationFile {
                model: &model,
                rounded_intercept: model.rounded_intercept(),
                max_len,
                trials,
                seed: s.seed,
            };
            write_json(&ctx.out("calibration.json"), &file)?;
            let mut csv = String::from("length,mean_size\n");
            for p in &points {
                csv.push_str(&format!("{},{}\n", p.input_length, p.mean_size));
            }
            write_text(&ctx.out("calibration.csv"), &csv)?;
            println!(
                "{}: slope {:.4}, intercept {:.4}, offset {}",
                model.compressor_id, model.slope, model.intercept, model.offset
            );
        }
        Command::Encode { input, output } => {
            let score = load_score(&input)?;
            for w in &score.warnings {
                log::warn!("{w}");
            }
            let bits = encode_events(&score.events);
            match output {
                Some(path) => write_text(&path, bits.as_str())?,
                None => println!("{}", bits.as_str()),
            }
        }
        Command::Distances { corpus } => {
            let (_, items) = ctx.corpus(&corpus)?;
            let spec = s.resolve(&s.compressor)?;
            let measure = pipeline::resolve_measure(s.measure, s.offset, &spec, &ctx.cache, s.seed)?;
            let sizes = pipeline::sizes_for(&items, &spec, &ctx.cache)?;
            let matrix: cdm_core::DistanceMatrix = cdm_core::measures::matrix_from_sizes(&sizes, measure)?;
            write_json(&ctx.out("distances.sizes.json"), &sizes)?;
            pipeline::write_matrix(&s.out_dir, "distances", &matrix)?;
            println!("{} × {} {} matrix under {} written", matrix.len(), matrix.len(), measure, spec.id);
        }
        Command::Classify { corpus } => {
            let (manifest, items) = ctx.corpus(&corpus)?;
            let spec = s.resolve(&s.compressor)?;
            let measure = pipeline::resolve_measure(s.measure, s.offset, &spec, &ctx.cache, s.seed)?;
            let run = pipeline::run_pipeline(&items, &spec, measure, s.k, &ctx.cache)?;
            pipeline::persist_run(&s.out_dir, "classify", &run)?;
            let acc = vec![Accuracy::new(format!("{} {}", spec.id, measure), run.loo.correct(), run.loo.total())];
            let (h, rows) = report::accuracy_rows(&acc);
            print!("{}", ctx.emit_table("classify.table", &h, &rows)?);
            let report = ExperimentReport {
                provenance: ctx.provenance(&manifest, vec![spec]),
                accuracies: acc,
                comparisons: Vec::new(),
                sweep: Vec::new(),
                skipped: Vec::new(),
                artifacts: vec!["classify.matrix.csv".into(), "classify.loo.csv".into()],
            };
            write_json(&ctx.out("classify.report.json"), &report)?;
        }
        Command::Compare { method1, method2, name1, name2 } => {
            let x = pipeline::read_loo_csv(&method1)?;
            let y = pipeline::read_loo_csv(&method2)?;
            let stem = |p: &Path| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let comparison = Comparison {
                method1: name1.unwrap_or_else(|| stem(&method1)),
                method2: name2.unwrap_or_else(|| stem(&method2)),
                result: compare_methods(&x, &y)?,
            };
            let (h, rows) = report::comparison_rows(std::slice::from_ref(&comparison));
            print!("{}", ctx.emit_table("compare", &h, &rows)?);
            write_json(&ctx.out("compare.json"), &comparison)?;
        }
        Command::CompareCompressors { corpus, compressors } => {
            let (manifest, items) = ctx.corpus(&corpus)?;
            let specs = compressors.iter().map(|id| s.resolve(id)).collect::<Result<Vec<_>>>()?;
            let result =
                pipeline::compare_compressors(&items, &specs, s.measure, s.offset, s.k, &ctx.cache, s.seed)?;
            let mut accuracies = Vec::new();
            let mut skipped = Vec::new();
            let mut artifacts = Vec::new();
            for run in &result.runs {
                match &run.outcome {
                    Ok(out) => {
                        let name = format!("compressor-{}", run.spec.id);
                        pipeline::persist_run(&s.out_dir, &name, out)?;
                        artifacts.push(format!("{name}.loo.csv"));
                        accuracies.push(Accuracy::new(run.spec.id.clone(), out.loo.correct(), out.loo.total()));
                    }
                    Err(reason) => skipped.push(Skipped { method: run.spec.id.clone(), reason: reason.clone() }),
                }
            }
            let (h, rows) = report::accuracy_rows(&accuracies);
            print!("{}", ctx.emit_table("compressors.accuracy", &h, &rows)?);
            println!();
            let (h, rows) = report::comparison_rows(&result.pairs);
            print!("{}", ctx.emit_table("compressors.comparison", &h, &rows)?);
            for sk in &skipped {
                println!("skipped {}: {}", sk.method, sk.reason);
            }
            let report = ExperimentReport {
                provenance: ctx.provenance(&manifest, specs),
                accuracies,
                comparisons: result.pairs,
                sweep: Vec::new(),
                skipped,
                artifacts,
            };
            write_json(&ctx.out("compressors.report.json"), &report)?;
        }
        Command::CompareMeasures { corpus } => {
            let (manifest, items) = ctx.corpus(&corpus)?;
            let spec = s.resolve(&s.compressor)?;
            let candidate = pipeline::resolve_measure(MeasureKind::CdmOffset, s.offset, &spec, &ctx.cache, s.seed)?;
            let r = pipeline::compare_measures(&items, &spec, MeasureSpec::Cdm, candidate, s.k, &ctx.cache)?;
            write_json(&ctx.out("measures.sizes.json"), &r.sizes)?;
            let mut artifacts = Vec::new();
            for (name, (measure, matrix, loo)) in [("measure-cdm", &r.baseline), ("measure-cdm-offset", &r.candidate)] {
                pipeline::write_matrix(&s.out_dir, name, matrix)?;
                pipeline::write_loo(&s.out_dir, name, loo, &spec.id, *measure)?;
                artifacts.push(format!("{name}.loo.csv"));
            }
            let c = &r.comparison;
            let text = report::render_two_by_two(&c.method1, &c.method2, &c.result);
            write_text(&ctx.out("measures.table.txt"), &text)?;
            write_text(&ctx.out("measures.table.csv"), &report::two_by_two_csv(&c.method1, &c.method2, &c.result))?;
            print!("{text}");
            let report = ExperimentReport {
                provenance: ctx.provenance(&manifest, vec![spec]),
                accuracies: vec![
                    Accuracy::new(c.method1.clone(), c.result.method1_correct as usize, r.baseline.2.total()),
                    Accuracy::new(c.method2.clone(), c.result.method2_correct as usize, r.candidate.2.total()),
                ],
                comparisons: vec![r.comparison.clone()],
                sweep: Vec::new(),
                skipped: Vec::new(),
                artifacts,
            };
            write_json(&ctx.out("measures.report.json"), &report)?;
        }
        Command::SweepOffset { corpus, offsets } => {
            let (manifest, items) = ctx.corpus(&corpus)?;
            let spec = s.resolve(&s.compressor)?;
            let sizes = pipeline::sizes_for(&items, &spec, &ctx.cache)?;
            write_json(&ctx.out("sweep.sizes.json"), &sizes)?;
            let rows = pipeline::sweep_offset(&sizes, &offsets, s.k)?;
            let mut artifacts = vec!["sweep.sizes.json".to_string()];
            for row in &rows {
                if let Some(loo) = &row.loo {
                    let name = format!("sweep-offset-{}", row.offset);
                    pipeline::write_loo(&s.out_dir, &name, loo, &spec.id, MeasureSpec::CdmOffset { offset: row.offset })?;
                    artifacts.push(format!("{name}.loo.csv"));
                }
            }
            let (h, table) = report::sweep_rows(&rows);
            print!("{}", ctx.emit_table("sweep.table", &h, &table)?);
            for row in rows.iter().filter(|r| r.error.is_some()) {
                println!("offset {} invalid: {}", row.offset, row.error.as_deref().unwrap_or_default());
            }
            let report = ExperimentReport {
                provenance: ctx.provenance(&manifest, vec![spec]),
                accuracies: Vec::new(),
                comparisons: Vec::new(),
                sweep: rows,
                skipped: Vec::new(),
                artifacts,
            };
            write_json(&ctx.out("sweep.report.json"), &report)?;
        }
        Command::MakeSynthetic { root, classes, pieces } => {
            let paths = make_synthetic_corpus(&root, classes, pieces, s.seed)?;
            println!("wrote {} scores in {} classes under {}", paths.len(), classes, root.display());
        }
    }
    Ok(())
}
