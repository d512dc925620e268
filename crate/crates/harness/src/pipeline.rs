//! Experiment pipelines: encode, compress (through the size cache), form the
//! matrix, classify leave-one-out, and write every intermediate to disk.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use cdm_core::calibration::{estimate_offset, DEFAULT_MAX_LEN, DEFAULT_TRIALS};
use cdm_core::classify::{leave_one_out, LooResult};
use cdm_core::compressor::{CachedCompressor, CompressorSpec, SizeCache};
use cdm_core::measures::{compute_sizes, matrix_from_sizes, CorpusItem, MeasureError, MeasureSpec, PairSizes};
use cdm_core::stats::{compare_methods, MethodComparison};
use cdm_core::{CalibrationPoint, DistanceMatrix, OffsetModel};
use serde::Serialize;

use crate::config::MeasureKind;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub sizes: PairSizes,
    pub matrix: DistanceMatrix,
    pub loo: LooResult,
}

pub fn calibrate(
    spec: &CompressorSpec,
    cache: &SizeCache,
    max_len: usize,
    trials: usize,
    seed: u64,
) -> Result<(OffsetModel, Vec<CalibrationPoint>)> {
    estimate_offset(&CachedCompressor::new(spec, cache), max_len, trials, seed)
        .with_context(|| format!("calibrating {}", spec.id))
}

/// Turns a measure choice into a concrete measure, calibrating the offset
/// when `cdm-offset` is asked for without one.
pub fn resolve_measure(
    kind: MeasureKind,
    offset: Option<u64>,
    spec: &CompressorSpec,
    cache: &SizeCache,
    seed: u64,
) -> Result<MeasureSpec> {
    Ok(match kind {
        MeasureKind::Cdm => MeasureSpec::Cdm,
        MeasureKind::Ncd => MeasureSpec::Ncd,
        MeasureKind::CdmOffset => match offset {
            Some(offset) => MeasureSpec::CdmOffset { offset },
            None => {
                let (model, _) = calibrate(spec, cache, DEFAULT_MAX_LEN, DEFAULT_TRIALS, seed)?;
                log::info!("calibrated offset for {}: {} (intercept {:.3})", spec.id, model.offset, model.intercept);
                MeasureSpec::CdmOffset { offset: model.offset }
            }
        },
    })
}

pub fn sizes_for(items: &[CorpusItem], spec: &CompressorSpec, cache: &SizeCache) -> Result<PairSizes> {
    Ok(compute_sizes(items, &CachedCompressor::new(spec, cache))?)
}

pub fn classify_sizes(sizes: &PairSizes, measure: MeasureSpec, k: usize) -> Result<(DistanceMatrix, LooResult)> {
    let matrix: DistanceMatrix = matrix_from_sizes(sizes, measure)?;
    let loo = leave_one_out(&matrix, k)?;
    Ok((matrix, loo))
}

pub fn run_pipeline(
    items: &[CorpusItem],
    spec: &CompressorSpec,
    measure: MeasureSpec,
    k: usize,
    cache: &SizeCache,
) -> Result<RunOutput> {
    let sizes = sizes_for(items, spec, cache)?;
    let (matrix, loo) = classify_sizes(&sizes, measure, k)?;
    Ok(RunOutput { sizes, matrix, loo })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub offset: u64,
    pub correct: Option<usize>,
    pub total: usize,
    /// Set when the offset is not below every compressed size.
    pub error: Option<String>,
    #[serde(skip)]
    pub loo: Option<LooResult>,
}

/// Re-forms the matrix for each offset from the same sizes; nothing is recompressed.
pub fn sweep_offset(sizes: &PairSizes, offsets: &[u64], k: usize) -> Result<Vec<SweepRow>> {
    offsets
        .iter()
        .map(|&offset| match classify_sizes(sizes, MeasureSpec::CdmOffset { offset }, k) {
            Ok((_, loo)) => Ok(SweepRow {
                offset,
                correct: Some(loo.correct()),
                total: loo.total(),
                error: None,
                loo: Some(loo),
            }),
            Err(e) => match e.downcast_ref::<MeasureError>() {
                Some(m @ MeasureError::OffsetTooLarge { .. }) => {
                    log::warn!("offset {offset}: {m}");
                    Ok(SweepRow { offset, correct: None, total: sizes.len(), error: Some(m.to_string()), loo: None })
                }
                _ => Err(e),
            },
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub method1: String,
    pub method2: String,
    #[serde(flatten)]
    pub result: MethodComparison,
}

#[derive(Debug, Clone)]
pub struct CompressorRun {
    pub spec: CompressorSpec,
    pub measure: MeasureSpec,
    pub outcome: Result<RunOutput, String>,
}

#[derive(Debug, Clone)]
pub struct CompressorComparison {
    pub runs: Vec<CompressorRun>,
    /// Each other compressor (method 1) against the first one (method 2).
    pub pairs: Vec<Comparison>,
}

/// Runs every spec over the same corpus. A spec that fails (typically a
/// missing external program) is reported and left out of the comparisons.
pub fn compare_compressors(
    items: &[CorpusItem],
    specs: &[CompressorSpec],
    measure: MeasureKind,
    offset: Option<u64>,
    k: usize,
    cache: &SizeCache,
    seed: u64,
) -> Result<CompressorComparison> {
    if specs.len() < 2 {
        bail!("comparing compressors needs at least two, got {}", specs.len());
    }
    let runs: Vec<CompressorRun> = specs
        .iter()
        .map(|spec| {
            let attempt = resolve_measure(measure, offset, spec, cache, seed)
                .and_then(|m| run_pipeline(items, spec, m, k, cache).map(|run| (m, run)));
            match attempt {
                Ok((measure, run)) => CompressorRun { spec: spec.clone(), measure, outcome: Ok(run) },
                Err(e) => {
                    log::warn!("skipping compressor {}: {e:#}", spec.id);
                    CompressorRun {
                        spec: spec.clone(),
                        measure: MeasureSpec::Cdm,
                        outcome: Err(format!("{e:#}")),
                    }
                }
            }
        })
        .collect();

    let mut pairs = Vec::new();
    if let Ok(reference) = &runs[0].outcome {
        for run in &runs[1..] {
            if let Ok(other) = &run.outcome {
                pairs.push(Comparison {
                    method1: run.spec.id.clone(),
                    method2: runs[0].spec.id.clone(),
                    result: compare_methods(&other.loo, &reference.loo)?,
                });
            }
        }
    }
    Ok(CompressorComparison { runs, pairs })
}

#[derive(Debug, Clone)]
pub struct MeasureComparison {
    pub sizes: PairSizes,
    pub baseline: (MeasureSpec, DistanceMatrix, LooResult),
    pub candidate: (MeasureSpec, DistanceMatrix, LooResult),
    pub comparison: Comparison,
}

/// Baseline is method 1, candidate method 2; both use one set of sizes.
pub fn compare_measures(
    items: &[CorpusItem],
    spec: &CompressorSpec,
    baseline: MeasureSpec,
    candidate: MeasureSpec,
    k: usize,
    cache: &SizeCache,
) -> Result<MeasureComparison> {
    let sizes = sizes_for(items, spec, cache)?;
    let (m1, l1) = classify_sizes(&sizes, baseline, k)?;
    let (m2, l2) = classify_sizes(&sizes, candidate, k)?;
    let comparison = Comparison {
        method1: baseline.to_string(),
        method2: candidate.to_string(),
        result: compare_methods(&l1, &l2)?,
    };
    Ok(MeasureComparison { sizes, baseline: (baseline, m1, l1), candidate: (candidate, m2, l2), comparison })
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(std::io::BufWriter::new(file))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// Row and column headers are item ids. Values use the shortest decimal
/// that parses back to the same `f64`.
pub fn write_matrix_csv(path: &Path, matrix: &DistanceMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let n = matrix.len();
    let mut header = vec!["item_id".to_string()];
    header.extend((0..n).map(|i| matrix.item_id(i).to_string()));
    w.write_record(&header)?;
    for i in 0..n {
        let mut row = vec![matrix.item_id(i).to_string()];
        row.extend((0..n).map(|j| matrix.get(i, j).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let ids: Vec<String> = r.headers()?.iter().skip(1).map(String::from).collect();
    let mut values = Vec::with_capacity(ids.len() * ids.len());
    for record in r.records() {
        let record = record?;
        for v in record.iter().skip(1) {
            values.push(v.parse().with_context(|| format!("bad matrix entry {v:?}"))?);
        }
    }
    if values.len() != ids.len() * ids.len() {
        bail!("{} is not a square matrix", path.display());
    }
    Ok((ids, values))
}

#[derive(Debug, Serialize)]
struct MatrixSidecar<'a> {
    compressor: &'a str,
    measure: MeasureSpec,
    items: Vec<SidecarItem<'a>>,
}

#[derive(Debug, Serialize)]
struct SidecarItem<'a> {
    item_id: &'a str,
    class_label: &'a str,
}

pub fn write_matrix(dir: &Path, name: &str, matrix: &DistanceMatrix) -> Result<()> {
    write_matrix_csv(&dir.join(format!("{name}.matrix.csv")), matrix)?;
    let sidecar = MatrixSidecar {
        compressor: &matrix.provenance.compressor_id,
        measure: matrix.provenance.measure,
        items: matrix
            .labels
            .iter()
            .map(|(item_id, class_label)| SidecarItem { item_id, class_label })
            .collect(),
    };
    write_json(&dir.join(format!("{name}.matrix.json")), &sidecar)
}

pub fn write_loo_csv(path: &Path, loo: &LooResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["item_id", "true_label", "predicted_label", "correct"])?;
    for item in &loo.per_item {
        w.write_record([
            item.item_id.as_str(),
            item.true_label.as_str(),
            item.predicted_label.as_str(),
            if item.correct { "1" } else { "0" },
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a leave-one-out CSV back; `k` is not stored per row and comes back as 0.
pub fn read_loo_csv(path: &Path) -> Result<LooResult> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut per_item = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != 4 {
            bail!("{}: row {} has {} fields, expected 4", path.display(), line + 2, record.len());
        }
        per_item.push(cdm_core::classify::LooItem {
            item_id: record[0].to_string(),
            true_label: record[1].to_string(),
            predicted_label: record[2].to_string(),
            correct: match &record[3] {
                "1" | "true" => true,
                "0" | "false" => false,
                other => bail!("{}: bad correct flag {other:?}", path.display()),
            },
        });
    }
    Ok(LooResult { k: 0, per_item })
}

#[derive(Debug, Serialize)]
pub struct LooSummary<'a> {
    pub compressor: &'a str,
    pub measure: MeasureSpec,
    pub k: usize,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

pub fn write_loo(dir: &Path, name: &str, loo: &LooResult, compressor: &str, measure: MeasureSpec) -> Result<()> {
    write_loo_csv(&dir.join(format!("{name}.loo.csv")), loo)?;
    let summary = LooSummary {
        compressor,
        measure,
        k: loo.k,
        correct: loo.correct(),
        total: loo.total(),
        accuracy: loo.accuracy(),
    };
    write_json(&dir.join(format!("{name}.loo.json")), &summary)
}

/// Writes sizes, matrix and leave-one-out results under `dir` as `name.*`.
pub fn persist_run(dir: &Path, name: &str, run: &RunOutput) -> Result<()> {
    write_json(&dir.join(format!("{name}.sizes.json")), &run.sizes)?;
    write_matrix(dir, name, &run.matrix)?;
    let p = &run.matrix.provenance;
    write_loo(dir, name, &run.loo, &p.compressor_id, p.measure)
}

/// One `.txt` per item holding its encoded bit string, mirroring the item ids.
pub fn persist_encoded(dir: &Path, items: &[CorpusItem]) -> Result<()> {
    for item in items {
        let path = dir.join(format!("{}.txt", item.id));
        std::fs::create_dir_all(path.parent().expect("item path has a parent"))?;
        std::fs::write(&path, &item.bytes).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdm_core::classify::LooItem;

    #[test]
    fn loo_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let loo = LooResult {
            k: 3,
            per_item: vec![
                LooItem { item_id: "a/x,1".into(), true_label: "a".into(), predicted_label: "a".into(), correct: true },
                LooItem { item_id: "b/y".into(), true_label: "b".into(), predicted_label: "a".into(), correct: false },
            ],
        };
        let path = dir.path().join("r.csv");
        write_loo_csv(&path, &loo).unwrap();
        let back = read_loo_csv(&path).unwrap();
        assert_eq!(back.per_item, loo.per_item);
    }
}
