//! Plain-text tables, CSV and JSON for experiment results.

use cdm_core::compressor::CompressorSpec;
use cdm_core::stats::MethodComparison;
use serde::Serialize;

use crate::pipeline::{Comparison, SweepRow};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Accuracy {
    pub method: String,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl Accuracy {
    pub fn new(method: impl Into<String>, correct: usize, total: usize) -> Self {
        let accuracy = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
        Self { method: method.into(), correct, total, accuracy }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub method: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportProvenance {
    pub tool_version: &'static str,
    pub seed: u64,
    pub k: usize,
    pub corpus_root: String,
    pub items: usize,
    pub compressors: Vec<CompressorSpec>,
}

impl ReportProvenance {
    pub fn new(seed: u64, k: usize, corpus_root: &std::path::Path, items: usize, compressors: Vec<CompressorSpec>) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION"),
            seed,
            k,
            corpus_root: corpus_root.display().to_string(),
            items,
            compressors,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub provenance: ReportProvenance,
    pub accuracies: Vec<Accuracy>,
    pub comparisons: Vec<Comparison>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<Skipped>,
    /// Relative paths of the files the numbers above were computed from.
    pub artifacts: Vec<String>,
}

pub fn format_p(p: f64) -> String {
    if p >= 1e-3 {
        format!("{p:.4}")
    } else {
        format!("{p:.3e}")
    }
}

fn fraction(correct: usize, total: usize) -> String {
    format!("{correct}/{total}")
}

/// Left-aligned first column, right-aligned rest, a rule under the header.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut out = String::new();
        for (i, cell) in cells.enumerate() {
            if i == 0 {
                out.push_str(&format!("{cell:<w$}", w = widths[0]));
            } else {
                out.push_str(&format!("  {cell:>w$}", w = widths[i]));
            }
        }
        out.trim_end().to_string() + "\n"
    };
    let mut out = line(&mut header.iter().copied());
    let rule: usize = widths.iter().sum::<usize>() + 2 * (cols - 1);
    out.push_str(&"-".repeat(rule));
    out.push('\n');
    for row in rows {
        out.push_str(&line(&mut row.iter().map(String::as_str)));
    }
    out
}

pub fn render_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv of utf-8 fields")
}

/// Correct results per method.
pub fn accuracy_rows(acc: &[Accuracy]) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let rows = acc
        .iter()
        .map(|a| vec![format!("by {}", a.method), fraction(a.correct, a.total)])
        .collect();
    (vec!["Method", "Correct/total"], rows)
}

/// One row per compared pair: `a b c d N p`.
pub fn comparison_rows(pairs: &[Comparison]) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let rows = pairs
        .iter()
        .map(|c| {
            let n = &c.result.counts;
            vec![
                format!("{} - {}", c.method1, c.method2),
                n.a.to_string(),
                n.b.to_string(),
                n.c.to_string(),
                n.d.to_string(),
                n.total().to_string(),
                format_p(c.result.p_f64()),
            ]
        })
        .collect();
    (vec!["Method 1 - Method 2", "a", "b", "c", "d", "N", "p"], rows)
}

pub fn sweep_rows(rows: &[SweepRow]) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let rows = rows
        .iter()
        .map(|r| {
            let cell = match r.correct {
                Some(c) => fraction(c, r.total),
                None => "invalid".to_string(),
            };
            vec![r.offset.to_string(), cell]
        })
        .collect();
    (vec!["Offset", "Correct/total"], rows)
}

/// The paired 2×2 outcome table, method 1 down the side, method 2 across.
pub fn render_two_by_two(method1: &str, method2: &str, c: &MethodComparison) -> String {
    let n = &c.counts;
    let header = [method1, "", "Correct", "Incorrect", "Total"];
    let rows = vec![
        vec![String::new(), "Correct".into(), n.a.to_string(), n.b.to_string(), (n.a + n.b).to_string()],
        vec![String::new(), "Incorrect".into(), n.c.to_string(), n.d.to_string(), (n.c + n.d).to_string()],
        vec![String::new(), "Total".into(), (n.a + n.c).to_string(), (n.b + n.d).to_string(), n.total().to_string()],
    ];
    let mut out = format!("rows: {method1}; columns: {method2}\n");
    out.push_str(&render_table(&header, &rows));
    out.push_str(&format!("p = {}\n", format_p(c.p_f64())));
    out
}

pub fn two_by_two_csv(method1: &str, method2: &str, c: &MethodComparison) -> String {
    let n = &c.counts;
    render_csv(
        &["method1", "method2", "a", "b", "c", "d", "n", "p"],
        &[vec![
            method1.into(),
            method2.into(),
            n.a.to_string(),
            n.b.to_string(),
            n.c.to_string(),
            n.d.to_string(),
            n.total().to_string(),
            c.p_f64().to_string(),
        ]],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdm_core::stats::{mcnemar_exact, ConfusionCounts};

    fn table_vii() -> MethodComparison {
        MethodComparison {
            counts: ConfusionCounts { a: 40, b: 1, c: 8, d: 26 },
            p_value: mcnemar_exact(1, 8),
            method1_correct: 41,
            method2_correct: 48,
        }
    }

    #[test]
    fn two_by_two_layout() {
        let text = render_two_by_two("cdm", "cdm-offset(45)", &table_vii());
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[3].split_whitespace().eq(["Correct", "40", "1", "41"]));
        assert!(lines[4].split_whitespace().eq(["Incorrect", "8", "26", "34"]));
        assert!(lines[5].split_whitespace().eq(["Total", "48", "27", "75"]));
        assert_eq!(lines[6], "p = 0.0195");
    }

    #[test]
    fn p_formatting() {
        assert_eq!(format_p(0.0354), "0.0354");
        assert_eq!(format_p(1.0), "1.0000");
        assert_eq!(format_p(3.5e-5), "3.500e-5");
    }

    #[test]
    fn comparison_row() {
        let pairs = vec![Comparison { method1: "gzip".into(), method2: "bzip2".into(), result: table_vii() }];
        let (h, rows) = comparison_rows(&pairs);
        let text = render_table(&h, &rows);
        assert!(text.lines().nth(2).unwrap().split_whitespace().eq(["gzip", "-", "bzip2", "40", "1", "8", "26", "75", "0.0195"]));
        let csv = render_csv(&h, &rows);
        assert_eq!(csv.lines().nth(1).unwrap(), "gzip - bzip2,40,1,8,26,75,0.0195");
    }
}
