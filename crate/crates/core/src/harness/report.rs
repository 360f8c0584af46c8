//! Report files. Markdown follows the column order
//! `Scoring metric | Number | BLEU | SacreBLEU | ROUGE L | Sum`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::sweep::SweepTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown];

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

#[derive(Debug, Error)]
#[error("cannot write report {path}: {source}")]
pub struct ReportError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

fn hundredths(x: f64) -> i64 {
    (x * 100.0).round() as i64
}

fn fmt_hundredths(h: i64) -> String {
    let sign = if h < 0 { "-" } else { "" };
    let a = h.unsigned_abs();
    format!("{sign}{}.{:02}", a / 100, a % 100)
}

/// Two-decimal rendering.
pub fn fmt2(x: f64) -> String {
    fmt_hundredths(hundredths(x))
}

/// Sum of the three unrounded text scores, rounded once. It can differ by
/// 0.01 from the sum of the printed cells.
pub fn displayed_sum(bleu: f64, sacrebleu: f64, rouge_l: f64) -> String {
    fmt2(bleu + sacrebleu + rouge_l)
}

fn opt_pct(x: Option<f64>) -> String {
    x.map(|v| fmt2(v * 100.0)).unwrap_or_else(|| "-".into())
}

pub fn render_markdown(table: &SweepTable) -> String {
    let mut out = String::new();
    out.push_str("| Scoring metric | Number | BLEU | SacreBLEU | ROUGE L | Sum |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    for row in &table.rows {
        let r = &row.report;
        let _ = writeln!(
            out,
            "| {} | S={} | {} | {} | {} | {} |",
            row.metric.label(),
            row.s,
            fmt2(r.bleu),
            fmt2(r.sacrebleu),
            fmt2(r.rouge_l),
            displayed_sum(r.bleu, r.sacrebleu, r.rouge_l)
        );
    }
    out.push('\n');
    out.push_str("| Scoring metric | Number | IOU | F1 | Weighted F1 | Samples | Failed |\n");
    out.push_str("|---|---|---|---|---|---|---|\n");
    for row in &table.rows {
        let r = &row.report;
        let _ = writeln!(
            out,
            "| {} | S={} | {} | {} | {} | {} | {} |",
            row.metric.label(),
            row.s,
            opt_pct(r.ingredient_iou),
            opt_pct(r.ingredient_f1),
            opt_pct(r.weighted_f1),
            r.n_samples,
            r.n_failed
        );
    }
    out
}

pub fn render_csv(table: &SweepTable) -> String {
    let mut out = String::from(
        "scoring_metric,s,bleu,sacrebleu,rouge_l,sum,ingredient_iou,ingredient_f1,weighted_f1,n_samples,n_failed\n",
    );
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for row in &table.rows {
        let r = &row.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            row.metric.tag(),
            row.s,
            r.bleu,
            r.sacrebleu,
            r.rouge_l,
            r.bleu + r.sacrebleu + r.rouge_l,
            opt(r.ingredient_iou),
            opt(r.ingredient_f1),
            opt(r.weighted_f1),
            r.n_samples,
            r.n_failed
        );
    }
    out
}

pub fn render_json(table: &SweepTable) -> String {
    let mut s = serde_json::to_string_pretty(table).expect("report serializes");
    s.push('\n');
    s
}

pub fn render(table: &SweepTable, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => render_json(table),
        ReportFormat::Csv => render_csv(table),
        ReportFormat::Markdown => render_markdown(table),
    }
}

pub fn emit_report(table: &SweepTable, format: ReportFormat, path: impl AsRef<Path>) -> Result<(), ReportError> {
    let path = path.as_ref();
    std::fs::write(path, render(table, format)).map_err(|source| ReportError { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sweep::SweepRow;
    use crate::metrics::MetricReport;
    use crate::voting::ScoringMetric;

    fn report(bleu: f64, sacrebleu: f64, rouge_l: f64) -> MetricReport {
        MetricReport {
            bleu,
            sacrebleu,
            rouge_l,
            ingredient_f1: Some(0.5032),
            ingredient_iou: None,
            weighted_f1: None,
            n_samples: 3,
            n_failed: 0,
        }
    }

    #[test]
    fn two_decimal_rounding() {
        assert_eq!(fmt2(0.0), "0.00");
        assert_eq!(fmt2(1.005), "1.00");
        assert_eq!(fmt2(-0.5), "-0.50");
        assert_eq!(fmt2(12.345678), "12.35");
        assert_eq!(displayed_sum(0.004, 0.004, 0.004), "0.01");
        assert_eq!(displayed_sum(29.23, 6.21, 38.43), "73.87");
    }

    #[test]
    fn markdown_rows_and_columns() {
        let table = SweepTable {
            rows: (1..=3)
                .map(|s| SweepRow { metric: ScoringMetric::Bleu, s, report: report(1.0, 2.0, 3.0) })
                .collect(),
        };
        let md = render_markdown(&table);
        let first = md.lines().next().unwrap();
        assert_eq!(first, "| Scoring metric | Number | BLEU | SacreBLEU | ROUGE L | Sum |");
        assert!(md.contains("| BLEU | S=2 | 1.00 | 2.00 | 3.00 | 6.00 |"));
        assert!(md.contains("| BLEU | S=1 | - | 50.32 | - | 3 | 0 |"));
        assert_eq!(md.lines().filter(|l| l.starts_with("| BLEU | S=") && l.ends_with(" 6.00 |")).count(), 3);
    }

    #[test]
    fn formats_parse() {
        for f in ReportFormat::ALL {
            let tag = serde_json::to_value(f).unwrap();
            assert_eq!(tag.as_str().unwrap().parse::<ReportFormat>().unwrap(), f);
        }
        assert!("yaml".parse::<ReportFormat>().is_err());
    }
}
