//! Ablation grid over scoring metric and ensemble size. Candidates for the
//! largest S are generated once; each cell votes on a prefix of them.

use serde::{Deserialize, Serialize};

use crate::generator::Generator;
use crate::metrics::MetricReport;
use crate::voting::ScoringMetric;

use super::config::ExperimentConfig;
use super::pipeline::{evaluate_cell, generate_all, make_generator, Generation, PipelineError, Resources, RunSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub metric: ScoringMetric,
    pub s: usize,
    pub report: MetricReport,
}

/// Rows ordered by metric (config order), then S ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn cell(&self, metric: ScoringMetric, s: usize) -> Option<&MetricReport> {
        self.rows.iter().find(|r| r.metric == metric && r.s == s).map(|r| &r.report)
    }
}

/// Evaluates every (metric, S) cell on already generated candidates.
pub fn sweep_records(
    generation: &Generation,
    metrics: &[ScoringMetric],
    s_values: &[usize],
) -> Result<SweepTable, PipelineError> {
    let n_failed = generation.failed.len();
    let mut rows = Vec::with_capacity(metrics.len() * s_values.len());
    for &metric in metrics {
        for &s in s_values {
            rows.push(SweepRow { metric, s, report: evaluate_cell(&generation.records, metric, s, n_failed)? });
        }
    }
    Ok(SweepTable { rows })
}

pub fn sweep_with(
    res: &Resources,
    settings: &RunSettings,
    generator: &dyn Generator,
) -> Result<(SweepTable, Generation), PipelineError> {
    let generation = generate_all(res, settings, generator)?;
    let table = sweep_records(&generation, &settings.scoring_metrics, &settings.s_values)?;
    Ok((table, generation))
}

pub fn ablation_sweep(cfg: &ExperimentConfig) -> Result<(SweepTable, Generation), PipelineError> {
    cfg.validate()?;
    let res = Resources::load(cfg)?;
    let generator = make_generator(&cfg.generator)?;
    sweep_with(&res, &RunSettings::from_config(cfg), generator.as_ref())
}
