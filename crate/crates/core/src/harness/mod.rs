//! Experiment runner: configuration, the end-to-end pipeline, ablation
//! sweeps, rank-confusion analysis and report files.

pub mod config;
pub mod confusion;
pub mod pipeline;
pub mod report;
pub mod sweep;
pub mod synthetic;

pub use config::{ConfigError, ExperimentConfig, GeneratorSpec, DEFAULT_STUB_DROPOUT};
pub use confusion::{rank_confusion, ConfusionError, RankConfusionMatrix};
pub use pipeline::{
    evaluate_cell, evaluate_predictions, evaluate_without_voting, execute, generate_all, run_pipeline,
    training_documents, CandidateScores, Generation,
    PipelineError, Resources, RunOutput, RunSettings, SampleRecord,
};
pub use report::{emit_report, render, ReportError, ReportFormat};
pub use sweep::{ablation_sweep, sweep_records, sweep_with, SweepRow, SweepTable};
pub use synthetic::{synthesize, SyntheticCorpus, SyntheticSpec};
