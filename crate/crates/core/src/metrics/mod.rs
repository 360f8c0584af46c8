//! Text and ingredient evaluation metrics.
//!
//! | Measure | Granularity | Tokenizer |
//! |---------|-------------|-----------|
//! | [`bleu`] | sentence, add-one smoothing for n ≥ 2 | caller's choice |
//! | [`sacrebleu_corpus`] | corpus, unsmoothed | [`Scheme::Intl`] |
//! | [`rouge_l`] | sentence, LCS F-measure | caller's choice |
//! | [`ingredient_scores`] | set F1 / IOU | n/a |
//! | [`weighted_category_f1`] | set F1 with half credit per shared category | n/a |
//!
//! Text scores are on a 0–100 scale; set scores on 0–1.

mod bleu;
mod ingredients;
mod rouge;
mod tokenize;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bleu::{bleu, sacrebleu_corpus, DEFAULT_MAX_N};
pub use ingredients::{extract_ingredients, ingredient_scores, weighted_category_f1};
pub use rouge::{lcs_len, rouge_l};
pub use tokenize::{tokenize, Scheme, TokenSequence};

pub(crate) use bleu::{corpus_bleu_tokens, sentence_bleu};
pub(crate) use rouge::rouge_l_tokens;

pub const DEFAULT_ROUGE_BETA: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("n-gram order must be at least 1")]
    InvalidOrder,
    #[error("hypothesis count {hyps} differs from reference count {refs}")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("beta must be positive, got {0}")]
    InvalidBeta(f64),
}

/// Dataset-level scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu: f64,
    pub sacrebleu: f64,
    pub rouge_l: f64,
    pub ingredient_f1: Option<f64>,
    pub ingredient_iou: Option<f64>,
    pub weighted_f1: Option<f64>,
    pub n_samples: usize,
    #[serde(default)]
    pub n_failed: usize,
}

/// One evaluated sample: instruction texts plus optional ingredient sets.
#[derive(Debug, Clone, Default)]
pub struct SampleEval {
    pub hypothesis: String,
    pub reference: String,
    pub ingredient_f1: Option<f64>,
    pub ingredient_iou: Option<f64>,
    pub weighted_f1: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Aggregates per-sample evaluations. BLEU and ROUGE-L are per-sample means
/// with `Simple` tokenization; SacreBLEU is corpus-level.
pub fn aggregate(samples: &[SampleEval], n_failed: usize) -> Result<MetricReport, MetricError> {
    if samples.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let toks: Vec<(TokenSequence, TokenSequence)> = samples
        .iter()
        .map(|s| (tokenize(&s.hypothesis, Scheme::Simple), tokenize(&s.reference, Scheme::Simple)))
        .collect();
    let bleu = mean(toks.iter().map(|(h, r)| sentence_bleu(h.as_slice(), r.as_slice(), DEFAULT_MAX_N))).unwrap_or(0.0);
    let rouge = mean(toks.iter().map(|(h, r)| rouge_l_tokens(h.as_slice(), r.as_slice(), DEFAULT_ROUGE_BETA))).unwrap_or(0.0);
    let hyps: Vec<&str> = samples.iter().map(|s| s.hypothesis.as_str()).collect();
    let refs: Vec<&str> = samples.iter().map(|s| s.reference.as_str()).collect();
    Ok(MetricReport {
        bleu,
        sacrebleu: sacrebleu_corpus(&hyps, &refs)?,
        rouge_l: rouge,
        ingredient_f1: mean(samples.iter().filter_map(|s| s.ingredient_f1)),
        ingredient_iou: mean(samples.iter().filter_map(|s| s.ingredient_iou)),
        weighted_f1: mean(samples.iter().filter_map(|s| s.weighted_f1)),
        n_samples: samples.len(),
        n_failed,
    })
}
