//! Sentence-level smoothed BLEU and corpus-level unsmoothed BLEU.

use std::collections::HashMap;

use super::tokenize::{tokenize, Scheme, TokenSequence};
use super::MetricError;

pub const DEFAULT_MAX_N: usize = 4;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for window in tokens.windows(n) {
        *counts.entry(window).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram matches and total hypothesis n-grams for one order.
fn clipped_matches(hyp: &[String], reference: &[String], n: usize) -> (usize, usize) {
    let hyp_counts = ngram_counts(hyp, n);
    let ref_counts = ngram_counts(reference, n);
    let matches = hyp_counts
        .iter()
        .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    (matches, hyp.len().saturating_sub(n - 1))
}

fn brevity_penalty(hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len == 0 {
        0.0
    } else if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    }
}

/// Sentence BLEU on a 0–100 scale.
///
/// Orders n ≥ 2 whose clipped match count is zero are smoothed to
/// `1 / (total + 1)`; a zero unigram precision yields 0.
pub fn bleu(hyp: &TokenSequence, reference: &TokenSequence, max_n: usize) -> Result<f64, MetricError> {
    if max_n == 0 {
        return Err(MetricError::InvalidOrder);
    }
    Ok(sentence_bleu(hyp.as_slice(), reference.as_slice(), max_n))
}

pub(crate) fn sentence_bleu(hyp: &[String], reference: &[String], max_n: usize) -> f64 {
    if hyp.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let (matches, total) = clipped_matches(hyp, reference, n);
        let precision = if matches > 0 {
            matches as f64 / total as f64
        } else if n >= 2 {
            1.0 / (total as f64 + 1.0)
        } else {
            return 0.0;
        };
        log_sum += precision.ln();
    }
    let geo_mean = (log_sum / max_n as f64).exp();
    100.0 * brevity_penalty(hyp.len(), reference.len()) * geo_mean
}

/// Corpus-level BLEU-4 over raw strings, `Intl` tokenization, no smoothing.
///
/// Match and total counts are summed over all pairs before precisions are
/// formed; any order with zero matches gives a score of 0.
pub fn sacrebleu_corpus<H, R>(hyps: &[H], refs: &[R]) -> Result<f64, MetricError>
where
    H: AsRef<str>,
    R: AsRef<str>,
{
    if hyps.len() != refs.len() {
        return Err(MetricError::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    if hyps.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let pairs: Vec<(TokenSequence, TokenSequence)> = hyps
        .iter()
        .zip(refs)
        .map(|(h, r)| (tokenize(h.as_ref(), Scheme::Intl), tokenize(r.as_ref(), Scheme::Intl)))
        .collect();
    Ok(corpus_bleu_tokens(&pairs, DEFAULT_MAX_N))
}

pub(crate) fn corpus_bleu_tokens(pairs: &[(TokenSequence, TokenSequence)], max_n: usize) -> f64 {
    let mut matches = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    let (mut hyp_len, mut ref_len) = (0usize, 0usize);
    for (h, r) in pairs {
        hyp_len += h.len();
        ref_len += r.len();
        for n in 1..=max_n {
            let (m, t) = clipped_matches(h.as_slice(), r.as_slice(), n);
            matches[n - 1] += m;
            totals[n - 1] += t;
        }
    }
    if matches.contains(&0) {
        return 0.0;
    }
    let log_sum: f64 = matches
        .iter()
        .zip(&totals)
        .map(|(&m, &t)| (m as f64 / t as f64).ln())
        .sum();
    100.0 * brevity_penalty(hyp_len, ref_len) * (log_sum / max_n as f64).exp()
}
