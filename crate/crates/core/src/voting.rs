//! Self-consistency voting: pick the candidate that agrees most with the
//! others.
//!
//! For `S` candidates an `S × S` agreement matrix is filled with a pairwise
//! score (row = hypothesis, column = reference), the diagonal is left at 0,
//! and each candidate's confidence is its row mean over the other `S − 1`
//! entries. The highest confidence wins; ties go to the lowest index.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::CandidateRecipe;
use crate::metrics::{corpus_bleu_tokens, rouge_l_tokens, sentence_bleu, tokenize, Scheme, TokenSequence, DEFAULT_MAX_N, DEFAULT_ROUGE_BETA};
use crate::retriever::{sparse_cosine, term_frequencies, TermFrequencies};

#[derive(Debug, Error, PartialEq)]
pub enum VotingError {
    #[error("no candidates to vote on")]
    Empty,
    #[error("candidate {0} has empty text")]
    EmptyCandidate(usize),
    #[error("unknown scoring metric `{0}`")]
    UnknownMetric(String),
}

/// Pairwise agreement measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScoringMetric {
    #[serde(rename = "cosine-tf")]
    CosineTf,
    #[serde(rename = "bleu")]
    Bleu,
    #[serde(rename = "sacrebleu")]
    SacreBleu,
    #[serde(rename = "rouge-l")]
    RougeL,
}

impl ScoringMetric {
    pub const ALL: [ScoringMetric; 4] = [Self::CosineTf, Self::Bleu, Self::SacreBleu, Self::RougeL];

    pub fn tag(self) -> &'static str {
        match self {
            Self::CosineTf => "cosine-tf",
            Self::Bleu => "bleu",
            Self::SacreBleu => "sacrebleu",
            Self::RougeL => "rouge-l",
        }
    }

    /// Display name used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Self::CosineTf => "Cosine Similarity",
            Self::Bleu => "BLEU",
            Self::SacreBleu => "SacreBLEU",
            Self::RougeL => "ROUGE L",
        }
    }

    pub fn is_symmetric(self) -> bool {
        matches!(self, Self::CosineTf | Self::RougeL)
    }
}

impl fmt::Display for ScoringMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ScoringMetric {
    type Err = VotingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| VotingError::UnknownMetric(s.to_string()))
    }
}

/// Precomputed per-text features so each pair is scored without
/// re-tokenizing.
pub(crate) enum Features {
    Tf(TermFrequencies),
    Tokens(TokenSequence),
}

impl Features {
    pub(crate) fn new(text: &str, metric: ScoringMetric) -> Self {
        match metric {
            ScoringMetric::CosineTf => Features::Tf(term_frequencies(text)),
            ScoringMetric::Bleu | ScoringMetric::RougeL => Features::Tokens(tokenize(text, Scheme::Simple)),
            ScoringMetric::SacreBleu => Features::Tokens(tokenize(text, Scheme::Intl)),
        }
    }
}

/// Scores `hyp` against `reference` under `metric`.
pub(crate) fn pair_score(metric: ScoringMetric, hyp: &Features, reference: &Features) -> f64 {
    match (metric, hyp, reference) {
        (ScoringMetric::CosineTf, Features::Tf(a), Features::Tf(b)) => sparse_cosine(a, b),
        (ScoringMetric::Bleu, Features::Tokens(h), Features::Tokens(r)) => {
            sentence_bleu(h.as_slice(), r.as_slice(), DEFAULT_MAX_N)
        }
        (ScoringMetric::RougeL, Features::Tokens(h), Features::Tokens(r)) => {
            rouge_l_tokens(h.as_slice(), r.as_slice(), DEFAULT_ROUGE_BETA)
        }
        (ScoringMetric::SacreBleu, Features::Tokens(h), Features::Tokens(r)) => {
            corpus_bleu_tokens(&[(h.clone(), r.clone())], DEFAULT_MAX_N)
        }
        _ => unreachable!("features built for a different metric"),
    }
}

/// Agreement score between two texts.
pub fn text_agreement(metric: ScoringMetric, hyp: &str, reference: &str) -> f64 {
    pair_score(metric, &Features::new(hyp, metric), &Features::new(reference, metric))
}

/// Term-frequency vector of a text.
pub fn text_tf_vector(text: &str) -> TermFrequencies {
    term_frequencies(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementMatrix {
    pub metric: ScoringMetric,
    /// Row-major, `size × size`.
    pub scores: Vec<Vec<f64>>,
}

impl AgreementMatrix {
    pub fn size(&self) -> usize {
        self.scores.len()
    }
}

pub fn agreement_matrix<S: AsRef<str>>(texts: &[S], metric: ScoringMetric) -> Result<AgreementMatrix, VotingError> {
    if texts.is_empty() {
        return Err(VotingError::Empty);
    }
    if let Some(i) = texts.iter().position(|t| t.as_ref().trim().is_empty()) {
        return Err(VotingError::EmptyCandidate(i));
    }
    let feats: Vec<Features> = texts.iter().map(|t| Features::new(t.as_ref(), metric)).collect();
    let s = texts.len();
    let mut scores = vec![vec![0.0; s]; s];
    for i in 0..s {
        for j in 0..s {
            if i == j {
                continue;
            }
            if metric.is_symmetric() && j < i {
                scores[i][j] = scores[j][i];
            } else {
                scores[i][j] = pair_score(metric, &feats[i], &feats[j]);
            }
        }
    }
    Ok(AgreementMatrix { metric, scores })
}

/// Agreement matrix over candidates' raw text.
pub fn candidate_agreement(candidates: &[CandidateRecipe], metric: ScoringMetric) -> Result<AgreementMatrix, VotingError> {
    let texts: Vec<&str> = candidates.iter().map(|c| c.raw_text.as_str()).collect();
    agreement_matrix(&texts, metric)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceVector {
    pub values: Vec<f64>,
    pub best_index: usize,
}

/// Index of the first maximum.
pub fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn confidence_scores(m: &AgreementMatrix) -> ConfidenceVector {
    let s = m.size();
    if s <= 1 {
        return ConfidenceVector { values: vec![1.0; s], best_index: 0 };
    }
    let values: Vec<f64> = m
        .scores
        .iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).sum::<f64>() / (s - 1) as f64)
        .collect();
    let best_index = first_argmax(&values);
    ConfidenceVector { values, best_index }
}

/// Returns the winning index and candidate.
pub fn select_best(candidates: &[CandidateRecipe], metric: ScoringMetric) -> Result<(usize, &CandidateRecipe), VotingError> {
    let m = candidate_agreement(candidates, metric)?;
    let idx = confidence_scores(&m).best_index;
    Ok((idx, &candidates[idx]))
}
