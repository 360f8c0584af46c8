//! How well voting confidence predicts true quality.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::voting::{agreement_matrix, confidence_scores, ScoringMetric, VotingError};

use super::pipeline::SampleRecord;

#[derive(Debug, Error)]
pub enum ConfusionError {
    #[error("no records")]
    Empty,
    #[error("record `{query_id}` has {found} candidates, need {size}")]
    TooFewCandidates { query_id: String, size: usize, found: usize },
    #[error(transparent)]
    Voting(#[from] VotingError),
}

/// `counts[r][c]`: samples whose confidence-rank `r + 1` candidate had
/// true-metric rank `c + 1`. Each row sums to the number of samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankConfusionMatrix {
    pub size: usize,
    pub counts: Vec<Vec<u64>>,
}

impl RankConfusionMatrix {
    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("confidence_rank");
        for c in 1..=self.size {
            out.push_str(&format!(",true_rank_{c}"));
        }
        out.push('\n');
        for (r, row) in self.counts.iter().enumerate() {
            out.push_str(&(r + 1).to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Indices sorted by value descending, lowest index first among ties.
pub fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

fn ranks_of(values: &[f64]) -> Vec<usize> {
    let mut rank = vec![0; values.len()];
    for (pos, i) in descending_order(values).into_iter().enumerate() {
        rank[i] = pos;
    }
    rank
}

/// Builds the matrix over the first `size` candidates of each record
/// (all of them when `size` is `None`, which then must agree across
/// records). Confidences are those stored in the record when it has
/// exactly `size` candidates and are re-voted on the prefix otherwise.
pub fn rank_confusion(
    records: &[SampleRecord],
    truth_metric: ScoringMetric,
    size: Option<usize>,
) -> Result<RankConfusionMatrix, ConfusionError> {
    let first = records.first().ok_or(ConfusionError::Empty)?;
    let size = size.unwrap_or(first.candidates.len());
    let mut counts = vec![vec![0u64; size]; size];
    for rec in records {
        if rec.candidates.len() < size || rec.scores.len() < size || size == 0 {
            return Err(ConfusionError::TooFewCandidates {
                query_id: rec.query_id.clone(),
                size,
                found: rec.candidates.len().min(rec.scores.len()),
            });
        }
        let confidences = if rec.confidences.len() == size && rec.candidates.len() == size {
            rec.confidences.clone()
        } else {
            confidence_scores(&agreement_matrix(&rec.candidates[..size], rec.metric)?).values
        };
        let truth: Vec<f64> = rec.scores[..size].iter().map(|s| s.get(truth_metric)).collect();
        let true_rank = ranks_of(&truth);
        for (conf_rank, idx) in descending_order(&confidences).into_iter().enumerate() {
            counts[conf_rank][true_rank[idx]] += 1;
        }
    }
    Ok(RankConfusionMatrix { size, counts })
}
