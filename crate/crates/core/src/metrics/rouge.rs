use super::tokenize::TokenSequence;
use super::MetricError;

/// Length of the longest common subsequence, two-row dynamic program.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// ROUGE-L F-measure on a 0–100 scale.
pub fn rouge_l(hyp: &TokenSequence, reference: &TokenSequence, beta: f64) -> Result<f64, MetricError> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(MetricError::InvalidBeta(beta));
    }
    Ok(rouge_l_tokens(hyp.as_slice(), reference.as_slice(), beta))
}

pub(crate) fn rouge_l_tokens(hyp: &[String], reference: &[String], beta: f64) -> f64 {
    let l = lcs_len(hyp, reference);
    if l == 0 {
        return 0.0;
    }
    let p = l as f64 / hyp.len() as f64;
    let r = l as f64 / reference.len() as f64;
    let b2 = beta * beta;
    100.0 * (1.0 + b2) * p * r / (r + b2 * p)
}
