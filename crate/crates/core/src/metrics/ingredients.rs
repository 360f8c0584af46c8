//! Set-based ingredient scores and instruction-text ingredient extraction.

use std::collections::BTreeSet;

use crate::corpus::{BroaderCategoryTable, IngredientId, IngredientVocabulary};

use super::tokenize::{tokenize, Scheme};

/// Returns `(f1, iou)`; both are 1 when the two sets are empty.
pub fn ingredient_scores<T: Ord>(pred: &BTreeSet<T>, gt: &BTreeSet<T>) -> (f64, f64) {
    if pred.is_empty() && gt.is_empty() {
        return (1.0, 1.0);
    }
    let inter = pred.intersection(gt).count() as f64;
    let union = (pred.len() + gt.len()) as f64 - inter;
    let f1 = 2.0 * inter / (pred.len() + gt.len()) as f64;
    (f1, inter / union)
}

fn credit(item: &str, others: &BTreeSet<String>, other_categories: &BTreeSet<&str>, table: &BroaderCategoryTable) -> f64 {
    if others.contains(item) {
        1.0
    } else if table
        .membership(item)
        .iter()
        .any(|c| other_categories.contains(c.as_str()))
    {
        0.5
    } else {
        0.0
    }
}

fn categories_of<'a>(items: &BTreeSet<String>, table: &'a BroaderCategoryTable) -> BTreeSet<&'a str> {
    items
        .iter()
        .flat_map(|i| table.membership(i).iter().map(String::as_str))
        .collect()
}

/// F1 with half credit for items that share a broader category with some
/// item on the other side.
pub fn weighted_category_f1(pred: &BTreeSet<String>, gt: &BTreeSet<String>, table: &BroaderCategoryTable) -> f64 {
    if pred.is_empty() && gt.is_empty() {
        return 1.0;
    }
    if pred.is_empty() || gt.is_empty() {
        return 0.0;
    }
    let gt_cats = categories_of(gt, table);
    let pred_cats = categories_of(pred, table);
    let p = pred.iter().map(|i| credit(i, gt, &gt_cats, table)).sum::<f64>() / pred.len() as f64;
    let r = gt.iter().map(|i| credit(i, pred, &pred_cats, table)).sum::<f64>() / gt.len() as f64;
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Scans instruction steps for vocabulary aliases, preferring the longest
/// token window at each position.
pub fn extract_ingredients<S: AsRef<str>>(instructions: &[S], vocab: &IngredientVocabulary) -> BTreeSet<IngredientId> {
    let max_window = vocab.max_alias_tokens().max(1);
    let mut found = BTreeSet::new();
    for step in instructions {
        let tokens = tokenize(step.as_ref(), Scheme::Simple).tokens;
        let mut i = 0;
        while i < tokens.len() {
            let longest = max_window.min(tokens.len() - i);
            let hit = (1..=longest)
                .rev()
                .find_map(|w| vocab.lookup_key(&tokens[i..i + w].join("_")).map(|id| (id, w)));
            match hit {
                Some((id, w)) => {
                    found.insert(id);
                    i += w;
                }
                None => i += 1,
            }
        }
    }
    found
}
