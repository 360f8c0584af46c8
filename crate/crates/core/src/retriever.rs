//! Exact top-K retrieval over recipe embeddings, with a term-frequency
//! fallback for stores without embeddings.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Datastore;
use crate::metrics::{tokenize, Scheme};

#[derive(Debug, Error, PartialEq)]
pub enum RetrievalError {
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("recipe `{0}` has no embedding")]
    MissingEmbedding(String),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("query is empty after tokenization")]
    EmptyQuery,
    #[error("row count {rows} differs from id count {ids}")]
    ShapeMismatch { rows: usize, ids: usize },
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, RetrievalError> {
    if a.len() != b.len() {
        return Err(RetrievalError::LengthMismatch(a.len(), b.len()));
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(RetrievalError::ZeroVector);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub id: String,
    pub score: f64,
}

/// Ranked hits for one query: score descending, ties by ascending id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub query_id: String,
    pub hits: Vec<Hit>,
}

impl RetrievalResult {
    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }

    /// Hit at a 1-based rank.
    pub fn rank(&self, rank: usize) -> Option<&Hit> {
        rank.checked_sub(1).and_then(|i| self.hits.get(i))
    }
}

fn hit_order(a: &Hit, b: &Hit) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.id.cmp(&b.id))
}

/// Keeps the best `k` hits in canonical order.
fn top_k(mut hits: Vec<Hit>, k: usize) -> Vec<Hit> {
    if hits.len() > k {
        hits.select_nth_unstable_by(k - 1, hit_order);
        hits.truncate(k);
    }
    hits.sort_by(hit_order);
    hits
}

/// Unit-normalized embedding rows in ascending id order.
#[derive(Debug, Clone)]
pub struct EmbeddingIndex {
    ids: Vec<String>,
    rows: Vec<Vec<f64>>,
    dim: usize,
}

impl EmbeddingIndex {
    /// Builds an index from arbitrary (nonzero) vectors, normalizing each row.
    pub fn from_rows(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, RetrievalError> {
        if ids.len() != rows.len() {
            return Err(RetrievalError::ShapeMismatch { rows: rows.len(), ids: ids.len() });
        }
        let dim = rows.first().map_or(0, Vec::len);
        let mut pairs = Vec::with_capacity(ids.len());
        for (id, row) in ids.into_iter().zip(rows) {
            if row.len() != dim {
                return Err(RetrievalError::LengthMismatch(dim, row.len()));
            }
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(RetrievalError::ZeroVector);
            }
            pairs.push((id, row.into_iter().map(|x| x / norm).collect::<Vec<_>>()));
        }
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let (ids, rows) = pairs.into_iter().unzip();
        Ok(Self { ids, rows, dim })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

pub fn build_index(store: &Datastore) -> Result<EmbeddingIndex, RetrievalError> {
    let mut ids = Vec::with_capacity(store.len());
    let mut rows = Vec::with_capacity(store.len());
    for recipe in store.iter() {
        let emb = recipe
            .embedding
            .as_ref()
            .ok_or_else(|| RetrievalError::MissingEmbedding(recipe.id.clone()))?;
        ids.push(recipe.id.clone());
        rows.push(emb.clone());
    }
    EmbeddingIndex::from_rows(ids, rows)
}

/// Exact cosine top-K by linear scan.
pub fn retrieve_topk(
    index: &EmbeddingIndex,
    query_id: &str,
    query: &[f64],
    k: usize,
) -> Result<RetrievalResult, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::ZeroK);
    }
    if !index.is_empty() && query.len() != index.dim {
        return Err(RetrievalError::LengthMismatch(index.dim, query.len()));
    }
    let norm = query.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(RetrievalError::ZeroVector);
    }
    let unit: Vec<f64> = query.iter().map(|x| x / norm).collect();
    let hits = index
        .ids
        .iter()
        .zip(&index.rows)
        .map(|(id, row)| {
            let dot: f64 = row.iter().zip(&unit).map(|(a, b)| a * b).sum();
            Hit { id: id.clone(), score: dot.clamp(-1.0, 1.0) }
        })
        .collect();
    Ok(RetrievalResult { query_id: query_id.to_string(), hits: top_k(hits, k) })
}

/// Sparse term-frequency vector.
pub type TermFrequencies = HashMap<String, f64>;

pub fn term_frequencies(text: &str) -> TermFrequencies {
    let mut tf = TermFrequencies::new();
    for token in tokenize(text, Scheme::Simple).tokens {
        *tf.entry(token).or_insert(0.0) += 1.0;
    }
    tf
}

/// Cosine of two sparse vectors; 0 when either is empty.
pub fn sparse_cosine(a: &TermFrequencies, b: &TermFrequencies) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small.iter().filter_map(|(t, x)| large.get(t).map(|y| x * y)).sum();
    if dot == 0.0 {
        return 0.0;
    }
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).min(1.0)
}

/// Ranks recipes by TF cosine against their title, ingredients and steps.
pub fn lexical_retrieve(
    store: &Datastore,
    query_id: &str,
    query_text: &str,
    k: usize,
) -> Result<RetrievalResult, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::ZeroK);
    }
    let query = term_frequencies(query_text);
    if query.is_empty() {
        return Err(RetrievalError::EmptyQuery);
    }
    let hits = store
        .iter()
        .map(|r| Hit { id: r.id.clone(), score: sparse_cosine(&query, &term_frequencies(&r.full_text())) })
        .collect();
    Ok(RetrievalResult { query_id: query_id.to_string(), hits: top_k(hits, k) })
}

/// One line of the query sidecar file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

#[derive(Debug, Error)]
pub enum QueryFileError {
    #[error("failed to read query file: {0}")]
    Io(#[from] std::io::Error),
    #[error("query file line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

pub fn load_queries(path: impl AsRef<Path>) -> Result<Vec<QueryRecord>, QueryFileError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let q: QueryRecord = serde_json::from_str(&line)
            .map_err(|e| QueryFileError::Malformed { line: idx + 1, reason: e.to_string() })?;
        if q.embedding.is_none() && q.text.is_none() {
            return Err(QueryFileError::Malformed { line: idx + 1, reason: "query has neither embedding nor text".into() });
        }
        out.push(q);
    }
    Ok(out)
}
