//! Retrieval-augmented recipe generation toolkit.
//!
//! ```text
//! query ──► retriever (top-K) ──► prompt (ranks 1..S) ──► generator ×S
//!                                                            │
//!                         metrics ◄── voting (S × S agreement)
//! ```
//!
//! - [`corpus`]: recipe datastore, ingredient vocabulary, broader categories
//! - [`retriever`]: exact cosine top-K and a term-frequency fallback
//! - [`prompt`]: stochastic context sampling and conversation rendering
//! - [`generator`]: remote chat-completions client and offline stub
//! - [`voting`]: self-consistency selection among candidates
//! - [`metrics`]: BLEU, corpus BLEU, ROUGE-L, ingredient F1/IOU
//! - [`harness`]: pipeline runs, ablation sweeps, rank confusion, reports

pub mod corpus;
pub mod generator;
pub mod harness;
pub mod metrics;
pub mod prompt;
pub mod retriever;
pub mod rng;
pub mod voting;
