//! End-to-end run: retrieve, prompt each of the top S ranks, generate,
//! vote, and score against ground truth.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    load_broader_categories, load_corpus, load_vocabulary, BroaderCategoryTable, CorpusError, Datastore,
    IngredientId, IngredientVocabulary, Recipe,
};
use crate::generator::{parse_recipe, CandidateRecipe, GenerateError, Generator, RemoteGenerator, StubGenerator};
use crate::metrics::{
    aggregate, extract_ingredients, ingredient_scores, weighted_category_f1, MetricError, MetricReport, SampleEval,
};
use crate::prompt::{assemble_inference_prompt, assemble_training_example, sample_sdra, PromptBundle, PromptError, SdraConfig};
use crate::retriever::{
    build_index, lexical_retrieve, load_queries, retrieve_topk, EmbeddingIndex, QueryFileError, QueryRecord,
    RetrievalError, RetrievalResult,
};
use crate::rng;
use crate::voting::{agreement_matrix, confidence_scores, text_agreement, ScoringMetric, VotingError};

use super::config::{ConfigError, ExperimentConfig, GeneratorSpec};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Queries(#[from] QueryFileError),
    #[error("query `{query_id}`: {source}")]
    Retrieval {
        query_id: String,
        #[source]
        source: RetrievalError,
    },
    #[error("query `{query_id}`: {source}")]
    Prompt {
        query_id: String,
        #[source]
        source: PromptError,
    },
    #[error("query `{0}` has no ground-truth recipe")]
    MissingGroundTruth(String),
    #[error("query `{0}` has an embedding but the datastore has none")]
    NoIndex(String),
    #[error(transparent)]
    Voting(#[from] VotingError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("every sample failed to generate ({0} failures)")]
    AllFailed(usize),
    #[error(transparent)]
    Generator(#[from] GenerateError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Loaded inputs shared by all samples.
pub struct Resources {
    pub store: Datastore,
    pub index: Option<EmbeddingIndex>,
    pub vocab: IngredientVocabulary,
    pub categories: BroaderCategoryTable,
    pub queries: Vec<QueryRecord>,
    /// Ground truth per query id when it differs from the datastore.
    pub ground_truth: Option<Datastore>,
}

impl Resources {
    pub fn new(
        store: Datastore,
        vocab: IngredientVocabulary,
        categories: BroaderCategoryTable,
        queries: Vec<QueryRecord>,
        ground_truth: Option<Datastore>,
    ) -> Result<Self, PipelineError> {
        let index = match store.embedding_dim() {
            Some(_) => Some(build_index(&store).map_err(|source| PipelineError::Retrieval {
                query_id: String::new(),
                source,
            })?),
            None => None,
        };
        Ok(Self { store, index, vocab, categories, queries, ground_truth })
    }

    pub fn load(cfg: &ExperimentConfig) -> Result<Self, PipelineError> {
        let store = load_corpus(&cfg.corpus_path, cfg.strict)?.datastore;
        let ground_truth = match &cfg.gt_path {
            Some(p) => Some(load_corpus(p, cfg.strict)?.datastore),
            None => None,
        };
        Self::new(
            store,
            load_vocabulary(&cfg.vocab_path)?,
            load_broader_categories(&cfg.category_path)?,
            load_queries(&cfg.query_path)?,
            ground_truth,
        )
    }

    pub fn ground_truth(&self, query_id: &str) -> Option<&Recipe> {
        match &self.ground_truth {
            Some(gt) => gt.get(query_id),
            None => self.store.get(query_id),
        }
    }

    pub fn retrieve(&self, query: &QueryRecord, k: usize) -> Result<RetrievalResult, PipelineError> {
        let wrap = |source: RetrievalError| PipelineError::Retrieval { query_id: query.query_id.clone(), source };
        match (&query.embedding, &self.index, &query.text) {
            (Some(emb), Some(index), _) => retrieve_topk(index, &query.query_id, emb, k).map_err(wrap),
            (_, _, Some(text)) => lexical_retrieve(&self.store, &query.query_id, text, k).map_err(wrap),
            _ => Err(PipelineError::NoIndex(query.query_id.clone())),
        }
    }
}

/// Scores of one candidate against the ground truth. Text scores compare
/// instruction text; set scores compare canonical ingredient classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScores {
    pub bleu: f64,
    pub sacrebleu: f64,
    pub rouge_l: f64,
    pub cosine_tf: f64,
    pub ingredient_f1: f64,
    pub ingredient_iou: f64,
    pub weighted_f1: f64,
}

impl CandidateScores {
    pub fn get(&self, metric: ScoringMetric) -> f64 {
        match metric {
            ScoringMetric::CosineTf => self.cosine_tf,
            ScoringMetric::Bleu => self.bleu,
            ScoringMetric::SacreBleu => self.sacrebleu,
            ScoringMetric::RougeL => self.rouge_l,
        }
    }
}

/// Persisted per-sample outcome, one line of the records file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub query_id: String,
    /// Retrieval rank behind each candidate.
    pub ranks: Vec<usize>,
    pub candidates: Vec<String>,
    /// Ground-truth instruction text.
    pub reference: String,
    pub metric: ScoringMetric,
    pub confidences: Vec<f64>,
    pub selected: usize,
    pub scores: Vec<CandidateScores>,
}

/// Instruction text of a generated recipe, as evaluated.
pub fn hypothesis_text(raw: &str) -> String {
    parse_recipe(raw).instructions.join(" ")
}

pub fn reference_text(gt: &Recipe) -> String {
    gt.instructions.join(" ")
}

fn canonical_ids<S: AsRef<str>>(items: &[S], vocab: &IngredientVocabulary) -> BTreeSet<IngredientId> {
    items.iter().filter_map(|i| vocab.canonicalize(i.as_ref())).collect()
}

/// Predicted ingredient classes: the parsed ingredient list, or, when the
/// candidate lists none, ingredients mentioned in its instructions.
pub fn predicted_ingredients(candidate: &CandidateRecipe, vocab: &IngredientVocabulary) -> BTreeSet<IngredientId> {
    if candidate.ingredients.is_empty() {
        extract_ingredients(&candidate.instructions, vocab)
    } else {
        canonical_ids(&candidate.ingredients, vocab)
    }
}

pub fn score_candidate(
    candidate: &CandidateRecipe,
    gt: &Recipe,
    vocab: &IngredientVocabulary,
    categories: &BroaderCategoryTable,
) -> CandidateScores {
    let hyp = candidate.instructions.join(" ");
    let reference = reference_text(gt);
    let pred = predicted_ingredients(candidate, vocab);
    let truth = canonical_ids(&gt.ingredients, vocab);
    let (ingredient_f1, ingredient_iou) = ingredient_scores(&pred, &truth);
    let names = |ids: &BTreeSet<IngredientId>| -> BTreeSet<String> {
        ids.iter().filter_map(|&id| vocab.name(id)).map(str::to_string).collect()
    };
    CandidateScores {
        bleu: text_agreement(ScoringMetric::Bleu, &hyp, &reference),
        sacrebleu: text_agreement(ScoringMetric::SacreBleu, &hyp, &reference),
        rouge_l: text_agreement(ScoringMetric::RougeL, &hyp, &reference),
        cosine_tf: text_agreement(ScoringMetric::CosineTf, &hyp, &reference),
        ingredient_f1,
        ingredient_iou,
        weighted_f1: weighted_category_f1(&names(&pred), &names(&truth), categories),
    }
}

/// Knobs of an in-memory run.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub sdra: SdraConfig,
    pub s_values: Vec<usize>,
    pub scoring_metrics: Vec<ScoringMetric>,
    pub global_seed: u64,
    pub sample_limit: Option<usize>,
    pub parallelism: usize,
}

impl RunSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            sdra: cfg.sdra.clone(),
            s_values: cfg.s_values.clone(),
            scoring_metrics: cfg.scoring_metrics.clone(),
            global_seed: cfg.global_seed,
            sample_limit: cfg.sample_limit,
            parallelism: cfg.parallelism,
        }
    }

    pub fn max_s(&self) -> usize {
        self.s_values.iter().copied().max().unwrap_or(1)
    }

    pub fn primary_metric(&self) -> ScoringMetric {
        self.scoring_metrics.first().copied().unwrap_or(ScoringMetric::CosineTf)
    }
}

/// Candidates generated for every sample, before any voting.
#[derive(Debug, Clone)]
pub struct Generation {
    pub records: Vec<SampleRecord>,
    /// Query ids whose generation failed, with the error text.
    pub failed: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricReport,
    pub records: Vec<SampleRecord>,
    pub failed: Vec<(String, String)>,
}

/// Query order after the optional seeded subsample.
pub fn select_queries(queries: &[QueryRecord], limit: Option<usize>, seed: u64) -> Vec<&QueryRecord> {
    let mut selected: Vec<&QueryRecord> = queries.iter().collect();
    if let Some(limit) = limit {
        let mut stream = rng::stream(rng::derive_seed(seed, &["sample-selection"]));
        selected.shuffle(&mut stream);
        selected.truncate(limit);
    }
    selected
}

/// Per-candidate generation seed.
pub fn candidate_seed(global_seed: u64, query_id: &str, rank: usize) -> u64 {
    rng::derive_seed(global_seed, &[query_id, "candidate", &rank.to_string()])
}

enum SampleOutcome {
    Done(SampleRecord),
    Failed(String, String),
}

fn run_sample(
    res: &Resources,
    settings: &RunSettings,
    generator: &dyn Generator,
    query: &QueryRecord,
) -> Result<SampleOutcome, PipelineError> {
    let s = settings.max_s();
    let gt = res
        .ground_truth(&query.query_id)
        .ok_or_else(|| PipelineError::MissingGroundTruth(query.query_id.clone()))?;
    let result = res.retrieve(query, settings.sdra.k)?;
    let bundles = (1..=s)
        .map(|rank| {
            assemble_inference_prompt(&query.query_id, &result, &res.store, rank, settings.sdra.max_prompt_tokens)
                .map_err(|source| PipelineError::Prompt { query_id: query.query_id.clone(), source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let generated: Result<Vec<CandidateRecipe>, GenerateError> = bundles
        .par_iter()
        .enumerate()
        .map(|(i, b)| generator.generate(b, candidate_seed(settings.global_seed, &query.query_id, i + 1)))
        .collect();
    let mut candidates = match generated {
        Ok(c) => c,
        Err(e) => return Ok(SampleOutcome::Failed(query.query_id.clone(), e.to_string())),
    };
    candidates.sort_by_key(|c| c.source_rank);

    let texts: Vec<&str> = candidates.iter().map(|c| c.raw_text.as_str()).collect();
    let metric = settings.primary_metric();
    let conf = confidence_scores(&agreement_matrix(&texts, metric)?);
    Ok(SampleOutcome::Done(SampleRecord {
        query_id: query.query_id.clone(),
        ranks: candidates.iter().map(|c| c.source_rank).collect(),
        candidates: texts.iter().map(|t| t.to_string()).collect(),
        reference: reference_text(gt),
        metric,
        confidences: conf.values,
        selected: conf.best_index,
        scores: candidates.iter().map(|c| score_candidate(c, gt, &res.vocab, &res.categories)).collect(),
    }))
}

/// Generates `max(s_values)` candidates per selected query. Samples run on
/// a pool of `parallelism` threads; output order follows query order.
pub fn generate_all(
    res: &Resources,
    settings: &RunSettings,
    generator: &dyn Generator,
) -> Result<Generation, PipelineError> {
    let queries = select_queries(&res.queries, settings.sample_limit, settings.global_seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.parallelism.max(1))
        .build()
        .expect("thread pool");
    let outcomes: Vec<SampleOutcome> = pool.install(|| {
        queries
            .par_iter()
            .map(|q| run_sample(res, settings, generator, q))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut records = Vec::new();
    let mut failed = Vec::new();
    for outcome in outcomes {
        match outcome {
            SampleOutcome::Done(r) => records.push(r),
            SampleOutcome::Failed(id, err) => failed.push((id, err)),
        }
    }
    Ok(Generation { records, failed })
}

/// Votes on the first `s` candidates of each record under `metric` and
/// aggregates the winners' scores.
pub fn evaluate_cell(
    records: &[SampleRecord],
    metric: ScoringMetric,
    s: usize,
    n_failed: usize,
) -> Result<MetricReport, PipelineError> {
    if records.is_empty() {
        return Err(PipelineError::AllFailed(n_failed));
    }
    let evals = records
        .iter()
        .map(|r| {
            let s = s.min(r.candidates.len());
            let m = agreement_matrix(&r.candidates[..s], metric)?;
            let best = confidence_scores(&m).best_index;
            let sc = &r.scores[best];
            Ok(SampleEval {
                hypothesis: hypothesis_text(&r.candidates[best]),
                reference: r.reference.clone(),
                ingredient_f1: Some(sc.ingredient_f1),
                ingredient_iou: Some(sc.ingredient_iou),
                weighted_f1: Some(sc.weighted_f1),
            })
        })
        .collect::<Result<Vec<_>, VotingError>>()?;
    Ok(aggregate(&evals, n_failed)?)
}

/// Scores of the rank-1 candidate alone, without voting.
pub fn evaluate_without_voting(records: &[SampleRecord], n_failed: usize) -> Result<MetricReport, PipelineError> {
    let evals: Vec<SampleEval> = records
        .iter()
        .map(|r| SampleEval {
            hypothesis: hypothesis_text(&r.candidates[0]),
            reference: r.reference.clone(),
            ingredient_f1: Some(r.scores[0].ingredient_f1),
            ingredient_iou: Some(r.scores[0].ingredient_iou),
            weighted_f1: Some(r.scores[0].weighted_f1),
        })
        .collect();
    if evals.is_empty() {
        return Err(PipelineError::AllFailed(n_failed));
    }
    Ok(aggregate(&evals, n_failed)?)
}

/// Full run at `S = max(s_values)` with the first scoring metric.
pub fn execute(res: &Resources, settings: &RunSettings, generator: &dyn Generator) -> Result<RunOutput, PipelineError> {
    let generation = generate_all(res, settings, generator)?;
    let n_failed = generation.failed.len();
    let report = evaluate_cell(&generation.records, settings.primary_metric(), settings.max_s(), n_failed)?;
    Ok(RunOutput { report, records: generation.records, failed: generation.failed })
}

pub fn make_generator(spec: &GeneratorSpec) -> Result<Box<dyn Generator>, GenerateError> {
    Ok(match spec {
        GeneratorSpec::Stub { dropout } => Box::new(StubGenerator::new(*dropout)?),
        GeneratorSpec::Remote(cfg) => Box::new(RemoteGenerator::new(cfg.clone())?),
    })
}

/// Loads everything named in `cfg` and runs the pipeline.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<RunOutput, PipelineError> {
    cfg.validate()?;
    let res = Resources::load(cfg)?;
    let generator = make_generator(&cfg.generator)?;
    execute(&res, &RunSettings::from_config(cfg), generator.as_ref())
}

/// Scores stored predictions against ground truth with the same id,
/// without voting. Every prediction id must exist in `gt`.
pub fn evaluate_predictions(
    predictions: &Datastore,
    gt: &Datastore,
    vocab: &IngredientVocabulary,
    categories: &BroaderCategoryTable,
) -> Result<MetricReport, PipelineError> {
    let evals = predictions
        .iter()
        .map(|p| {
            let truth = gt.get(&p.id).ok_or_else(|| PipelineError::MissingGroundTruth(p.id.clone()))?;
            let candidate = CandidateRecipe {
                raw_text: String::new(),
                title: Some(p.title.clone()),
                ingredients: p.ingredients.clone(),
                instructions: p.instructions.clone(),
                source_rank: 1,
            };
            let sc = score_candidate(&candidate, truth, vocab, categories);
            Ok(SampleEval {
                hypothesis: p.instructions.join(" "),
                reference: reference_text(truth),
                ingredient_f1: Some(sc.ingredient_f1),
                ingredient_iou: Some(sc.ingredient_iou),
                weighted_f1: Some(sc.weighted_f1),
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    Ok(aggregate(&evals, 0)?)
}

/// Training documents for every datastore recipe. Context comes from the
/// recipe's nearest neighbours with the recipe itself removed, so a
/// document never quotes its own answer.
pub fn training_documents(store: &Datastore, sdra: &SdraConfig) -> Result<Vec<PromptBundle>, PipelineError> {
    let index = match store.embedding_dim() {
        Some(_) => Some(build_index(store).map_err(|source| PipelineError::Retrieval { query_id: String::new(), source })?),
        None => None,
    };
    store
        .iter()
        .map(|recipe| {
            let wrap = |source: RetrievalError| PipelineError::Retrieval { query_id: recipe.id.clone(), source };
            let mut result = match (&index, &recipe.embedding) {
                (Some(index), Some(emb)) => retrieve_topk(index, &recipe.id, emb, sdra.k + 1).map_err(wrap)?,
                _ => lexical_retrieve(store, &recipe.id, &recipe.full_text(), sdra.k + 1).map_err(wrap)?,
            };
            result.hits.retain(|h| h.id != recipe.id);
            result.hits.truncate(sdra.k);
            let prompt = |source| PipelineError::Prompt { query_id: recipe.id.clone(), source };
            let ctx = sample_sdra(&result, store, sdra, &recipe.id).map_err(prompt)?;
            assemble_training_example(recipe, &ctx, sdra.max_prompt_tokens).map_err(prompt)
        })
        .collect()
}

/// Records keyed by query id.
pub fn index_records(records: &[SampleRecord]) -> BTreeMap<&str, &SampleRecord> {
    records.iter().map(|r| (r.query_id.as_str(), r)).collect()
}
