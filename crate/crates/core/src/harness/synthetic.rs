//! Seeded clustered corpora for exercising the pipeline offline.
//!
//! Each cluster has a prototype recipe; stored recipes are perturbed copies
//! whose embeddings sit near the cluster center. Queries either point at a
//! held-out perturbed copy (ground truth absent from the datastore) or at a
//! stored recipe itself.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusError, Datastore, IngredientVocabulary, Recipe};
use crate::retriever::QueryRecord;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub clusters: usize,
    pub per_cluster: usize,
    pub queries_per_cluster: usize,
    pub dim: usize,
    pub ingredients: usize,
    pub steps: usize,
    /// Chance that a stored or held-out copy swaps any one item.
    pub perturb: f64,
    /// Per-component embedding noise amplitude.
    pub noise: f64,
    /// Ground truth is a held-out copy when true, a stored recipe otherwise.
    pub held_out: bool,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            clusters: 20,
            per_cluster: 10,
            queries_per_cluster: 2,
            dim: 16,
            ingredients: 8,
            steps: 6,
            perturb: 0.3,
            noise: 0.15,
            held_out: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub store: Datastore,
    pub queries: Vec<QueryRecord>,
    /// Ground truth keyed by query id.
    pub ground_truth: Datastore,
}

const VERBS: [&str; 8] = ["chop", "whisk", "fold in", "simmer", "season", "saute", "roast", "stir in"];
const TAILS: [&str; 6] = [
    "until golden",
    "for ten minutes",
    "over low heat",
    "and set aside",
    "until tender",
    "in a large bowl",
];

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= n;
    }
    v
}

fn symmetric<R: rand::RngCore>(r: &mut R) -> f64 {
    rng::unit_f64(r) * 2.0 - 1.0
}

struct Prototype {
    title: String,
    ingredients: Vec<String>,
    steps: Vec<String>,
    center: Vec<f64>,
}

fn random_step<R: rand::RngCore>(r: &mut R, names: &[&str], pool: &[String]) -> String {
    let verb = VERBS[rng::bounded(r, VERBS.len())];
    let a = pool.get(rng::bounded(r, pool.len().max(1))).map(String::as_str).unwrap_or(names[0]);
    let b = names[rng::bounded(r, names.len())];
    let tail = TAILS[rng::bounded(r, TAILS.len())];
    format!("{verb} the {} with the {} {tail}", a.replace('_', " "), b.replace('_', " "))
}

fn prototype(spec: &SyntheticSpec, names: &[&str], c: usize) -> Prototype {
    let mut r = rng::stream(rng::derive_seed(spec.seed, &["synthetic", "prototype", &c.to_string()]));
    let ingredients: Vec<String> = rng::sample_distinct(&mut r, names.len(), spec.ingredients.min(names.len()))
        .into_iter()
        .map(|i| names[i].to_string())
        .collect();
    let steps = (0..spec.steps).map(|_| random_step(&mut r, names, &ingredients)).collect();
    let center = unit((0..spec.dim).map(|_| symmetric(&mut r)).collect());
    Prototype { title: format!("dish {c}"), ingredients, steps, center }
}

fn perturbed(spec: &SyntheticSpec, names: &[&str], p: &Prototype, id: String, labels: &[&str]) -> Recipe {
    let mut r = rng::stream(rng::derive_seed(spec.seed, labels));
    let ingredients: Vec<String> = p
        .ingredients
        .iter()
        .map(|i| {
            if rng::unit_f64(&mut r) < spec.perturb {
                names[rng::bounded(&mut r, names.len())].to_string()
            } else {
                i.clone()
            }
        })
        .collect();
    let instructions = p
        .steps
        .iter()
        .map(|s| if rng::unit_f64(&mut r) < spec.perturb { random_step(&mut r, names, &ingredients) } else { s.clone() })
        .collect();
    let embedding = unit(p.center.iter().map(|x| x + spec.noise * symmetric(&mut r)).collect());
    Recipe { id, title: p.title.clone(), ingredients, instructions, embedding: Some(embedding) }
}

/// Builds the corpus. Ingredient names come from `vocab` canonical names.
pub fn synthesize(spec: &SyntheticSpec, vocab: &IngredientVocabulary) -> Result<SyntheticCorpus, CorpusError> {
    let names: Vec<&str> = vocab.ids().filter_map(|id| vocab.name(id)).collect();
    let mut stored = Vec::new();
    let mut queries = Vec::new();
    let mut truth = Vec::new();
    for c in 0..spec.clusters {
        let proto = prototype(spec, &names, c);
        let cs = c.to_string();
        for v in 0..spec.per_cluster {
            let id = format!("c{c:03}-r{v:03}");
            stored.push(perturbed(spec, &names, &proto, id, &["synthetic", "stored", &cs, &v.to_string()]));
        }
        for q in 0..spec.queries_per_cluster {
            let qs = q.to_string();
            if spec.held_out {
                let query_id = format!("q{c:03}-{q:03}");
                let gt = perturbed(spec, &names, &proto, query_id.clone(), &["synthetic", "query", &cs, &qs]);
                queries.push(QueryRecord { query_id, embedding: gt.embedding.clone(), text: None });
                truth.push(Recipe { embedding: None, ..gt });
            } else {
                let target: &Recipe = &stored[stored.len() - spec.per_cluster + q % spec.per_cluster.max(1)];
                queries.push(QueryRecord { query_id: target.id.clone(), embedding: target.embedding.clone(), text: None });
            }
        }
    }
    let store = Datastore::from_recipes(stored)?;
    let ground_truth = if spec.held_out { Datastore::from_recipes(truth)? } else { store.clone() };
    Ok(SyntheticCorpus { store, queries, ground_truth })
}

impl SyntheticCorpus {
    /// Writes `corpus.jsonl`, `queries.jsonl` and, for held-out queries,
    /// `ground_truth.jsonl` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>, held_out: bool) -> Result<(), CorpusError> {
        let dir = dir.as_ref();
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CorpusError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        self.store.save(dir.join("corpus.jsonl"))?;
        if held_out {
            self.ground_truth.save(dir.join("ground_truth.jsonl"))?;
        }
        let qpath = dir.join("queries.jsonl");
        let mut text = String::new();
        for q in &self.queries {
            text.push_str(&serde_json::to_string(q).expect("query serializes"));
            text.push('\n');
        }
        std::fs::write(&qpath, text).map_err(io(&qpath))
    }
}
