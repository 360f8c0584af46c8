#![allow(dead_code)]

use ragkit::corpus::{BroaderCategoryTable, Datastore, IngredientVocabulary, Normalizer, Recipe, BUILTIN_CATEGORIES, BUILTIN_VOCABULARY};
use ragkit::harness::{synthesize, Resources, RunSettings, SyntheticSpec};
use ragkit::prompt::SdraConfig;
use ragkit::voting::ScoringMetric;

pub fn vocab() -> IngredientVocabulary {
    IngredientVocabulary::parse(BUILTIN_VOCABULARY, Normalizer::default()).unwrap()
}

pub fn categories() -> BroaderCategoryTable {
    BroaderCategoryTable::parse(BUILTIN_CATEGORIES).unwrap()
}

pub fn recipe(id: &str, title: &str, ingredients: &[&str], steps: &[&str], embedding: Option<Vec<f64>>) -> Recipe {
    Recipe {
        id: id.into(),
        title: title.into(),
        ingredients: ingredients.iter().map(|s| s.to_string()).collect(),
        instructions: steps.iter().map(|s| s.to_string()).collect(),
        embedding,
    }
}

/// Three recipes with fixed embeddings; query `q` sits closest to `r1`.
pub fn tiny_store() -> Datastore {
    Datastore::from_recipes(vec![
        recipe("r1", "Tomato Pasta", &["pasta", "tomato", "garlic"], &["Boil the pasta.", "Toss with sauce."], Some(vec![1.0, 0.0])),
        recipe("r2", "Garlic Bread", &["bread", "garlic", "butter"], &["Spread butter.", "Bake 10 minutes."], Some(vec![0.8, 0.6])),
        recipe("r3", "Green Salad", &["lettuce", "olive_oil"], &["Wash lettuce.", "Dress and serve."], Some(vec![0.0, 1.0])),
    ])
    .unwrap()
}

pub fn synthetic_resources(spec: &SyntheticSpec) -> Resources {
    let corpus = synthesize(spec, &vocab()).unwrap();
    let gt = spec.held_out.then(|| corpus.ground_truth.clone());
    Resources::new(corpus.store, vocab(), categories(), corpus.queries, gt).unwrap()
}

pub fn settings(s_values: Vec<usize>, metrics: Vec<ScoringMetric>, seed: u64, k: usize) -> RunSettings {
    RunSettings {
        sdra: SdraConfig { k, ..Default::default() },
        s_values,
        scoring_metrics: metrics,
        global_seed: seed,
        sample_limit: None,
        parallelism: 1,
    }
}
