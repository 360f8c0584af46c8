//! Golden snapshots of rendered prompts. Set `RAGKIT_BLESS=1` to rewrite
//! the files after an intentional template change.

mod common;

use std::path::PathBuf;

use ragkit::corpus::Datastore;
use ragkit::prompt::{
    assemble_inference_prompt, assemble_training_example, render_prompt, sample_sdra, SdraConfig, SdraMode,
    SetsVariant, DEFAULT_MAX_PROMPT_TOKENS,
};
use ragkit::retriever::{build_index, retrieve_topk, RetrievalResult};

fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("RAGKIT_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "snapshot {name} differs");
}

fn fixture() -> (Datastore, RetrievalResult) {
    let store = common::tiny_store();
    let index = build_index(&store).unwrap();
    let result = retrieve_topk(&index, "q", &[0.9, 0.1], 3).unwrap();
    (store, result)
}

#[test]
fn inference_prompt_snapshot() {
    let (store, result) = fixture();
    let bundle = assemble_inference_prompt("q", &result, &store, 2, DEFAULT_MAX_PROMPT_TOKENS).unwrap();
    golden("inference_rank2.txt", &render_prompt(&bundle));
}

#[test]
fn training_fixed_top_two_sets_snapshot() {
    let (store, result) = fixture();
    let cfg = SdraConfig { k: 3, mode: SdraMode::FixedTop, ..Default::default() };
    let ctx = sample_sdra(&result, &store, &cfg, "r1").unwrap();
    let gt = store.get("r1").unwrap();
    let bundle = assemble_training_example(gt, &ctx, DEFAULT_MAX_PROMPT_TOKENS).unwrap();
    golden("training_fixed_top_two_sets.txt", &render_prompt(&bundle));
}

#[test]
fn training_one_set_snapshot() {
    let (store, result) = fixture();
    let cfg = SdraConfig { k: 3, mode: SdraMode::FixedTop, sets: SetsVariant::One, ..Default::default() };
    let ctx = sample_sdra(&result, &store, &cfg, "r1").unwrap();
    let gt = store.get("r3").unwrap();
    let bundle = assemble_training_example(gt, &ctx, DEFAULT_MAX_PROMPT_TOKENS).unwrap();
    golden("training_one_set.txt", &render_prompt(&bundle));
}
