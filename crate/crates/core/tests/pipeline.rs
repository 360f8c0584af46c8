mod common;

use ragkit::generator::{CandidateRecipe, GenerateError, Generator, StubGenerator};
use ragkit::harness::{
    evaluate_cell, evaluate_without_voting, execute, generate_all, rank_confusion, sweep_records, sweep_with,
    CandidateScores, RankConfusionMatrix, SampleRecord, SyntheticSpec,
};
use ragkit::prompt::PromptBundle;
use ragkit::harness::pipeline::hypothesis_text;
use ragkit::metrics::{rouge_l, tokenize, Scheme};
use ragkit::voting::ScoringMetric;

fn small_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec { clusters: 6, per_cluster: 12, queries_per_cluster: 2, seed, ..Default::default() }
}

/// Fails every request for one query.
struct FailOn<'a> {
    inner: StubGenerator,
    query: &'a str,
}

impl Generator for FailOn<'_> {
    fn generate(&self, bundle: &PromptBundle, seed: u64) -> Result<CandidateRecipe, GenerateError> {
        if bundle.image_ref.as_deref() == Some(self.query) {
            return Err(GenerateError::Transport { attempts: 3, last: "injected".into() });
        }
        self.inner.generate(bundle, seed)
    }
}

#[test]
fn deterministic_regardless_of_parallelism() {
    let res = common::synthetic_resources(&small_spec(5));
    let gen = StubGenerator::new(0.3).unwrap();
    let mut st = common::settings(vec![1, 3, 5], vec![ScoringMetric::CosineTf], 7, 12);
    let serial = execute(&res, &st, &gen).unwrap();
    st.parallelism = 4;
    let parallel = execute(&res, &st, &gen).unwrap();
    assert_eq!(serial.records, parallel.records);
    assert_eq!(serial.report, parallel.report);
    let again = execute(&res, &st, &gen).unwrap();
    assert_eq!(
        serde_json::to_string(&again.records).unwrap(),
        serde_json::to_string(&parallel.records).unwrap()
    );
}

#[test]
fn seed_changes_candidates() {
    let res = common::synthetic_resources(&small_spec(5));
    let gen = StubGenerator::new(0.3).unwrap();
    let a = execute(&res, &common::settings(vec![3], vec![ScoringMetric::CosineTf], 1, 12), &gen).unwrap();
    let b = execute(&res, &common::settings(vec![3], vec![ScoringMetric::CosineTf], 2, 12), &gen).unwrap();
    assert_ne!(a.records, b.records);
}

#[test]
fn smaller_s_is_a_prefix_of_larger_s() {
    let res = common::synthetic_resources(&small_spec(9));
    let gen = StubGenerator::new(0.3).unwrap();
    let small = execute(&res, &common::settings(vec![3], vec![ScoringMetric::Bleu], 4, 12), &gen).unwrap();
    let large = execute(&res, &common::settings(vec![11], vec![ScoringMetric::Bleu], 4, 12), &gen).unwrap();
    assert_eq!(small.records.len(), large.records.len());
    for (s, l) in small.records.iter().zip(&large.records) {
        assert_eq!(s.query_id, l.query_id);
        assert_eq!(s.candidates[..], l.candidates[..3]);
        assert_eq!(s.ranks, vec![1, 2, 3]);
        assert_eq!(s.scores[..], l.scores[..3]);
    }
}

#[test]
fn failure_is_isolated_to_one_sample() {
    let res = common::synthetic_resources(&small_spec(3));
    let st = common::settings(vec![1, 3], vec![ScoringMetric::CosineTf], 8, 12);
    let stub = StubGenerator::new(0.3).unwrap();
    let clean = generate_all(&res, &st, &stub).unwrap();
    let victim = clean.records[2].query_id.clone();
    let broken = generate_all(&res, &st, &FailOn { inner: stub, query: &victim }).unwrap();
    assert_eq!(broken.failed.len(), 1);
    assert_eq!(broken.failed[0].0, victim);
    let kept: Vec<&SampleRecord> = clean.records.iter().filter(|r| r.query_id != victim).collect();
    assert_eq!(kept.len(), broken.records.len());
    for (a, b) in kept.iter().zip(&broken.records) {
        assert_eq!(*a, b);
    }
    let report = evaluate_cell(&broken.records, ScoringMetric::CosineTf, 3, broken.failed.len()).unwrap();
    assert_eq!(report.n_failed, 1);
    assert_eq!(report.n_samples, clean.records.len() - 1);
}

#[test]
fn exact_top1_gives_perfect_ingredient_f1() {
    // Queries are the stored recipes themselves, so rank 1 is the ground
    // truth and a dropout-free stub copies it verbatim.
    let spec = SyntheticSpec { clusters: 4, per_cluster: 5, queries_per_cluster: 5, held_out: false, seed: 2, ..Default::default() };
    let res = common::synthetic_resources(&spec);
    assert_eq!(res.store.len(), 20);
    let out = execute(&res, &common::settings(vec![1], vec![ScoringMetric::CosineTf], 0, 5), &StubGenerator::new(0.0).unwrap()).unwrap();
    assert_eq!(out.records.len(), 20);
    for r in &out.records {
        assert_eq!(r.ranks, vec![1]);
        assert_eq!(r.scores[0].ingredient_f1, 1.0, "{}", r.query_id);
        assert_eq!(r.scores[0].ingredient_iou, 1.0);
        assert_eq!(r.scores[0].weighted_f1, 1.0);
    }
    assert_eq!(out.report.ingredient_f1, Some(1.0));
}

#[test]
fn sweep_grid_and_passthrough_cell() {
    let res = common::synthetic_resources(&small_spec(1));
    let st = common::settings(vec![1, 3, 5, 7, 9, 11], ScoringMetric::ALL.to_vec(), 3, 12);
    let (table, generation) = sweep_with(&res, &st, &StubGenerator::new(0.3).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 24);
    let order: Vec<(ScoringMetric, usize)> = table.rows.iter().map(|r| (r.metric, r.s)).collect();
    let expected: Vec<(ScoringMetric, usize)> =
        ScoringMetric::ALL.iter().flat_map(|&m| [1, 3, 5, 7, 9, 11].map(|s| (m, s))).collect();
    assert_eq!(order, expected);
    let baseline = evaluate_without_voting(&generation.records, 0).unwrap();
    for m in ScoringMetric::ALL {
        assert_eq!(table.cell(m, 1).unwrap(), &baseline);
    }
}

#[test]
fn sweep_cells_match_direct_recomputation() {
    let res = common::synthetic_resources(&small_spec(6));
    let st = common::settings(vec![1, 3, 5], vec![ScoringMetric::CosineTf, ScoringMetric::RougeL], 6, 12);
    let (table, generation) = sweep_with(&res, &st, &StubGenerator::new(0.3).unwrap()).unwrap();
    for row in &table.rows {
        // Independent recomputation: argmax of row means over the prefix.
        let mut rouge = 0.0;
        for rec in &generation.records {
            let c = &rec.candidates[..row.s];
            let means: Vec<f64> = (0..row.s)
                .map(|i| {
                    if row.s == 1 {
                        return 1.0;
                    }
                    (0..row.s).filter(|&j| j != i).map(|j| ragkit::voting::text_agreement(row.metric, &c[i], &c[j])).sum::<f64>()
                        / (row.s - 1) as f64
                })
                .collect();
            let best = (0..row.s).fold(0, |b, i| if means[i] > means[b] { i } else { b });
            let tok = |t: &str| tokenize(t, Scheme::Simple);
            rouge += rouge_l(&tok(&hypothesis_text(&c[best])), &tok(&rec.reference), 1.0).unwrap();
        }
        let expected = rouge / generation.records.len() as f64;
        assert!((row.report.rouge_l - expected).abs() < 1e-9, "{:?} S={}", row.metric, row.s);
    }
}

#[test]
fn identical_candidates_make_all_cells_equal() {
    let res = common::synthetic_resources(&small_spec(2));
    let st = common::settings(vec![1, 3], ScoringMetric::ALL.to_vec(), 0, 12);
    let mut generation = generate_all(&res, &st, &StubGenerator::new(0.3).unwrap()).unwrap();
    for r in &mut generation.records {
        let first = r.candidates[0].clone();
        let s0 = r.scores[0].clone();
        r.candidates.iter_mut().for_each(|c| *c = first.clone());
        r.scores.iter_mut().for_each(|s| *s = s0.clone());
    }
    let table = sweep_records(&generation, &ScoringMetric::ALL, &[1, 3]).unwrap();
    for row in &table.rows {
        assert_eq!(row.report, table.rows[0].report);
    }
}

fn hand_record(id: &str, confidences: Vec<f64>, rouge: Vec<f64>) -> SampleRecord {
    let n = confidences.len();
    SampleRecord {
        query_id: id.into(),
        ranks: (1..=n).collect(),
        candidates: (0..n).map(|i| format!("candidate {i}")).collect(),
        reference: "ref".into(),
        metric: ScoringMetric::CosineTf,
        confidences,
        selected: 0,
        scores: rouge
            .into_iter()
            .map(|r| CandidateScores {
                bleu: 0.0,
                sacrebleu: 0.0,
                rouge_l: r,
                cosine_tf: 0.0,
                ingredient_f1: 0.0,
                ingredient_iou: 0.0,
                weighted_f1: 0.0,
            })
            .collect(),
    }
}

#[test]
fn rank_confusion_hand_tabulation() {
    let records = vec![
        // Confidence order 0,1,2; true order 0,1,2.
        hand_record("a", vec![0.9, 0.5, 0.1], vec![30.0, 20.0, 10.0]),
        // Confidence order 2,0,1; true ranks by index [2,1,3].
        hand_record("b", vec![0.5, 0.2, 0.8], vec![20.0, 40.0, 5.0]),
        // Constant confidences: order 0,1,2; true ranks by index [3,2,1].
        hand_record("c", vec![0.4, 0.4, 0.4], vec![1.0, 2.0, 3.0]),
    ];
    let m = rank_confusion(&records, ScoringMetric::RougeL, None).unwrap();
    let expected = RankConfusionMatrix {
        size: 3,
        counts: vec![vec![1, 0, 2], vec![0, 3, 0], vec![2, 0, 1]],
    };
    assert_eq!(m, expected);
    assert_eq!(m.row_sums(), vec![3, 3, 3]);
}

#[test]
fn rank_confusion_perfect_agreement_and_errors() {
    let records: Vec<SampleRecord> =
        (0..4).map(|i| hand_record(&i.to_string(), vec![0.9, 0.5, 0.1], vec![3.0, 2.0, 1.0])).collect();
    let m = rank_confusion(&records, ScoringMetric::RougeL, None).unwrap();
    assert_eq!(m.counts[0][0], 4);
    assert_eq!(m.counts[1][1], 4);
    let short = vec![hand_record("x", vec![0.9, 0.5, 0.1], vec![3.0, 2.0, 1.0]), hand_record("y", vec![1.0], vec![1.0])];
    assert!(rank_confusion(&short, ScoringMetric::RougeL, None).is_err());
    assert!(rank_confusion(&[], ScoringMetric::RougeL, None).is_err());
}

#[test]
fn rank_confusion_rows_sum_on_pipeline_records() {
    let res = common::synthetic_resources(&small_spec(4));
    let st = common::settings(vec![5], vec![ScoringMetric::Bleu], 1, 12);
    let out = execute(&res, &st, &StubGenerator::new(0.3).unwrap()).unwrap();
    for truth in ScoringMetric::ALL {
        let m = rank_confusion(&out.records, truth, None).unwrap();
        assert!(m.row_sums().iter().all(|&s| s as usize == out.records.len()));
        let prefix = rank_confusion(&out.records, truth, Some(3)).unwrap();
        assert!(prefix.row_sums().iter().all(|&s| s as usize == out.records.len()));
    }
}

#[test]
fn sample_limit_is_a_seeded_subset() {
    let res = common::synthetic_resources(&small_spec(8));
    let mut st = common::settings(vec![1], vec![ScoringMetric::CosineTf], 5, 12);
    st.sample_limit = Some(4);
    let gen = StubGenerator::new(0.3).unwrap();
    let a = execute(&res, &st, &gen).unwrap();
    let b = execute(&res, &st, &gen).unwrap();
    assert_eq!(a.records.len(), 4);
    assert_eq!(a.records, b.records);
    st.global_seed = 6;
    let c = execute(&res, &st, &gen).unwrap();
    let ids = |o: &ragkit::harness::RunOutput| o.records.iter().map(|r| r.query_id.clone()).collect::<Vec<_>>();
    assert_ne!(ids(&a), ids(&c));
}
