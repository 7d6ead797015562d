use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roughspec::corpus::{build_term_space, TermVectorSpace, Weighting};
use roughspec::evalx::{cut_criteria, equivalence_diagnostic, score_labels, EquivalenceReport};
use roughspec::explain::{explain_clusters, explanation_drift, ClusterExplanation, DEFAULT_TOP_TERMS};
use roughspec::kmeans::KMeansConfig;
use roughspec::pipeline::{run_corpus, run_similarity, variant_method, FilterSpec, Method, MethodSpec};
use roughspec::synthgen::{dataset_preset, generate, planted_corpus, PlantedCorpusParams};
use roughspec::Partition;

#[test]
fn true_partition_beats_random_partition_on_dataset1() {
    for seed in 0..5 {
        let (s, truth) = generate::<f64>(&dataset_preset(1).unwrap().scaled(300).with_seed(seed)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let random = Partition::new((0..300).map(|i| if i < 4 { i } else { rng.random_range(0..4) }).collect(), 4).unwrap();
        let t = cut_criteria(&s, &truth).unwrap();
        let r = cut_criteria(&s, &random).unwrap();
        assert!(t.rcut < r.rcut && t.ncut < r.ncut && t.nrcut < r.nrcut, "seed {seed}");
    }
}

#[test]
fn dataset4_truth_diagnostic() {
    let (s, truth) = generate::<f64>(&dataset_preset(4).unwrap().with_seed(0)).unwrap();
    match equivalence_diagnostic(&s, &truth).unwrap() {
        EquivalenceReport::Pairs { within, pairs, .. } => {
            assert_eq!(within.len(), 4);
            assert_eq!(pairs.len(), 12);
            assert!(pairs.iter().all(|p| p.holds == (p.lhs >= p.rhs)));
            // the generated cross similarities stay below every within average
            assert!(pairs.iter().all(|p| p.holds));
        }
        EquivalenceReport::ExactBlock => panic!("dataset 4 has cross-cluster similarity"),
    }
}

#[test]
fn filtering_is_a_noop_at_threshold_zero() {
    let (s, _) = generate::<f64>(&dataset_preset(2).unwrap().scaled(200).with_seed(3)).unwrap();
    let spec = MethodSpec::new(Method::N);
    let cfg = KMeansConfig::new(4, 1);
    let plain = run_similarity(&s, &spec, None, &cfg).unwrap();
    let zero = run_similarity(&s, &spec, Some(FilterSpec { q: 0.05, threshold: 0.0 }), &cfg).unwrap();
    assert_eq!(plain.kept, (0..200).collect::<Vec<_>>());
    assert_eq!(plain.result.partition, zero.result.partition);
}

fn explain_run(
    space: &TermVectorSpace,
    kept: &[usize],
    partition: &Partition,
    topics: &[usize],
) -> (Vec<ClusterExplanation>, Vec<(usize, usize)>) {
    let sub = space.select(kept);
    let ex = explain_clusters(&sub, partition, DEFAULT_TOP_TERMS).unwrap();
    let truth: Vec<usize> = kept.iter().map(|&i| topics[i]).collect();
    let score = score_labels(&truth, partition).unwrap();
    // mapping is (cluster, truth row); rows are sorted topic ids
    let rows: Vec<usize> = {
        let mut r = truth.clone();
        r.sort_unstable();
        r.dedup();
        r
    };
    let pairs = score.mapping.iter().map(|&(c, r)| (rows[r], c)).collect();
    (ex, pairs)
}

fn mean_jaccard(ideal: &[ClusterExplanation], got: &[ClusterExplanation], pairs: &[(usize, usize)]) -> f64 {
    let d = explanation_drift(ideal, got, Some(pairs));
    d.iter().map(|e| e.jaccard).sum::<f64>() / ideal.len() as f64
}

#[test]
fn filtering_moves_explanations_towards_planted_topics() {
    let mut gains = BTreeMap::new();
    for seed in 0..5u64 {
        let pc = planted_corpus(&PlantedCorpusParams {
            seed,
            noise_docs: 20,
            topic_share: 0.5,
            ..Default::default()
        })
        .unwrap();
        let space = build_term_space(&pc.corpus, Weighting::TfIdf).unwrap();
        let topics: Vec<usize> = space.kept.iter().map(|&i| pc.labels[i]).collect();
        let noise: Vec<bool> = space.kept.iter().map(|&i| pc.is_noise[i]).collect();
        let core: Vec<usize> = (0..space.n()).filter(|&i| !noise[i]).collect();
        let ideal_partition = Partition::new(core.iter().map(|&i| topics[i]).collect(), 4).unwrap();
        let ideal = explain_clusters(&space.select(&core), &ideal_partition, DEFAULT_TOP_TERMS).unwrap();

        let spec = variant_method(5).unwrap();
        let cfg = KMeansConfig::new(4, 7);
        let mut scores = Vec::new();
        for threshold in [0.0, 0.2] {
            let out = run_corpus(&space, &spec, Some(FilterSpec { q: 0.05, threshold }), &cfg).unwrap();
            let (ex, pairs) = explain_run(&space, &out.kept, &out.result.partition, &topics);
            scores.push(mean_jaccard(&ideal, &ex, &pairs));
        }
        gains.insert(seed, (scores[0], scores[1]));
    }
    let before: f64 = gains.values().map(|g| g.0).sum::<f64>() / 5.0;
    let after: f64 = gains.values().map(|g| g.1).sum::<f64>() / 5.0;
    assert!(after > before, "{gains:?}");
    assert!(gains.values().all(|g| g.1 >= g.0), "{gains:?}");
}
