//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use roughspec::corpus::{build_term_space, Weighting};
use roughspec::evalx::{match_and_score, rcut, score_labels, ConfusionMatrix};
use roughspec::gower::{b_embedding, k_embedding, m_embedding};
use roughspec::kmeans::{kmeans, weighted_kmeans, KMeansConfig};
use roughspec::pipeline::{cluster, improvement_summary, sweep, variant_method, Method, MethodSpec, SweepDataset, SweepInput, VARIANT_COUNT};
use roughspec::roughfilter::{filter_boundary, similarity_profile};
use roughspec::simcore::symmetric_eig;
use roughspec::spectral::combinatorial_laplacian;
use roughspec::synthgen::{dataset_preset, generate, inject_noise, planted_corpus, PlantedCorpusParams};
use roughspec::{Embedding, EmbeddingKind, Partition, SimilarityMatrix};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, title: &str, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = run();
    println!(
        "criterion {id}: {} - {title}: {} [{:.1}s]",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        start.elapsed().as_secs_f64()
    );
    o.pass
}

const FOUR: [Method; 4] = [Method::L, Method::K, Method::N, Method::B];

fn error_of(s: &SimilarityMatrix<f64>, truth: &[usize], m: Method, k: usize, seed: u64) -> (f64, Duration) {
    let t = Instant::now();
    let r = cluster(s, &MethodSpec::new(m), &KMeansConfig::new(k, seed)).expect("pipeline runs");
    let e = score_labels(truth, &r.partition).expect("scored").relative_error;
    (e, t.elapsed())
}

fn criterion1() -> Outcome {
    let start = Instant::now();
    let tables: [(&str, Vec<Vec<usize>>, f64); 3] = [
        ("A", vec![vec![35, 0, 0, 1], vec![0, 108, 0, 0], vec![0, 0, 348, 0], vec![0, 0, 1008, 0]], 23.2),
        ("B", vec![vec![729, 3, 0], vec![364, 4, 71], vec![470, 361, 0]], 42.0),
        ("C", vec![vec![9, 0, 723], vec![162, 270, 5], vec![829, 1, 1]], 8.9),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, counts, expected) in tables {
        let e = 100.0 * match_and_score(&ConfusionMatrix::from_counts(counts).unwrap()).unwrap().relative_error;
        pass &= (e - expected).abs() <= 0.2;
        parts.push(format!("{name} {e:.2}% (expected {expected}%)"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(1);
    Outcome {
        pass,
        detail: parts.join(", "),
    }
}

/// Per method: number of seeds with zero error and the slowest run.
fn dataset1_runs(n: usize) -> Vec<(Method, usize, Duration)> {
    let runs: Vec<(u64, Vec<(f64, Duration)>)> = (0..5u64)
        .into_par_iter()
        .map(|seed| {
            let (s, truth) = generate::<f64>(&dataset_preset(1).unwrap().scaled(n).with_seed(seed)).unwrap();
            (seed, FOUR.iter().map(|&m| error_of(&s, truth.labels(), m, 4, seed)).collect())
        })
        .collect();
    FOUR.iter()
        .enumerate()
        .map(|(mi, &m)| {
            let ok = runs.iter().filter(|(_, r)| r[mi].0 == 0.0).count();
            let slowest = runs.iter().map(|(_, r)| r[mi].1).max().unwrap();
            (m, ok, slowest)
        })
        .collect()
}

fn criterion2() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, budget) in [(500, Duration::from_secs(15)), (1500, Duration::from_secs(180))] {
        let runs = dataset1_runs(n);
        let line: Vec<String> = runs
            .iter()
            .map(|(m, ok, slowest)| {
                pass &= *ok >= 4 && *slowest <= budget;
                format!("{m} {ok}/5 max {:.1}s", slowest.as_secs_f64())
            })
            .collect();
        parts.push(format!("n={n}: {}", line.join(", ")));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion3() -> Outcome {
    let rows: Vec<(f64, f64)> = (0..5u64)
        .into_par_iter()
        .map(|seed| {
            let (s, truth) = generate::<f64>(&dataset_preset(4).unwrap().with_seed(seed)).unwrap();
            let l = error_of(&s, truth.labels(), Method::L, 4, seed).0;
            let n = error_of(&s, truth.labels(), Method::N, 4, seed).0;
            (l, n)
        })
        .collect();
    let hits = rows.iter().filter(|(l, n)| *l >= 0.15 && *n <= 0.05).count();
    let detail = rows
        .iter()
        .map(|(l, n)| format!("L {:.1}%/N {:.1}%", 100.0 * l, 100.0 * n))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome {
        pass: hits >= 3,
        detail: format!("{hits}/5 seeds with L >= 15% and N <= 5% ({detail})"),
    }
}

fn random_similarity(n: usize, rng: &mut ChaCha8Rng) -> SimilarityMatrix<f64> {
    SimilarityMatrix::from_upper(n, |_, _| rng.random::<f64>()).unwrap()
}

fn max_distance_error(e: &Embedding<f64>, target: impl Fn(usize, usize) -> f64) -> f64 {
    let n = e.n();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for l in 0..n {
            if i == l {
                continue;
            }
            let d: f64 = (0..e.d()).map(|c| (e.coords()[[i, c]] - e.coords()[[l, c]]).powi(2)).sum();
            worst = worst.max((d - target(i, l)).abs());
        }
    }
    worst
}

fn criterion4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pass = true;
    let mut worst = [0.0f64; 3];
    for _ in 0..20 {
        let s = random_similarity(50, &mut rng);
        let d: Vec<f64> = (0..50).map(|i| (0..50).map(|l| s.get(i, l)).sum()).collect();
        let k = k_embedding(&s).unwrap();
        let m = m_embedding(&s).unwrap();
        let b = b_embedding(&s).unwrap();
        let errs = [
            (max_distance_error(&k, |i, l| 1.0 - s.get(i, l)), k.dropped_mass()),
            (
                max_distance_error(&m, |i, l| 1.0 / d[i] + 1.0 / d[l] - 2.0 * s.get(i, l) / (d[i] * d[l])),
                m.dropped_mass(),
            ),
            (
                max_distance_error(&b, |i, l| {
                    let (a, c) = (d[i] + 1.0, d[l] + 1.0);
                    1.0 / (a * a) + 1.0 / (c * c) - 2.0 * s.get(i, l) / (a * c)
                }),
                b.dropped_mass(),
            ),
        ];
        for (j, (err, dropped)) in errs.iter().enumerate() {
            pass &= *err <= dropped.max(1e-6);
            worst[j] = worst[j].max(*err);
        }
    }
    pass &= start.elapsed() < Duration::from_secs(10);
    Outcome {
        pass,
        detail: format!("max errors K {:.2e}, M {:.2e}, B {:.2e}", worst[0], worst[1], worst[2]),
    }
}

fn criterion5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pass = true;
    let mut parts = Vec::new();
    for k in 2..=4 {
        let sizes: Vec<usize> = (0..k).map(|_| rng.random_range(3..9)).collect();
        let labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &s)| std::iter::repeat_n(c, s)).collect();
        let n = labels.len();
        let vals: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.1..1.0)).collect();
        let build = |extra: usize| {
            SimilarityMatrix::from_upper(n + extra, |i, j| {
                if j < n && labels[i] == labels[j] {
                    vals[i * n + j]
                } else {
                    0.0
                }
            })
            .unwrap()
        };
        let count = |s: &SimilarityMatrix<f64>| {
            symmetric_eig(&combinatorial_laplacian(s))
                .unwrap()
                .values
                .iter()
                .filter(|&&v| v < 1e-8)
                .count()
        };
        let (base, extended) = (count(&build(0)), count(&build(1)));
        pass &= base == k && extended == k + 1;
        parts.push(format!("k={k}: {base} then {extended}"));
    }
    Outcome {
        pass,
        detail: parts.join(", "),
    }
}

fn criterion6() -> Outcome {
    let params = dataset_preset(1).unwrap().with_seed(6);
    let (s, truth) = generate::<f64>(&params).unwrap();
    let (noisy, noise) = inject_noise(&s, 30, 0.08, params.seed + 1).unwrap();
    let profile = similarity_profile(&noisy, 0.05).unwrap();
    let out = filter_boundary(&noisy, &profile, 0.1).unwrap();
    let exact = out.removed == noise;
    let errors: Vec<(Method, f64)> = FOUR
        .par_iter()
        .map(|&m| (m, error_of(&out.core, truth.labels(), m, 4, 0).0))
        .collect();
    let all_zero = errors.iter().all(|(_, e)| *e == 0.0);
    Outcome {
        pass: exact && all_zero,
        detail: format!(
            "removed {} items ({}), post-filter errors {}",
            out.removed.len(),
            if exact { "exactly the noise" } else { "not the noise set" },
            errors.iter().map(|(m, e)| format!("{m} {:.1}%", 100.0 * e)).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn criterion7() -> Outcome {
    let start = Instant::now();
    let datasets: Vec<SweepDataset> = (0..20u64)
        .map(|seed| {
            let pc = planted_corpus(&PlantedCorpusParams {
                topics: 3 + (seed % 4) as usize,
                seed,
                ..Default::default()
            })
            .unwrap();
            let space = build_term_space(&pc.corpus, Weighting::TfIdf).unwrap();
            let truth = space.kept.iter().map(|&i| pc.labels[i].to_string()).collect();
            SweepDataset {
                name: format!("planted{seed}"),
                input: SweepInput::Corpus(space),
                truth,
            }
        })
        .collect();
    let methods: Vec<MethodSpec> = (0..VARIANT_COUNT).map(|i| variant_method(i).unwrap()).collect();
    let cells = sweep(&datasets, &methods, &[0.0, 0.2], 0.05, &KMeansConfig::new(2, 7)).unwrap();
    let summary = improvement_summary(&cells);
    let improved: usize = summary.iter().map(|s| s.improved).sum();
    let total: usize = summary.iter().map(|s| s.total).sum();
    let pct = 100.0 * improved as f64 / total as f64;
    Outcome {
        pass: total == 180 && pct >= 70.0 && start.elapsed() <= Duration::from_secs(20 * 60),
        detail: format!("{improved}/{total} cells improved ({pct:.1}%)"),
    }
}

fn naive_rcut(s: &SimilarityMatrix<f64>, labels: &[usize], k: usize) -> f64 {
    let n = labels.len();
    let mut total = 0.0;
    for j in 0..k {
        let size = labels.iter().filter(|&&l| l == j).count() as f64;
        let mut cut = 0.0;
        for i in 0..n {
            for l in 0..n {
                if labels[i] == j && labels[l] != j {
                    cut += s.get(i, l);
                }
            }
        }
        total += cut / size;
    }
    total
}

fn criterion8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut max_diff: f64 = 0.0;
    let mut beaten = 0;
    let mut checked = 0;
    let mut closest = f64::INFINITY;
    for inst in 0..50 {
        let n = 3 + inst % 8;
        let s = random_similarity(n, &mut rng);
        let mut best = f64::INFINITY;
        for mask in 1..(1u32 << (n - 1)) {
            let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
            let p = Partition::new(labels.clone(), 2).unwrap();
            let fast = rcut(&s, &p).unwrap();
            max_diff = max_diff.max((fast - naive_rcut(&s, &labels, 2)).abs());
            best = best.min(fast);
        }
        for m in Method::ALL {
            let r = cluster(&s, &MethodSpec::new(m), &KMeansConfig::new(2, inst as u64)).unwrap();
            checked += 1;
            let gap = naive_rcut(&s, r.partition.labels(), 2) - best;
            closest = closest.min(gap);
            if gap < -1e-12 * best.max(1.0) {
                beaten += 1;
            }
        }
    }
    Outcome {
        pass: max_diff <= 1e-12 && beaten == 0,
        detail: format!("max |rcut - oracle| {max_diff:.1e}, {beaten} of {checked} pipeline partitions below the exhaustive minimum (min gap {closest:.1e})"),
    }
}

/// Minimum weighted within-cluster sum of squares over all partitions into
/// exactly `k` nonempty clusters.
fn exhaustive_kmeans(x: &Array2<f64>, w: &[f64], k: usize) -> f64 {
    let n = x.nrows();
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    let total = k.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        for l in labels.iter_mut() {
            *l = c % k;
            c /= k;
        }
        let used: BTreeSet<usize> = labels.iter().copied().collect();
        if used.len() != k {
            continue;
        }
        let mut sse = 0.0;
        for j in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == j).collect();
            let wsum: f64 = members.iter().map(|&i| w[i]).sum();
            for d in 0..x.ncols() {
                let mu = members.iter().map(|&i| w[i] * x[[i, d]]).sum::<f64>() / wsum;
                sse += members.iter().map(|&i| w[i] * (x[[i, d]] - mu).powi(2)).sum::<f64>();
            }
        }
        best = best.min(sse);
    }
    best
}

fn criterion9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut matched = [0usize; 2];
    let mut below = 0;
    for inst in 0..50u64 {
        let n = rng.random_range(4..=8);
        let d = rng.random_range(1..=3);
        let k = rng.random_range(2..=3);
        let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
        let cfg = KMeansConfig::new(k, inst);
        for (slot, weights) in [vec![1.0; n], w].into_iter().enumerate() {
            let opt = exhaustive_kmeans(&x, &weights, k);
            let e = Embedding::new(x.clone(), Some(weights.iter().copied().collect()), EmbeddingKind::Raw).unwrap();
            let got = if slot == 0 {
                kmeans(&e, &cfg).unwrap().objective
            } else {
                weighted_kmeans(&e, &cfg).unwrap().objective
            };
            let rel = (got - opt) / opt.max(f64::MIN_POSITIVE);
            if rel <= 1e-9 {
                matched[slot] += 1;
            }
            if rel < -1e-9 {
                below += 1;
            }
        }
    }
    Outcome {
        pass: matched.iter().all(|&m| m >= 48) && below == 0,
        detail: format!(
            "plain {}/50, weighted {}/50 at the optimum, {below} below it",
            matched[0], matched[1]
        ),
    }
}

fn main() {
    let checks: [(usize, &str, fn() -> Outcome); 9] = [
        (1, "relative error on reference confusion matrices", criterion1),
        (2, "dataset 1 recovered by L, K, N, B", criterion2),
        (3, "dataset 4: L fails, N succeeds", criterion3),
        (4, "K/M/B distance identities", criterion4),
        (5, "block spectrum of the combinatorial Laplacian", criterion5),
        (6, "filter removes injected noise", criterion6),
        (7, "filtering reduces error on noisy planted corpora", criterion7),
        (8, "RCut oracle and exhaustive lower bound", criterion8),
        (9, "k-means matches exhaustive optimum", criterion9),
    ];
    let mut failed = 0;
    for (id, title, f) in checks {
        if !report(id, title, f) {
            failed += 1;
        }
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
