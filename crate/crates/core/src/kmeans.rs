//! Plain and weighted k-means with greedy k-means++ seeding and restarts.
//!
//! The weighted objective is `sum_i w_i |x_i - mu(c_i)|^2` with weighted
//! centroids `mu_j = sum_{i in C_j} w_i x_i / sum_{i in C_j} w_i`; plain
//! k-means is the special case of unit weights. Each restart alternates
//! Lloyd iterations with a single-point transfer pass until neither changes
//! the partition, so returned partitions cannot be improved by moving one
//! point to another cluster.

use std::cmp::Ordering;

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simcore::{Embedding, Partition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KMeansConfig {
    pub k: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_restarts() -> usize {
    10
}
fn default_max_iter() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-9
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            restarts: default_restarts(),
            max_iter: default_max_iter(),
            tol: default_tol(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.restarts == 0 || self.max_iter == 0 {
            return Err(Error::InvalidParameter(format!(
                "k, restarts and max_iter must be >= 1 (got {}, {}, {})",
                self.k, self.restarts, self.max_iter
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be > 0, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult<T> {
    pub partition: Partition,
    pub centroids: Array2<T>,
    pub objective: T,
    pub iterations_run: usize,
    pub restart_chosen: usize,
    /// Objective after every Lloyd update and transfer pass of the chosen
    /// restart; non-increasing.
    pub history: Vec<T>,
}

#[derive(Serialize)]
struct ResultJson<'a> {
    labels: &'a [usize],
    centroids: Vec<Vec<f64>>,
    objective: f64,
    iterations_run: usize,
    restart_chosen: usize,
    config: &'a KMeansConfig,
}

impl<T: Scalar> KMeansResult<T> {
    pub fn to_json(&self, cfg: &KMeansConfig) -> Result<String> {
        let doc = ResultJson {
            labels: self.partition.labels(),
            centroids: self
                .centroids
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|v| v.as_f64()).collect())
                .collect(),
            objective: self.objective.as_f64(),
            iterations_run: self.iterations_run,
            restart_chosen: self.restart_chosen,
            config: cfg,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// Unweighted k-means. Embeddings carrying unequal weights are rejected;
/// use [`weighted_kmeans`] for those.
pub fn kmeans<T: Scalar>(e: &Embedding<T>, cfg: &KMeansConfig) -> Result<KMeansResult<T>> {
    if let Some(w) = e.weights() {
        if w.iter().any(|&v| v != w[0]) {
            return Err(Error::InvalidParameter(
                "plain k-means got unequal weights; use weighted k-means".into(),
            ));
        }
    }
    run(e.coords(), None, cfg)
}

/// Weighted k-means with the embedding's weights.
pub fn weighted_kmeans<T: Scalar>(e: &Embedding<T>, cfg: &KMeansConfig) -> Result<KMeansResult<T>> {
    let w = e
        .weights()
        .ok_or_else(|| Error::InvalidParameter("weighted k-means needs point weights".into()))?;
    run(e.coords(), Some(w), cfg)
}

/// Weighted within-cluster sum of squares of `partition` around `centroids`.
pub fn objective<T: Scalar>(
    points: &Array2<T>,
    weights: Option<&Array1<T>>,
    partition: &Partition,
    centroids: &Array2<T>,
) -> T {
    (0..points.nrows())
        .map(|i| {
            let w = weights.map_or(T::one(), |w| w[i]);
            w * sq_dist(points.row(i), centroids.row(partition.label(i)))
        })
        .sum()
}

/// Weighted means of the clusters; empty clusters get a zero row.
pub fn weighted_centroids<T: Scalar>(
    points: &Array2<T>,
    weights: Option<&Array1<T>>,
    partition: &Partition,
) -> Array2<T> {
    let (n, d) = points.dim();
    let mut sums = Array2::zeros((partition.k(), d));
    let mut mass = vec![T::zero(); partition.k()];
    for i in 0..n {
        let w = weights.map_or(T::one(), |w| w[i]);
        let c = partition.label(i);
        mass[c] += w;
        for (acc, &x) in sums.row_mut(c).iter_mut().zip(points.row(i).iter()) {
            *acc += w * x;
        }
    }
    for (c, m) in mass.iter().enumerate() {
        if *m > T::zero() {
            sums.row_mut(c).mapv_inplace(|v| v / *m);
        }
    }
    sums
}

#[inline]
fn sq_dist<T: Scalar>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    a.iter().zip(b.iter()).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

fn lexicographic<T: Scalar>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

fn run<T: Scalar>(
    points: &Array2<T>,
    weights: Option<&Array1<T>>,
    cfg: &KMeansConfig,
) -> Result<KMeansResult<T>> {
    cfg.validate()?;
    let n = points.nrows();
    if cfg.k > n {
        return Err(Error::InvalidParameter(format!(
            "k = {} exceeds the number of points {n}",
            cfg.k
        )));
    }
    if let Some(((i, j), _)) = points.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { row: i, col: j });
    }

    // Points are processed in a canonical (lexicographic) order so that the
    // seeded result does not depend on the input order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        lexicographic(points.row(a), points.row(b))
            .then_with(|| match weights {
                Some(w) => w[a].partial_cmp(&w[b]).unwrap_or(Ordering::Equal),
                None => Ordering::Equal,
            })
            .then(a.cmp(&b))
    });
    let canon = points.select(ndarray::Axis(0), &order);
    // Weights are rescaled so the largest is 1; equal weights become exactly
    // 1 and follow the same arithmetic as the unweighted case.
    let (unit_weights, scale) = match weights {
        Some(w) => {
            let max = w.iter().copied().fold(T::zero(), T::max);
            let cw: Array1<T> = order.iter().map(|&i| w[i] / max).collect();
            (cw, max)
        }
        None => (Array1::from_elem(n, T::one()), T::one()),
    };

    let mut best: Option<(Lloyd<T>, usize)> = None;
    for r in 0..cfg.restarts {
        let seed = cfg.seed.wrapping_add(r as u64);
        let outcome = single_run(&canon, &unit_weights, cfg, seed);
        let better = match &best {
            None => true,
            Some((b, _)) => outcome.objective < b.objective,
        };
        if better {
            best = Some((outcome, r));
        }
    }
    let (best, restart_chosen) = best.expect("at least one restart");

    let mut labels = vec![0; n];
    for (pos, &orig) in order.iter().enumerate() {
        labels[orig] = best.labels[pos];
    }
    let partition = Partition::new(labels, cfg.k)?;
    let mut rescaled = Array1::from_elem(n, T::one());
    for (pos, &orig) in order.iter().enumerate() {
        rescaled[orig] = unit_weights[pos];
    }
    let centroids = weighted_centroids(points, Some(&rescaled), &partition);
    let objective = objective(points, Some(&rescaled), &partition, &centroids) * scale;
    Ok(KMeansResult {
        partition,
        centroids,
        objective,
        iterations_run: best.iterations,
        restart_chosen,
        history: best.history.into_iter().map(|v| v * scale).collect(),
    })
}

struct Lloyd<T> {
    labels: Vec<usize>,
    objective: T,
    iterations: usize,
    history: Vec<T>,
}

struct State<'a, T> {
    points: &'a Array2<T>,
    weights: &'a Array1<T>,
    k: usize,
    labels: Vec<usize>,
    centroids: Array2<T>,
}

impl<T: Scalar> State<'_, T> {
    fn nearest(&self, i: usize) -> (usize, T) {
        let mut best = (0, T::infinity());
        for c in 0..self.k {
            let d = sq_dist(self.points.row(i), self.centroids.row(c));
            if d < best.1 {
                best = (c, d);
            }
        }
        best
    }

    fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    fn update_centroids(&mut self) {
        let p = Partition::new(self.labels.clone(), self.k).expect("labels below k");
        let fresh = weighted_centroids(self.points, Some(self.weights), &p);
        // Keep the previous position for clusters that are (transiently) empty.
        let sizes = self.sizes();
        for c in 0..self.k {
            if sizes[c] > 0 {
                self.centroids.row_mut(c).assign(&fresh.row(c));
            }
        }
    }

    fn objective(&self) -> T {
        (0..self.points.nrows())
            .map(|i| self.weights[i] * sq_dist(self.points.row(i), self.centroids.row(self.labels[i])))
            .sum()
    }

    /// Moves the point farthest from its centroid (lowest index on ties)
    /// out of a cluster with at least two members into each empty cluster.
    fn repair_empty(&mut self) {
        loop {
            let sizes = self.sizes();
            let Some(empty) = sizes.iter().position(|&s| s == 0) else {
                return;
            };
            let mut far: Option<(usize, T)> = None;
            for i in 0..self.points.nrows() {
                if sizes[self.labels[i]] < 2 {
                    continue;
                }
                let d = sq_dist(self.points.row(i), self.centroids.row(self.labels[i]));
                if far.is_none_or(|(_, fd)| d > fd) {
                    far = Some((i, d));
                }
            }
            let (i, _) = far.expect("k <= n leaves a cluster with two members");
            self.labels[i] = empty;
            self.centroids.row_mut(empty).assign(&self.points.row(i));
        }
    }

    /// One sweep of single-point transfers that strictly lower the weighted
    /// objective. Returns the number of moves.
    fn transfer_pass(&mut self) -> usize {
        let n = self.points.nrows();
        let mut mass = vec![T::zero(); self.k];
        for i in 0..n {
            mass[self.labels[i]] += self.weights[i];
        }
        let margin = T::one() - T::lit(1e-12);
        let mut moves = 0;
        for i in 0..n {
            let a = self.labels[i];
            let w = self.weights[i];
            let rest = mass[a] - w;
            if rest <= T::zero() {
                continue;
            }
            let remove = w * mass[a] / rest * sq_dist(self.points.row(i), self.centroids.row(a));
            let mut target: Option<(usize, T)> = None;
            for b in 0..self.k {
                if b == a {
                    continue;
                }
                let add = w * mass[b] / (mass[b] + w) * sq_dist(self.points.row(i), self.centroids.row(b));
                if target.is_none_or(|(_, t)| add < t) {
                    target = Some((b, add));
                }
            }
            let Some((b, add)) = target else { continue };
            if add < remove * margin {
                let x = self.points.row(i).to_owned();
                // Incremental weighted mean updates.
                let new_a = mass[a] - w;
                let new_b = mass[b] + w;
                let ca = self.centroids.row(a).to_owned();
                let cb = self.centroids.row(b).to_owned();
                self.centroids
                    .row_mut(a)
                    .assign(&((&ca * mass[a] - &x * w) / new_a));
                self.centroids
                    .row_mut(b)
                    .assign(&((&cb * mass[b] + &x * w) / new_b));
                mass[a] = new_a;
                mass[b] = new_b;
                self.labels[i] = b;
                moves += 1;
            }
        }
        if moves > 0 {
            self.update_centroids();
        }
        moves
    }
}

fn plus_plus_seeds<T: Scalar>(points: &Array2<T>, weights: &Array1<T>, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = points.nrows();
    let mut chosen = Vec::with_capacity(k);
    let pick = |scores: &[f64], rng: &mut ChaCha8Rng| -> Option<usize> {
        let total: f64 = scores.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return None;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last = None;
        for (i, &s) in scores.iter().enumerate() {
            if s <= 0.0 {
                continue;
            }
            acc += s;
            last = Some(i);
            if acc > target {
                return Some(i);
            }
        }
        last
    };
    let w: Vec<f64> = weights.iter().map(|v| v.as_f64()).collect();
    chosen.push(pick(&w, rng).unwrap_or(0));
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), points.row(chosen[0])).as_f64())
        .collect();
    // Greedy variant: several candidates per step, keep the one that lowers
    // the seeding potential most.
    let trials = 2 + (k as f64).ln().floor() as usize;
    while chosen.len() < k {
        let scores: Vec<f64> = nearest.iter().zip(w.iter()).map(|(d, w)| d * w).collect();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let Some(cand) = pick(&scores, rng) else {
                break;
            };
            let updated: Vec<f64> = (0..n)
                .map(|i| nearest[i].min(sq_dist(points.row(i), points.row(cand)).as_f64()))
                .collect();
            let potential: f64 = updated.iter().zip(w.iter()).map(|(d, w)| d * w).sum();
            if best.as_ref().is_none_or(|(p, _, _)| potential < *p) {
                best = Some((potential, cand, updated));
            }
        }
        match best {
            Some((_, cand, updated)) => {
                chosen.push(cand);
                nearest = updated;
            }
            None => {
                // Fewer distinct points than k: take the lowest unused index.
                let next = (0..n).find(|i| !chosen.contains(i)).expect("k <= n");
                chosen.push(next);
                for (i, d) in nearest.iter_mut().enumerate() {
                    *d = d.min(sq_dist(points.row(i), points.row(next)).as_f64());
                }
            }
        }
    }
    chosen
}

fn single_run<T: Scalar>(points: &Array2<T>, weights: &Array1<T>, cfg: &KMeansConfig, seed: u64) -> Lloyd<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = plus_plus_seeds(points, weights, cfg.k, &mut rng);
    let mut state = State {
        points,
        weights,
        k: cfg.k,
        labels: vec![0; points.nrows()],
        centroids: points.select(ndarray::Axis(0), &seeds),
    };
    let tol = T::lit(cfg.tol);
    let mut history: Vec<T> = Vec::new();
    let mut iterations = 0;
    let mut first = true;
    'outer: while iterations < cfg.max_iter {
        loop {
            iterations += 1;
            let mut changed = first;
            first = false;
            for i in 0..points.nrows() {
                let (c, _) = state.nearest(i);
                if c != state.labels[i] {
                    state.labels[i] = c;
                    changed = true;
                }
            }
            state.repair_empty();
            state.update_centroids();
            let obj = state.objective();
            let prev = history.last().copied();
            history.push(obj);
            if !changed {
                break;
            }
            if let Some(p) = prev {
                if p - obj <= tol * p {
                    break;
                }
            }
            if iterations >= cfg.max_iter {
                break 'outer;
            }
        }
        if state.transfer_pass() == 0 {
            break;
        }
        history.push(state.objective());
    }
    let objective = state.objective();
    Lloyd {
        labels: state.labels,
        objective,
        iterations,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::EmbeddingKind;
    use ndarray::array;

    fn emb(coords: Array2<f64>, weights: Option<Array1<f64>>) -> Embedding<f64> {
        Embedding::new(coords, weights, EmbeddingKind::Raw).unwrap()
    }

    /// Minimum of the weighted objective over all labelings with every
    /// cluster nonempty.
    fn brute_force(points: &Array2<f64>, weights: &[f64], k: usize) -> f64 {
        let n = points.nrows();
        let mut best = f64::INFINITY;
        let total = k.pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let labels: Vec<usize> = (0..n)
                .map(|_| {
                    let l = c % k;
                    c /= k;
                    l
                })
                .collect();
            let p = Partition::new(labels, k).unwrap();
            if p.has_empty() {
                continue;
            }
            let w = Array1::from(weights.to_vec());
            let cents = weighted_centroids(points, Some(&w), &p);
            best = best.min(objective(points, Some(&w), &p, &cents));
        }
        best
    }

    #[test]
    fn unit_square_with_k4() {
        let e = emb(array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], None);
        let r = kmeans(&e, &KMeansConfig::new(4, 1)).unwrap();
        assert_eq!(r.objective, 0.0);
        let mut labels = r.partition.labels().to_vec();
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2, 3]);
    }

    #[test]
    fn two_pairs() {
        let pts = array![[0.0, 0.0], [0.0, 0.2], [5.0, 5.0], [5.2, 5.0]];
        let r = kmeans(&emb(pts.clone(), None), &KMeansConfig::new(2, 3)).unwrap();
        // Each pair contributes half its squared distance.
        assert!((r.objective - (0.02 + 0.02)).abs() < 1e-12);
        assert!((r.objective - brute_force(&pts, &[1.0; 4], 2)).abs() < 1e-12);
        assert_eq!(r.partition.label(0), r.partition.label(1));
        assert_ne!(r.partition.label(0), r.partition.label(2));
    }

    #[test]
    fn weighted_single_cluster_centroid() {
        let e = emb(array![[0.0], [4.0]], Some(array![3.0, 1.0]));
        let r = weighted_kmeans(&e, &KMeansConfig::new(1, 0)).unwrap();
        assert!((r.centroids[[0, 0]] - 1.0).abs() < 1e-12);
        assert!((r.objective - (3.0 * 1.0 + 1.0 * 9.0)).abs() < 1e-12);
    }

    #[test]
    fn equal_weights_reduce_to_plain() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = Array2::from_shape_fn((30, 3), |_| rng.random::<f64>());
        let plain = kmeans(&emb(pts.clone(), None), &KMeansConfig::new(3, 11)).unwrap();
        let weighted = weighted_kmeans(&emb(pts, Some(Array1::from_elem(30, 2.5))), &KMeansConfig::new(3, 11)).unwrap();
        assert_eq!(plain.partition, weighted.partition);
        assert_eq!(plain.centroids, weighted.centroids);
        assert!((weighted.objective - 2.5 * plain.objective).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let e = emb(array![[0.0], [1.0]], None);
        assert!(kmeans(&e, &KMeansConfig::new(3, 0)).is_err());
        assert!(kmeans(&e, &KMeansConfig::new(0, 0)).is_err());
        assert!(weighted_kmeans(&e, &KMeansConfig::new(1, 0)).is_err());
        let w = emb(array![[0.0], [1.0]], Some(array![1.0, 2.0]));
        assert!(kmeans(&w, &KMeansConfig::new(1, 0)).is_err());
        let mut cfg = KMeansConfig::new(1, 0);
        cfg.tol = 0.0;
        assert!(kmeans(&e, &cfg).is_err());
    }

    #[test]
    fn duplicate_points_fill_every_cluster() {
        let e = emb(array![[1.0], [1.0], [1.0], [2.0]], None);
        let r = kmeans(&e, &KMeansConfig::new(3, 5)).unwrap();
        assert!(!r.partition.has_empty());
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn history_is_monotone_and_objective_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts = Array2::from_shape_fn((60, 2), |_| rng.random::<f64>());
        let w: Array1<f64> = (0..60).map(|_| rng.random_range(0.5..3.0)).collect();
        let e = emb(pts.clone(), Some(w.clone()));
        let r = weighted_kmeans(&e, &KMeansConfig::new(4, 2)).unwrap();
        for pair in r.history.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-12));
        }
        let recomputed = objective(&pts, Some(&w), &r.partition, &r.centroids);
        assert!((recomputed - r.objective).abs() <= 1e-8 * r.objective);
        let cents = weighted_centroids(&pts, Some(&w), &r.partition);
        assert!((&cents - &r.centroids).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn no_single_transfer_improves() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts = Array2::from_shape_fn((40, 2), |_| rng.random::<f64>());
        let e = emb(pts.clone(), None);
        let r = kmeans(&e, &KMeansConfig::new(3, 9)).unwrap();
        for i in 0..40 {
            for b in 0..3 {
                if b == r.partition.label(i) {
                    continue;
                }
                let mut labels = r.partition.labels().to_vec();
                labels[i] = b;
                let p = Partition::new(labels, 3).unwrap();
                if p.has_empty() {
                    continue;
                }
                let c = weighted_centroids(&pts, None, &p);
                assert!(objective(&pts, None, &p, &c) >= r.objective - 1e-12);
            }
        }
    }

    #[test]
    fn permutation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let pts = Array2::from_shape_fn((25, 2), |_| rng.random::<f64>());
        let perm: Vec<usize> = (0..25).map(|i| (i * 7) % 25).collect();
        let permuted = pts.select(ndarray::Axis(0), &perm);
        let a = kmeans(&emb(pts, None), &KMeansConfig::new(3, 4)).unwrap();
        let b = kmeans(&emb(permuted, None), &KMeansConfig::new(3, 4)).unwrap();
        for (pos, &orig) in perm.iter().enumerate() {
            assert_eq!(b.partition.label(pos), a.partition.label(orig));
        }
    }

    #[test]
    fn brute_force_agreement_small() {
        let mut hits = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let n = rng.random_range(4..=8);
            let pts = Array2::from_shape_fn((n, 2), |_| rng.random::<f64>());
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
            let opt = brute_force(&pts, &w, 2);
            let r = weighted_kmeans(&emb(pts, Some(Array1::from(w))), &KMeansConfig::new(2, seed)).unwrap();
            assert!(r.objective >= opt - 1e-12);
            if r.objective <= opt * (1.0 + 1e-9) {
                hits += 1;
            }
        }
        assert!(hits >= 19);
    }

    #[test]
    fn json_echoes_config() {
        let e = emb(array![[0.0], [1.0]], None);
        let cfg = KMeansConfig::new(2, 7);
        let r = kmeans(&e, &cfg).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json(&cfg).unwrap()).unwrap();
        assert_eq!(v["config"]["seed"], 7);
        assert_eq!(v["labels"].as_array().unwrap().len(), 2);
    }
}
