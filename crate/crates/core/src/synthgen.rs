//! Synthetic block-similarity matrices with planted clusters.
//!
//! Randomness uses ChaCha8 seeded from `params.seed`. Stream 0 drives the
//! cluster assignment; row `i` of the upper triangle is filled from stream
//! `i + 1`, so rows can be generated independently.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simcore::{Partition, SimilarityMatrix};

pub const RNG_NAME: &str = "ChaCha8";
pub const MAX_ASSIGNMENT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorParams {
    pub n: usize,
    pub m: usize,
    pub props: Vec<f64>,
    pub min_in: Vec<f64>,
    pub max_in: Vec<f64>,
    pub max_out: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        for (name, v) in [
            ("props", &self.props),
            ("min_in", &self.min_in),
            ("max_in", &self.max_in),
            ("max_out", &self.max_out),
        ] {
            if v.len() != self.m {
                return bad(format!("{name} has length {}, expected m = {}", v.len(), self.m));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return bad(format!("{name} contains a non-finite value"));
            }
        }
        if self.props.iter().any(|&p| p <= 0.0) {
            return bad("props must be positive".into());
        }
        for i in 0..self.m {
            let (lo, hi) = (self.min_in[i], self.max_in[i]);
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return bad(format!("within bounds for cluster {i} must satisfy 0 <= min_in <= max_in <= 1"));
            }
            if !(0.0..=self.m as f64).contains(&self.max_out[i]) {
                return bad(format!("max_out[{i}] must lie in [0, m]"));
            }
        }
        let total: f64 = self.props.iter().sum();
        for (i, p) in self.props.iter().enumerate() {
            if self.n as f64 * p / total < 1.0 {
                return bad(format!("expected size of cluster {i} is below 1"));
            }
        }
        Ok(())
    }

    /// Same proportions and bounds with a different sample size.
    pub fn scaled(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    /// Upper bound of the cross similarity between clusters `i` and `k`.
    pub fn cross_bound(&self, i: usize, k: usize) -> f64 {
        (self.max_out[i] + self.max_out[k]) / (2.0 * self.m as f64)
    }
}

/// Reference parameter sets for datasets 1 to 4 (n = 1500, m = 4).
pub fn dataset_preset(id: u8) -> Result<GeneratorParams> {
    let graded_in = (vec![0.3, 0.35, 0.4, 0.45], vec![0.7, 0.65, 0.6, 0.55]);
    let (props, min_in, max_in, max_out) = match id {
        1 => (vec![1.0, 0.5, 1.0, 0.5], vec![0.3; 4], vec![0.7; 4], vec![0.6; 4]),
        2 => (vec![1.0, 0.5, 1.0, 0.5], graded_in.0, graded_in.1, vec![0.5, 0.6, 0.7, 0.8]),
        3 => (
            vec![1.0, 1.0 / 3.0, 1.0 / 9.0, 1.0 / 27.0],
            graded_in.0,
            graded_in.1,
            vec![0.6, 0.7, 0.8, 0.9],
        ),
        4 => (vec![1.0, 3.0, 9.0, 27.0], graded_in.0, graded_in.1, vec![0.6, 0.7, 0.8, 0.9]),
        _ => return Err(Error::InvalidParameter(format!("unknown dataset preset {id}, expected 1..=4"))),
    };
    Ok(GeneratorParams {
        n: 1500,
        m: 4,
        props,
        min_in,
        max_in,
        max_out,
        seed: 0,
    })
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn categorical(rng: &mut ChaCha8Rng, cumulative: &[f64]) -> usize {
    let u = rng.random::<f64>() * cumulative[cumulative.len() - 1];
    cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn generate<T: Scalar>(params: &GeneratorParams) -> Result<(SimilarityMatrix<T>, Partition)> {
    params.validate()?;
    let n = params.n;
    let mut cumulative = Vec::with_capacity(params.m);
    let mut acc = 0.0;
    for p in &params.props {
        acc += p;
        cumulative.push(acc);
    }
    let mut assign_rng = stream_rng(params.seed, 0);
    let mut labels = None;
    for _ in 0..MAX_ASSIGNMENT_ATTEMPTS {
        let draw: Vec<usize> = (0..n).map(|_| categorical(&mut assign_rng, &cumulative)).collect();
        let mut seen = vec![false; params.m];
        draw.iter().for_each(|&l| seen[l] = true);
        if seen.iter().all(|&s| s) {
            labels = Some(draw);
            break;
        }
    }
    let labels = labels.ok_or_else(|| {
        Error::InvalidParameter(format!(
            "no assignment without empty clusters after {MAX_ASSIGNMENT_ATTEMPTS} attempts"
        ))
    })?;

    let mut upper = vec![0.0f64; n * n];
    for i in 0..n {
        let mut rng = stream_rng(params.seed, i as u64 + 1);
        for j in i + 1..n {
            let (a, b) = (labels[i], labels[j]);
            upper[i * n + j] = if a == b {
                uniform(&mut rng, params.min_in[a], params.max_in[a])
            } else {
                uniform(&mut rng, 0.0, params.cross_bound(a, b))
            };
        }
    }
    let s = SimilarityMatrix::from_upper(n, |i, j| T::lit(upper[i * n + j]))?;
    Ok((s, Partition::new(labels, params.m)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelsFile {
    pub labels: Vec<usize>,
    pub params: GeneratorParams,
    pub seed: u64,
    pub rng: String,
}

impl LabelsFile {
    pub fn new(params: &GeneratorParams, labels: &Partition) -> Self {
        Self {
            labels: labels.labels().to_vec(),
            params: params.clone(),
            seed: params.seed,
            rng: RNG_NAME.to_string(),
        }
    }
}

/// Appends `count` items whose similarities to every other item (including
/// each other) are drawn from U(0, max_sim). Returns the enlarged matrix and
/// the indices of the new items, which are placed after the originals.
pub fn inject_noise<T: Scalar>(
    s: &SimilarityMatrix<T>,
    count: usize,
    max_sim: f64,
    seed: u64,
) -> Result<(SimilarityMatrix<T>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&max_sim) {
        return Err(Error::InvalidParameter("max_sim must lie in [0, 1]".into()));
    }
    let n0 = s.n();
    let n = n0 + count;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut extra = vec![0.0f64; count * n];
    for r in 0..count {
        for c in 0..n0 + r {
            extra[r * n + c] = uniform(&mut rng, 0.0, max_sim);
        }
    }
    let out = SimilarityMatrix::from_upper(n, |i, j| {
        if j < n0 {
            s.get(i, j)
        } else {
            T::lit(extra[(j - n0) * n + i])
        }
    })?;
    Ok((out, (n0..n).collect()))
}

/// Parameters for a text corpus with planted topic vocabularies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantedCorpusParams {
    pub topics: usize,
    pub docs_per_topic: usize,
    pub topic_vocab: usize,
    pub shared_vocab: usize,
    pub doc_len: usize,
    /// Fraction of a topical document's tokens drawn from its topic block.
    pub topic_share: f64,
    /// Off-topic documents with random labels. Their tokens are drawn
    /// uniformly from the shared vocabulary plus `noise_vocab` off-topic
    /// terms.
    pub noise_docs: usize,
    pub noise_vocab: usize,
    pub seed: u64,
}

impl Default for PlantedCorpusParams {
    fn default() -> Self {
        Self {
            topics: 4,
            docs_per_topic: 50,
            topic_vocab: 30,
            shared_vocab: 60,
            doc_len: 40,
            topic_share: 0.8,
            noise_docs: 20,
            noise_vocab: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub corpus: Corpus,
    /// Topic index per document. Noise documents get a random topic.
    pub labels: Vec<usize>,
    pub is_noise: Vec<bool>,
    /// Planted vocabulary of each topic.
    pub topic_terms: Vec<Vec<String>>,
}

pub fn topic_term(topic: usize, j: usize) -> String {
    format!("topic{topic}word{j}")
}

pub fn planted_corpus(p: &PlantedCorpusParams) -> Result<PlantedCorpus> {
    if p.topics == 0 || p.topic_vocab == 0 || p.doc_len == 0 || p.docs_per_topic == 0 || (p.noise_docs > 0 && p.noise_vocab + p.shared_vocab == 0) {
        return Err(Error::InvalidParameter("planted corpus sizes must be positive".into()));
    }
    if !(0.0..=1.0).contains(&p.topic_share) || (p.shared_vocab == 0 && p.topic_share < 1.0) {
        return Err(Error::InvalidParameter("topic_share must lie in [0, 1] with a shared vocabulary".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let topic_terms: Vec<Vec<String>> = (0..p.topics)
        .map(|t| (0..p.topic_vocab).map(|j| topic_term(t, j)).collect())
        .collect();
    let shared: Vec<String> = (0..p.shared_vocab).map(|j| format!("common{j}")).collect();
    let off_topic: Vec<String> = (0..p.noise_vocab).map(|j| format!("offtopic{j}")).collect();
    let noise_total = p.shared_vocab + p.noise_vocab;
    let noise_term = |k: usize| -> &str {
        if k < p.shared_vocab {
            &shared[k]
        } else {
            &off_topic[k - p.shared_vocab]
        }
    };

    let mut docs = Vec::new();
    let mut labels = Vec::new();
    let mut is_noise = Vec::new();
    for t in 0..p.topics {
        for _ in 0..p.docs_per_topic {
            let words: Vec<&str> = (0..p.doc_len)
                .map(|_| {
                    if rng.random::<f64>() < p.topic_share {
                        topic_terms[t][rng.random_range(0..p.topic_vocab)].as_str()
                    } else {
                        shared[rng.random_range(0..p.shared_vocab)].as_str()
                    }
                })
                .collect();
            docs.push(words.join(" "));
            labels.push(t);
            is_noise.push(false);
        }
    }
    for _ in 0..p.noise_docs {
        let words: Vec<&str> = (0..p.doc_len).map(|_| noise_term(rng.random_range(0..noise_total))).collect();
        docs.push(words.join(" "));
        labels.push(rng.random_range(0..p.topics));
        is_noise.push(true);
    }
    let corpus = Corpus::new(
        docs.into_iter()
            .enumerate()
            .map(|(i, text)| Document {
                id: format!("doc{i:05}"),
                text,
                label: Some(format!("topic{}", labels[i])),
            })
            .collect(),
    )?;
    Ok(PlantedCorpus {
        corpus,
        labels,
        is_noise,
        topic_terms,
    })
}
