//! Named clustering methods, the filter-then-cluster pipeline and sweeps.
//!
//! Seed derivation: the generator uses the configured seed as is, noise
//! injection uses `seed + 1`, and every k-means run (including each sweep
//! cell) uses the k-means seed unchanged, so any sweep cell can be rerun on
//! its own with identical output.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{cosine_similarity, default_svd_rank, svd_reduce, TermVectorSpace};
use crate::error::{Error, Result};
use crate::evalx::{score_labels, table_csv};
use crate::gower::{b_embedding, k_embedding, m_embedding};
use crate::kmeans::{kmeans, weighted_kmeans, KMeansConfig, KMeansResult};
use crate::roughfilter::{filter_boundary, similarity_profile, DEFAULT_FRACTION};
use crate::scalar::Scalar;
use crate::simcore::{Embedding, Partition, SimilarityMatrix};
use crate::spectral::{spectral_embed, LaplacianKind, SpectralOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    L,
    N,
    RW,
    Kamvar,
    K,
    M,
    B,
}

impl Method {
    pub const ALL: [Method; 7] = [Self::L, Self::N, Self::RW, Self::Kamvar, Self::K, Self::M, Self::B];

    pub fn tag(self) -> &'static str {
        match self {
            Self::L => "L",
            Self::N => "N",
            Self::RW => "RW",
            Self::Kamvar => "Kamvar",
            Self::K => "K",
            Self::M => "M",
            Self::B => "B",
        }
    }

    fn laplacian(self) -> Option<LaplacianKind> {
        match self {
            Self::L => Some(LaplacianKind::Combinatorial),
            Self::N => Some(LaplacianKind::Normalized),
            Self::RW => Some(LaplacianKind::RandomWalk),
            Self::Kamvar => Some(LaplacianKind::KamvarAffinity),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}` (expected L, N, RW, Kamvar, K, M or B)")))
    }
}

/// A method plus its embedding options. The cluster count comes from the
/// k-means configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub method: Method,
    #[serde(default)]
    pub extra_dimension: bool,
    #[serde(default)]
    pub unit_rows: bool,
    #[serde(default)]
    pub skip_trivial: bool,
    /// Reduce the term space with a truncated SVD before building the
    /// similarity matrix. Requires corpus input.
    #[serde(default)]
    pub svd: bool,
    /// SVD rank; defaults to `min(100, n - 1, |V|)`.
    #[serde(default)]
    pub svd_rank: Option<usize>,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            extra_dimension: false,
            unit_rows: false,
            skip_trivial: false,
            svd: false,
            svd_rank: None,
        }
    }

    pub fn spectral_options(&self, k: usize) -> SpectralOptions {
        SpectralOptions {
            k,
            extra_dimension: self.extra_dimension,
            unit_rows: self.unit_rows,
            svd_rank: self.svd_rank,
            skip_trivial: self.skip_trivial,
        }
    }

    pub fn uses_svd(&self) -> bool {
        self.svd || self.svd_rank.is_some()
    }

    pub fn label(&self) -> String {
        let mut s = self.method.tag().to_string();
        if self.unit_rows {
            s.push_str("+unit");
        }
        if self.extra_dimension {
            s.push_str("+extra");
        }
        if self.skip_trivial {
            s.push_str("+skip");
        }
        if self.uses_svd() {
            s.push_str("+svd");
        }
        s
    }
}

pub const VARIANT_COUNT: usize = 9;

/// The nine spectral method variants, numbered 0 to 8:
///
/// | id | method |
/// |---|---|
/// | 0 | combinatorial, unit rows |
/// | 1 | combinatorial, unit rows, one extra dimension |
/// | 2 | Kamvar |
/// | 3 | Kamvar, one extra dimension |
/// | 4 | normalized |
/// | 5 | normalized, unit rows |
/// | 6 | normalized, unit rows, one extra dimension |
/// | 7 | as 6, after a truncated SVD of the term space |
/// | 8 | as 5, after a truncated SVD of the term space |
pub fn variant_method(id: usize) -> Result<MethodSpec> {
    let (method, unit_rows, extra_dimension, svd) = match id {
        0 => (Method::L, true, false, false),
        1 => (Method::L, true, true, false),
        2 => (Method::Kamvar, false, false, false),
        3 => (Method::Kamvar, false, true, false),
        4 => (Method::N, false, false, false),
        5 => (Method::N, true, false, false),
        6 => (Method::N, true, true, false),
        7 => (Method::N, true, true, true),
        8 => (Method::N, true, false, true),
        _ => return Err(Error::InvalidParameter(format!("method variant {id} out of range 0..=8"))),
    };
    Ok(MethodSpec {
        method,
        unit_rows,
        extra_dimension,
        skip_trivial: false,
        svd,
        svd_rank: None,
    })
}

pub fn embed<T: Scalar>(s: &SimilarityMatrix<T>, spec: &MethodSpec, k: usize) -> Result<Embedding<T>> {
    if spec.uses_svd() {
        return Err(Error::InvalidParameter(
            "SVD variants need a term space; similarity input cannot be reduced".into(),
        ));
    }
    match spec.method.laplacian() {
        Some(kind) => spectral_embed(s, kind, &spec.spectral_options(k)),
        None => match spec.method {
            Method::K => k_embedding(s),
            Method::M => m_embedding(s),
            _ => b_embedding(s),
        },
    }
}

/// Embeds and runs plain k-means (weighted for M and B).
pub fn cluster<T: Scalar>(s: &SimilarityMatrix<T>, spec: &MethodSpec, cfg: &KMeansConfig) -> Result<KMeansResult<T>> {
    cfg.validate()?;
    if cfg.k > s.n() {
        return Err(Error::InvalidParameter(format!("k = {} exceeds the {} items", cfg.k, s.n())));
    }
    let e = embed(s, spec, cfg.k)?;
    match spec.method {
        Method::M | Method::B => weighted_kmeans(&e, cfg),
        _ => kmeans(&e, cfg),
    }
}

/// Similarity matrix a method works on for a term space.
pub fn corpus_similarity(space: &TermVectorSpace, spec: &MethodSpec) -> Result<SimilarityMatrix<f64>> {
    if spec.uses_svd() {
        let rank = spec.svd_rank.unwrap_or_else(|| default_svd_rank(space));
        svd_reduce(space, rank)?.cosine_similarity()
    } else {
        cosine_similarity(space)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    #[serde(default = "default_q")]
    pub q: f64,
    pub threshold: f64,
}

fn default_q() -> f64 {
    DEFAULT_FRACTION
}

#[derive(Debug, Clone)]
pub struct RunOutput<T> {
    /// Indices (into the input) of the items that were clustered.
    pub kept: Vec<usize>,
    pub removed: Vec<usize>,
    pub result: KMeansResult<T>,
}

/// Optional boundary filtering followed by clustering of the kept items.
pub fn run_similarity<T: Scalar>(
    s: &SimilarityMatrix<T>,
    spec: &MethodSpec,
    filter: Option<FilterSpec>,
    cfg: &KMeansConfig,
) -> Result<RunOutput<T>> {
    match filter {
        Some(f) if f.threshold > 0.0 => {
            let profile = similarity_profile(s, f.q)?;
            let out = filter_boundary(s, &profile, f.threshold)?;
            Ok(RunOutput {
                result: cluster(&out.core, spec, cfg)?,
                kept: out.kept,
                removed: out.removed,
            })
        }
        _ => Ok(RunOutput {
            kept: (0..s.n()).collect(),
            removed: Vec::new(),
            result: cluster(s, spec, cfg)?,
        }),
    }
}

/// Same as [`run_similarity`] for a term space. The filter profile is always
/// computed on the unreduced cosine similarities so every method sees the
/// same kept documents.
pub fn run_corpus(
    space: &TermVectorSpace,
    spec: &MethodSpec,
    filter: Option<FilterSpec>,
    cfg: &KMeansConfig,
) -> Result<RunOutput<f64>> {
    let kept = match filter {
        Some(f) if f.threshold > 0.0 => {
            let base = cosine_similarity(space)?;
            let profile = similarity_profile(&base, f.q)?;
            filter_boundary(&base, &profile, f.threshold)?.kept
        }
        _ => (0..space.n()).collect(),
    };
    let removed = (0..space.n()).filter(|i| kept.binary_search(i).is_err()).collect();
    let sub = space.select(&kept);
    let s = corpus_similarity(&sub, spec)?;
    let on_matrix = MethodSpec {
        svd: false,
        svd_rank: None,
        ..spec.clone()
    };
    Ok(RunOutput {
        result: cluster(&s, &on_matrix, cfg)?,
        kept,
        removed,
    })
}

/// Input of one sweep row.
#[derive(Debug, Clone)]
pub enum SweepInput {
    Similarity(SimilarityMatrix<f64>),
    Corpus(TermVectorSpace),
}

#[derive(Debug, Clone)]
pub struct SweepDataset {
    pub name: String,
    pub input: SweepInput,
    /// Ground-truth label per item.
    pub truth: Vec<String>,
}

impl SweepDataset {
    fn n(&self) -> usize {
        match &self.input {
            SweepInput::Similarity(s) => s.n(),
            SweepInput::Corpus(c) => c.n(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub dataset: String,
    pub method: String,
    pub threshold: f64,
    pub kept: usize,
    pub removed: usize,
    pub k: usize,
    pub relative_error: f64,
    pub f1: f64,
}

/// Clusters every dataset with every method at every threshold. The cluster
/// count of a cell is the number of distinct true labels among the kept
/// items. Threshold 0 means no filtering. Cells are returned in
/// dataset-major, then threshold, then method order regardless of thread
/// scheduling.
pub fn sweep(
    datasets: &[SweepDataset],
    methods: &[MethodSpec],
    thresholds: &[f64],
    q: f64,
    base: &KMeansConfig,
) -> Result<Vec<SweepCell>> {
    for d in datasets {
        if d.truth.len() != d.n() {
            return Err(Error::Dimension(format!(
                "dataset `{}` has {} labels for {} items",
                d.name,
                d.truth.len(),
                d.n()
            )));
        }
    }
    let mut jobs = Vec::new();
    for (di, _) in datasets.iter().enumerate() {
        for &t in thresholds {
            for (mi, _) in methods.iter().enumerate() {
                jobs.push((di, t, mi));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(di, t, mi)| run_cell(&datasets[di], &methods[mi], t, q, base))
        .collect()
}

pub fn run_cell(d: &SweepDataset, spec: &MethodSpec, t: f64, q: f64, base: &KMeansConfig) -> Result<SweepCell> {
    let filter = Some(FilterSpec { q, threshold: t });
    let kept = match &d.input {
        SweepInput::Similarity(s) => {
            if t > 0.0 {
                let profile = similarity_profile(s, q)?;
                filter_boundary(s, &profile, t)?.kept
            } else {
                (0..s.n()).collect()
            }
        }
        SweepInput::Corpus(c) => {
            if t > 0.0 {
                let cs = cosine_similarity(c)?;
                let profile = similarity_profile(&cs, q)?;
                filter_boundary(&cs, &profile, t)?.kept
            } else {
                (0..c.n()).collect()
            }
        }
    };
    let truth: Vec<&String> = kept.iter().map(|&i| &d.truth[i]).collect();
    let k = truth.iter().collect::<BTreeSet<_>>().len();
    let cfg = KMeansConfig { k, ..base.clone() };
    let out = match &d.input {
        SweepInput::Similarity(s) => {
            let o = run_similarity(s, spec, filter, &cfg)?;
            (o.kept, o.result.partition)
        }
        SweepInput::Corpus(c) => {
            let o = run_corpus(c, spec, filter, &cfg)?;
            (o.kept, o.result.partition)
        }
    };
    debug_assert_eq!(out.0, kept);
    let score = score_labels(&truth, &out.1)?;
    Ok(SweepCell {
        dataset: d.name.clone(),
        method: spec.label(),
        threshold: t,
        kept: kept.len(),
        removed: d.n() - kept.len(),
        k,
        relative_error: score.relative_error,
        f1: score.f1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub method: String,
    pub threshold: f64,
    pub improved: usize,
    pub total: usize,
}

/// Per method and nonzero threshold, how many datasets have a strictly lower
/// relative error than at threshold 0.
pub fn improvement_summary(cells: &[SweepCell]) -> Vec<Improvement> {
    let mut methods: Vec<&str> = Vec::new();
    let mut thresholds: Vec<f64> = Vec::new();
    for c in cells {
        if !methods.contains(&c.method.as_str()) {
            methods.push(&c.method);
        }
        if c.threshold > 0.0 && !thresholds.contains(&c.threshold) {
            thresholds.push(c.threshold);
        }
    }
    let mut out = Vec::new();
    for &t in &thresholds {
        for &m in &methods {
            let mut improved = 0;
            let mut total = 0;
            for c in cells.iter().filter(|c| c.method == m && c.threshold == t) {
                if let Some(b) = cells.iter().find(|b| b.method == m && b.threshold == 0.0 && b.dataset == c.dataset) {
                    total += 1;
                    if c.relative_error < b.relative_error {
                        improved += 1;
                    }
                }
            }
            out.push(Improvement {
                method: m.to_string(),
                threshold: t,
                improved,
                total,
            });
        }
    }
    out
}

pub fn improvement_csv(summary: &[Improvement]) -> String {
    let mut out = String::from("method,threshold,improved,total,percent\n");
    for i in summary {
        let pct = if i.total > 0 { 100.0 * i.improved as f64 / i.total as f64 } else { 0.0 };
        out.push_str(&format!("{},{},{},{},{:.1}\n", i.method, i.threshold, i.improved, i.total, pct));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMetric {
    RelativeError,
    F1,
}

/// Rows are datasets, columns methods, for one threshold and metric.
pub fn sweep_table(cells: &[SweepCell], threshold: f64, metric: SweepMetric) -> String {
    let mut rows: Vec<String> = Vec::new();
    let mut cols: Vec<String> = Vec::new();
    for c in cells.iter().filter(|c| c.threshold == threshold) {
        if !rows.contains(&c.dataset) {
            rows.push(c.dataset.clone());
        }
        if !cols.contains(&c.method) {
            cols.push(c.method.clone());
        }
    }
    let values: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            cols.iter()
                .map(|m| {
                    cells
                        .iter()
                        .find(|c| c.threshold == threshold && &c.dataset == r && &c.method == m)
                        .map_or(f64::NAN, |c| match metric {
                            SweepMetric::RelativeError => c.relative_error,
                            SweepMetric::F1 => c.f1,
                        })
                })
                .collect()
        })
        .collect();
    table_csv(&rows, &cols, &values)
}

/// Labels of a partition restricted to the kept items, for reporting.
pub fn expand_labels(n: usize, kept: &[usize], p: &Partition) -> Vec<Option<usize>> {
    let mut out = vec![None; n];
    for (pos, &i) in kept.iter().enumerate() {
        out[i] = Some(p.label(pos));
    }
    out
}
