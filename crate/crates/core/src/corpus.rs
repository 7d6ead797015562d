//! Documents to term vectors and cosine similarities.
//!
//! Tokenization lowercases, splits on every non-alphanumeric character and
//! discards single-digit tokens. Terms occurring in only one document of the
//! collection are pruned (single pass); documents left without terms are
//! dropped and reported.

use std::collections::{BTreeMap, HashMap, HashSet};

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simcore::{eig_unchecked, SimilarityMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    docs: Vec<Document>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::new();
        for d in &docs {
            if !seen.insert(d.id.as_str()) {
                return Err(Error::InvalidParameter(format!("duplicate document id `{}`", d.id)));
            }
        }
        Ok(Self { docs })
    }

    /// Newline-delimited JSON, one `{"id", "text", "label"}` object per line.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut docs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let doc: Document = serde_json::from_str(line).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            docs.push(doc);
        }
        Self::new(docs)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for d in &self.docs {
            out.push_str(&serde_json::to_string(d)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Subset of documents in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            docs: indices.iter().map(|&i| self.docs[i].clone()).collect(),
        }
    }

    /// Ground-truth labels when every document has one.
    pub fn labels(&self) -> Option<Vec<String>> {
        self.docs.iter().map(|d| d.label.clone()).collect()
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !(t.chars().count() == 1 && t.chars().all(|c| c.is_ascii_digit())))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    #[default]
    Tf,
    /// Term frequency times the smoothed inverse document frequency
    /// `ln((1 + N) / (1 + df)) + 1`.
    TfIdf,
}

/// Pruned term-vector representation of the surviving documents.
#[derive(Debug, Clone)]
pub struct TermVectorSpace {
    /// Lexicographically ordered terms.
    pub vocabulary: Vec<String>,
    pub doc_ids: Vec<String>,
    /// Position of each surviving document in the input corpus.
    pub kept: Vec<usize>,
    /// Nonnegative weights, one row per surviving document.
    pub doc_vectors: Array2<f64>,
    pub dropped_docs: Vec<String>,
}

impl TermVectorSpace {
    pub fn n(&self) -> usize {
        self.doc_vectors.nrows()
    }

    /// Rows restricted to `indices` (positions within this space). Vocabulary
    /// columns are kept even if they become unused.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            vocabulary: self.vocabulary.clone(),
            doc_ids: indices.iter().map(|&i| self.doc_ids[i].clone()).collect(),
            kept: indices.iter().map(|&i| self.kept[i]).collect(),
            doc_vectors: self.doc_vectors.select(Axis(0), indices),
            dropped_docs: Vec::new(),
        }
    }
}

pub fn build_term_space(corpus: &Corpus, weighting: Weighting) -> Result<TermVectorSpace> {
    if corpus.is_empty() {
        return Err(Error::EmptyCollection("corpus has no documents".into()));
    }
    let tokens: Vec<Vec<String>> = corpus.docs().iter().map(|d| tokenize(&d.text)).collect();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &tokens {
        let unique: HashSet<&str> = doc.iter().map(String::as_str).collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    let vocabulary: Vec<String> = df
        .iter()
        .filter(|(_, &c)| c >= 2)
        .map(|(t, _)| t.to_string())
        .collect();
    let column: HashMap<&str, usize> = vocabulary.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();

    let n_docs = corpus.len() as f64;
    let idf: Vec<f64> = vocabulary
        .iter()
        .map(|t| match weighting {
            Weighting::Tf => 1.0,
            Weighting::TfIdf => ((1.0 + n_docs) / (1.0 + df[t.as_str()] as f64)).ln() + 1.0,
        })
        .collect();

    let mut kept = Vec::new();
    let mut dropped_docs = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    for (i, doc) in tokens.iter().enumerate() {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in doc {
            if let Some(&c) = column.get(t.as_str()) {
                *counts.entry(c).or_default() += 1.0;
            }
        }
        if counts.is_empty() {
            dropped_docs.push(corpus.docs()[i].id.clone());
        } else {
            kept.push(i);
            rows.push(counts.into_iter().map(|(c, tf)| (c, tf * idf[c])).collect());
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyCollection(
            "every document became empty after pruning singleton terms".into(),
        ));
    }
    let mut doc_vectors = Array2::zeros((kept.len(), vocabulary.len()));
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in row {
            doc_vectors[[r, c]] = v;
        }
    }
    Ok(TermVectorSpace {
        vocabulary,
        doc_ids: kept.iter().map(|&i| corpus.docs()[i].id.clone()).collect(),
        kept,
        doc_vectors,
        dropped_docs,
    })
}

/// Cosine similarity of the rows of `vectors` with negative values clamped
/// to zero and a zero diagonal. All-zero rows have similarity 0 to
/// everything.
pub fn cosine_rows(vectors: &Array2<f64>, ids: &[String]) -> Result<SimilarityMatrix<f64>> {
    let norms: Array1<f64> = vectors
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let gram = vectors.dot(&vectors.t());
    let s = SimilarityMatrix::from_upper(vectors.nrows(), |i, j| {
        let denom = norms[i] * norms[j];
        if denom > 0.0 {
            (gram[[i, j]] / denom).clamp(0.0, 1.0)
        } else {
            0.0
        }
    })?;
    s.with_item_ids(ids.to_vec())
}

pub fn cosine_similarity(space: &TermVectorSpace) -> Result<SimilarityMatrix<f64>> {
    cosine_rows(&space.doc_vectors, &space.doc_ids)
}

/// Documents projected onto the leading right singular directions of the
/// document-term matrix.
#[derive(Debug, Clone)]
pub struct ReducedSpace {
    pub doc_ids: Vec<String>,
    /// `n x rank` coordinates `X V_r` (equivalently `U_r Sigma_r`).
    pub coords: Array2<f64>,
    pub singular_values: Vec<f64>,
}

impl ReducedSpace {
    pub fn cosine_similarity(&self) -> Result<SimilarityMatrix<f64>> {
        cosine_rows(&self.coords, &self.doc_ids)
    }
}

/// Rank used when a prior SVD is requested without an explicit rank:
/// `min(100, n - 1, |V|)`, at least 1.
pub fn default_svd_rank(space: &TermVectorSpace) -> usize {
    100.min(space.n().saturating_sub(1)).min(space.vocabulary.len()).max(1)
}

/// Truncated SVD via the eigendecomposition of the smaller Gram matrix.
pub fn svd_reduce(space: &TermVectorSpace, rank: usize) -> Result<ReducedSpace> {
    let x = &space.doc_vectors;
    let (n, v) = x.dim();
    let max_rank = n.min(v);
    if rank == 0 || rank > max_rank {
        return Err(Error::InvalidParameter(format!(
            "SVD rank must be in 1..={max_rank}, got {rank}"
        )));
    }
    let (coords, singular_values) = if n <= v {
        let eig = eig_unchecked(&x.dot(&x.t()))?;
        let mut coords = Array2::zeros((n, rank));
        let mut sv = Vec::with_capacity(rank);
        for c in 0..rank {
            let idx = n - 1 - c;
            let sigma = eig.values[idx].max(0.0).sqrt();
            sv.push(sigma);
            for i in 0..n {
                coords[[i, c]] = eig.vectors[[i, idx]] * sigma;
            }
        }
        (coords, sv)
    } else {
        let eig = eig_unchecked(&x.t().dot(x))?;
        let cols: Vec<usize> = (0..rank).map(|c| v - 1 - c).collect();
        let basis = eig.vectors.select(Axis(1), &cols);
        let sv = cols.iter().map(|&c| eig.values[c].max(0.0).sqrt()).collect();
        (x.dot(&basis), sv)
    };
    Ok(ReducedSpace {
        doc_ids: space.doc_ids.clone(),
        coords,
        singular_values,
    })
}
