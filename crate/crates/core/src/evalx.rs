//! Cut criteria, confusion matrices and label matching.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simcore::{Partition, SimilarityMatrix};

/// Per-cluster cross-cluster similarity mass `sum_{i in C_j, l not in C_j} s_il`.
fn cross_mass<T: Scalar>(s: &SimilarityMatrix<T>, p: &Partition) -> Result<Vec<f64>> {
    if p.n() != s.n() {
        return Err(Error::Dimension(format!(
            "partition has {} items, similarity matrix has {}",
            p.n(),
            s.n()
        )));
    }
    if let Some(cluster) = p.first_empty() {
        return Err(Error::EmptyCluster { cluster });
    }
    let mut cross = vec![0.0; p.k()];
    let e = s.entries();
    for i in 0..s.n() {
        let ci = p.label(i);
        let row = e.row(i);
        let mut acc = 0.0;
        for (l, v) in row.iter().enumerate() {
            if p.label(l) != ci {
                acc += v.as_f64();
            }
        }
        cross[ci] += acc;
    }
    Ok(cross)
}

fn volumes<T: Scalar>(s: &SimilarityMatrix<T>, p: &Partition) -> Vec<f64> {
    let mut vol = vec![0.0; p.k()];
    for (i, d) in s.degrees().iter().enumerate() {
        vol[p.label(i)] += d.as_f64();
    }
    vol
}

pub fn rcut<T: Scalar>(s: &SimilarityMatrix<T>, p: &Partition) -> Result<f64> {
    let cross = cross_mass(s, p)?;
    let sizes = p.sizes();
    Ok(cross.iter().zip(&sizes).map(|(c, &n)| c / n as f64).sum())
}

pub fn ncut<T: Scalar>(s: &SimilarityMatrix<T>, p: &Partition) -> Result<f64> {
    let cross = cross_mass(s, p)?;
    let vol = volumes(s, p);
    if let Some(cluster) = vol.iter().position(|&v| v <= 0.0) {
        return Err(Error::InvalidParameter(format!("cluster {cluster} has zero volume")));
    }
    Ok(cross.iter().zip(&vol).map(|(c, v)| c / v).sum())
}

pub fn nrcut<T: Scalar>(s: &SimilarityMatrix<T>, p: &Partition) -> Result<f64> {
    let cross = cross_mass(s, p)?;
    let vol = volumes(s, p);
    let sizes = p.sizes();
    Ok((0..p.k()).map(|j| cross[j] / (sizes[j] as f64 + vol[j])).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutCriteria {
    pub rcut: f64,
    pub ncut: f64,
    pub nrcut: f64,
}

pub fn cut_criteria<T: Scalar>(s: &SimilarityMatrix<T>, p: &Partition) -> Result<CutCriteria> {
    Ok(CutCriteria {
        rcut: rcut(s, p)?,
        ncut: ncut(s, p)?,
        nrcut: nrcut(s, p)?,
    })
}

/// Rows are true labels, columns predicted clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
    pub row_names: Vec<String>,
    pub col_names: Vec<String>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<usize>>) -> Result<Self> {
        let cols = counts.first().map_or(0, Vec::len);
        if counts.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("confusion rows have different lengths".into()));
        }
        Ok(Self {
            row_names: (0..counts.len()).map(|i| i.to_string()).collect(),
            col_names: (0..cols).map(|i| i.to_string()).collect(),
            counts,
        })
    }

    pub fn rows(&self) -> usize {
        self.counts.len()
    }

    pub fn cols(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }
}

/// Confusion of arbitrary true labels against a predicted partition. Row
/// order follows the sorted distinct true labels.
pub fn confusion<L: Ord + Clone + ToString>(truth: &[L], pred: &Partition) -> Result<ConfusionMatrix> {
    if truth.len() != pred.n() {
        return Err(Error::Dimension(format!(
            "{} true labels for {} predicted labels",
            truth.len(),
            pred.n()
        )));
    }
    let rows: BTreeMap<&L, usize> = {
        let mut m = BTreeMap::new();
        for l in truth {
            m.entry(l).or_insert(0);
        }
        m.into_iter().enumerate().map(|(i, (l, _))| (l, i)).collect()
    };
    let mut counts = vec![vec![0usize; pred.k()]; rows.len()];
    for (t, &p) in truth.iter().zip(pred.labels()) {
        counts[rows[t]][p] += 1;
    }
    Ok(ConfusionMatrix {
        counts,
        row_names: rows.keys().map(|l| l.to_string()).collect(),
        col_names: (0..pred.k()).map(|j| j.to_string()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    /// `(predicted column, true row)` pairs, sorted by predicted column.
    pub mapping: Vec<(usize, usize)>,
    pub correct: usize,
    pub n: usize,
    pub relative_error: f64,
    pub f1: f64,
}

/// Maximum-weight assignment of rows to columns for a rectangular
/// nonnegative matrix (Hungarian method with potentials). Returns, for each
/// row, its assigned column or `None`.
pub fn max_assignment(w: &[Vec<usize>]) -> Vec<Option<usize>> {
    let rows = w.len();
    let cols = w.first().map_or(0, Vec::len);
    let size = rows.max(cols);
    if size == 0 {
        return Vec::new();
    }
    let max = w.iter().flatten().copied().max().unwrap_or(0) as i64;
    let cost = |i: usize, j: usize| -> i64 {
        if i < rows && j < cols {
            max - w[i][j] as i64
        } else {
            max
        }
    };
    // 1-based arrays; column 0 is the virtual start.
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; size + 1];
    let mut v = vec![0i64; size + 1];
    let mut owner = vec![0usize; size + 1];
    let mut way = vec![0usize; size + 1];
    for i in 1..=size {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=size {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=size {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![None; rows];
    for j in 1..=size {
        let i = owner[j];
        if i >= 1 && i <= rows && j <= cols {
            result[i - 1] = Some(j - 1);
        }
    }
    result
}

/// Best total matched count by trying every injective assignment. Only
/// practical for small matrices.
pub fn exhaustive_best_match(w: &[Vec<usize>]) -> usize {
    let rows = w.len();
    let cols = w.first().map_or(0, Vec::len);
    fn go(w: &[Vec<usize>], row: usize, used: &mut Vec<bool>, cols: usize) -> usize {
        if row == w.len() {
            return 0;
        }
        // Leaving the row unmatched is always allowed.
        let mut best = go(w, row + 1, used, cols);
        for c in 0..cols {
            if !used[c] {
                used[c] = true;
                best = best.max(w[row][c] + go(w, row + 1, used, cols));
                used[c] = false;
            }
        }
        best
    }
    if rows == 0 {
        return 0;
    }
    go(w, 0, &mut vec![false; cols], cols)
}

pub fn match_and_score(cm: &ConfusionMatrix) -> Result<MatchScore> {
    let n = cm.total();
    if n == 0 {
        return Err(Error::EmptyCollection("confusion matrix is empty".into()));
    }
    let rows = max_assignment(&cm.counts);
    let mut mapping: Vec<(usize, usize)> = rows
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| (c, r)))
        .collect();
    mapping.sort_unstable();
    let correct: usize = mapping.iter().map(|&(c, r)| cm.counts[r][c]).sum();

    let col_totals: Vec<usize> = (0..cm.cols()).map(|c| cm.counts.iter().map(|r| r[c]).sum()).collect();
    let mut f1 = 0.0;
    for (r, col) in rows.iter().enumerate() {
        let support: usize = cm.counts[r].iter().sum();
        if let Some(c) = *col {
            let hit = cm.counts[r][c] as f64;
            if hit > 0.0 {
                let precision = hit / col_totals[c] as f64;
                let recall = hit / support as f64;
                f1 += support as f64 * 2.0 * precision * recall / (precision + recall);
            }
        }
    }
    Ok(MatchScore {
        mapping,
        correct,
        n,
        relative_error: 1.0 - correct as f64 / n as f64,
        f1: f1 / n as f64,
    })
}

/// Convenience: confusion plus matching for label vectors.
pub fn score_labels<L: Ord + Clone + ToString>(truth: &[L], pred: &Partition) -> Result<MatchScore> {
    match_and_score(&confusion(truth, pred)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub j: usize,
    pub j_prime: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EquivalenceReport {
    /// No similarity crosses clusters; all methods agree on this partition.
    ExactBlock,
    Pairs {
        within: Vec<f64>,
        s0: f64,
        pairs: Vec<PairCheck>,
    },
}

impl EquivalenceReport {
    pub fn violations(&self) -> Vec<&PairCheck> {
        match self {
            Self::ExactBlock => Vec::new(),
            Self::Pairs { pairs, .. } => pairs.iter().filter(|p| !p.holds).collect(),
        }
    }
}

/// Checks `s_j^2 / s_0^2 > ((n_j - 1) s_j + (n - n_j) s_0) / ((n_j' - 1) s_j' + (n - n_j) s_0)`
/// for every ordered pair of distinct clusters, where `s_j` is the mean
/// within-cluster similarity (0 for singletons) and `s_0` the mean
/// cross-cluster similarity.
pub fn equivalence_diagnostic<T: Scalar>(s: &SimilarityMatrix<T>, p: &Partition) -> Result<EquivalenceReport> {
    if p.n() != s.n() {
        return Err(Error::Dimension("partition and similarity sizes differ".into()));
    }
    if let Some(cluster) = p.first_empty() {
        return Err(Error::EmptyCluster { cluster });
    }
    let k = p.k();
    let n = s.n();
    let mut within = vec![0.0; k];
    let mut cross = 0.0;
    let mut cross_pairs = 0usize;
    for i in 0..n {
        for l in i + 1..n {
            let v = s.get(i, l).as_f64();
            if p.label(i) == p.label(l) {
                within[p.label(i)] += v;
            } else {
                cross += v;
                cross_pairs += 1;
            }
        }
    }
    if cross == 0.0 {
        return Ok(EquivalenceReport::ExactBlock);
    }
    let s0 = cross / cross_pairs as f64;
    let sizes = p.sizes();
    for j in 0..k {
        let pairs = sizes[j] * (sizes[j] - 1) / 2;
        within[j] = if pairs > 0 { within[j] / pairs as f64 } else { 0.0 };
    }
    let mut checks = Vec::new();
    for j in 0..k {
        for jp in 0..k {
            if j == jp {
                continue;
            }
            let lhs = within[j] * within[j] / (s0 * s0);
            let nj = sizes[j] as f64;
            let num = (nj - 1.0) * within[j] + (n as f64 - nj) * s0;
            let den = (sizes[jp] as f64 - 1.0) * within[jp] + (n as f64 - nj) * s0;
            let rhs = num / den;
            checks.push(PairCheck {
                j,
                j_prime: jp,
                lhs,
                rhs,
                holds: lhs > rhs,
            });
        }
    }
    Ok(EquivalenceReport::Pairs {
        within,
        s0,
        pairs: checks,
    })
}

/// Everything reported for one clustering run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criteria: Option<CutCriteria>,
    pub confusion: ConfusionMatrix,
    pub mapping: Vec<(usize, usize)>,
    pub relative_error: f64,
    pub f1: f64,
}

impl ScoreReport {
    pub fn new(confusion: ConfusionMatrix, criteria: Option<CutCriteria>) -> Result<Self> {
        let score = match_and_score(&confusion)?;
        Ok(Self {
            criteria,
            confusion,
            mapping: score.mapping,
            relative_error: score.relative_error,
            f1: score.f1,
        })
    }
}

/// Table with one row per dataset and one column per method.
pub fn table_csv(row_names: &[String], col_names: &[String], values: &[Vec<f64>]) -> String {
    let mut out = String::from("dataset");
    for c in col_names {
        let _ = write!(out, ",{c}");
    }
    out.push('\n');
    for (name, row) in row_names.iter().zip(values) {
        out.push_str(name);
        for v in row {
            let _ = write!(out, ",{v:.4}");
        }
        out.push('\n');
    }
    out
}
