//! Boundary-item detection from per-item similarity profiles.
//!
//! For every item the off-diagonal similarities are sorted; `avg_top` is the
//! mean of the largest `ceil(q * (n - 1))` of them and `avg_bot` the mean of
//! the smallest as many. Items whose contrast `avg_diff = avg_top - avg_bot`
//! falls below a threshold are treated as boundary items and removed before
//! clustering. The procedure only looks at the similarity matrix, never at a
//! clustering.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simcore::SimilarityMatrix;

pub const DEFAULT_FRACTION: f64 = 0.05;
pub const DEFAULT_THRESHOLDS: [f64; 2] = [0.1, 0.2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRecord<T> {
    pub index: usize,
    pub avg_top: T,
    pub avg_bot: T,
    pub avg_diff: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterProfile<T> {
    pub records: Vec<ProfileRecord<T>>,
    pub q: f64,
    /// Item indices ascending by `avg_diff`, ties by index.
    pub sorted_order: Vec<usize>,
}

impl<T: Scalar> FilterProfile<T> {
    pub fn n(&self) -> usize {
        self.records.len()
    }

    /// `avg_diff` values in ascending order (the plotted profile curve).
    pub fn sorted_diffs(&self) -> Vec<T> {
        self.sorted_order.iter().map(|&i| self.records[i].avg_diff).collect()
    }

    /// Indices with `avg_diff < t`, ascending.
    pub fn removed_at(&self, t: T) -> Vec<usize> {
        self.records
            .iter()
            .filter(|r| r.avg_diff < t)
            .map(|r| r.index)
            .collect()
    }

    /// CSV with columns `doc_id,avg_top,avg_bot,avg_diff` followed by one
    /// `removed_at_<t>` flag column per threshold.
    pub fn to_csv(&self, ids: &[String], thresholds: &[f64]) -> String {
        let mut out = String::from("doc_id,avg_top,avg_bot,avg_diff");
        for t in thresholds {
            out.push_str(&format!(",removed_at_{t}"));
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{:.17},{:.17},{:.17}",
                ids[r.index],
                r.avg_top.as_f64(),
                r.avg_bot.as_f64(),
                r.avg_diff.as_f64()
            ));
            for &t in thresholds {
                out.push_str(if r.avg_diff < T::lit(t) { ",1" } else { ",0" });
            }
            out.push('\n');
        }
        out
    }
}

/// Number of similarities averaged on each side: `ceil(q * (n - 1))`, at
/// least one.
pub fn tail_count(n: usize, q: f64) -> usize {
    let others = n.saturating_sub(1);
    ((q * others as f64).ceil() as usize).clamp(1, others.max(1))
}

pub fn similarity_profile<T: Scalar>(s: &SimilarityMatrix<T>, q: f64) -> Result<FilterProfile<T>> {
    if !(q > 0.0 && q <= 0.5) {
        return Err(Error::InvalidParameter(format!("profile fraction q must be in (0, 0.5], got {q}")));
    }
    let n = s.n();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "a similarity profile needs at least 2 items, got {n}"
        )));
    }
    let count = tail_count(n, q);
    let cf = T::from_count(count);
    let mut row: Vec<T> = Vec::with_capacity(n - 1);
    let records: Vec<ProfileRecord<T>> = (0..n)
        .map(|j| {
            row.clear();
            row.extend((0..n).filter(|&l| l != j).map(|l| s.get(j, l)));
            row.sort_by(|a, b| a.partial_cmp(b).expect("finite similarities"));
            let avg_bot = row[..count].iter().copied().sum::<T>() / cf;
            let avg_top = row[row.len() - count..].iter().copied().sum::<T>() / cf;
            ProfileRecord {
                index: j,
                avg_top,
                avg_bot,
                avg_diff: avg_top - avg_bot,
            }
        })
        .collect();
    let mut sorted_order: Vec<usize> = (0..n).collect();
    sorted_order.sort_by(|&a, &b| {
        records[a]
            .avg_diff
            .partial_cmp(&records[b].avg_diff)
            .expect("finite")
            .then(a.cmp(&b))
    });
    Ok(FilterProfile {
        records,
        q,
        sorted_order,
    })
}

/// Core items of a filtering step and the map back to the input.
#[derive(Debug, Clone)]
pub struct FilterOutcome<T> {
    pub core: SimilarityMatrix<T>,
    /// Original index of each row of `core`.
    pub kept: Vec<usize>,
    pub removed: Vec<usize>,
}

/// Removes items with `avg_diff < t` and returns the principal submatrix on
/// the rest.
pub fn filter_boundary<T: Scalar>(
    s: &SimilarityMatrix<T>,
    profile: &FilterProfile<T>,
    t: f64,
) -> Result<FilterOutcome<T>> {
    if profile.n() != s.n() {
        return Err(Error::Dimension(format!(
            "profile covers {} items, matrix has {}",
            profile.n(),
            s.n()
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be >= 0, got {t}")));
    }
    let tt = T::lit(t);
    let (kept, removed): (Vec<usize>, Vec<usize>) = (0..s.n()).partition(|&i| profile.records[i].avg_diff >= tt);
    if kept.is_empty() {
        return Err(Error::EmptyCollection(format!(
            "threshold {t} removes all {} items",
            s.n()
        )));
    }
    Ok(FilterOutcome {
        core: s.submatrix(&kept),
        kept,
        removed,
    })
}

/// Suggested threshold: the upper end of the widest gap between consecutive
/// sorted `avg_diff` values whose lower end lies in the lower half of the
/// items. Returns 0 when there is no gap. Advisory only.
pub fn suggest_threshold<T: Scalar>(profile: &FilterProfile<T>) -> T {
    let diffs = profile.sorted_diffs();
    let n = diffs.len();
    if n < 2 {
        return T::zero();
    }
    let half = n.div_ceil(2);
    let mut best = (T::zero(), T::zero());
    for i in 0..half.min(n - 1) {
        let gap = diffs[i + 1] - diffs[i];
        if gap > best.0 {
            best = (gap, diffs[i + 1]);
        }
    }
    best.1
}
