use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Assignment of `n` items to `k` clusters labelled `0..k`.
///
/// Empty clusters are representable; [`Partition::has_empty`] flags them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("partition needs k >= 1".into()));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(Error::InvalidParameter(format!(
                "label {l} of item {i} is out of range for k = {k}"
            )));
        }
        Ok(Self { labels, k })
    }

    /// Uses `max(label) + 1` as the cluster count.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().copied().max().map_or(1, |m| m + 1);
        Self::new(labels, k)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Cardinalities `n_j`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn has_empty(&self) -> bool {
        self.sizes().contains(&0)
    }

    pub fn first_empty(&self) -> Option<usize> {
        self.sizes().iter().position(|&c| c == 0)
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == cluster)
            .map(|(i, _)| i)
            .collect()
    }

    /// Restriction to `indices`, keeping `k`.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        Self {
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            k: self.k,
        }
    }

    /// Relabels clusters in order of first appearance and drops empty ones.
    pub fn compact(&self) -> Self {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let labels = self
            .labels
            .iter()
            .map(|&l| {
                if map[l] == usize::MAX {
                    map[l] = next;
                    next += 1;
                }
                map[l]
            })
            .collect();
        Self {
            labels,
            k: next.max(1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_sum_to_n() {
        let p = Partition::new(vec![0, 2, 2, 1, 0], 4).unwrap();
        assert_eq!(p.sizes(), vec![2, 1, 2, 0]);
        assert!(p.has_empty());
        assert_eq!(p.first_empty(), Some(3));
        assert_eq!(p.sizes().iter().sum::<usize>(), p.n());
    }

    #[test]
    fn rejects_bad_labels() {
        assert!(Partition::new(vec![0, 3], 3).is_err());
        assert!(Partition::new(vec![], 0).is_err());
    }

    #[test]
    fn compact_relabels() {
        let p = Partition::new(vec![3, 1, 3, 1], 5).unwrap().compact();
        assert_eq!(p.labels(), &[0, 1, 0, 1]);
        assert_eq!(p.k(), 2);
    }
}
