use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simcore::SYMMETRY_TOL;

/// Symmetric matrix of pairwise similarities in `[0, 1]` with a zero diagonal.
///
/// Construction validates every entry, so code holding a `SimilarityMatrix`
/// can rely on symmetry, the zero diagonal and the bounds without rechecking.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<T> {
    entries: Array2<T>,
    item_ids: Option<Vec<String>>,
}

impl<T: Scalar> SimilarityMatrix<T> {
    /// Validates `entries`. Asymmetry up to `1e-10` is accepted and averaged
    /// away so the stored matrix is exactly symmetric.
    pub fn new(mut entries: Array2<T>) -> Result<Self> {
        let (rows, cols) = entries.dim();
        if rows != cols {
            return Err(Error::Dimension(format!(
                "similarity matrix must be square, got {rows}x{cols}"
            )));
        }
        let tol = T::lit(SYMMETRY_TOL);
        let half = T::lit(0.5);
        for i in 0..rows {
            for j in 0..cols {
                let v = entries[[i, j]];
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        for i in 0..rows {
            let d = entries[[i, i]];
            if d != T::zero() {
                return Err(Error::NonZeroDiagonal {
                    index: i,
                    value: d.as_f64(),
                });
            }
            for j in (i + 1)..cols {
                let (a, b) = (entries[[i, j]], entries[[j, i]]);
                if (a - b).abs() > tol {
                    return Err(Error::Asymmetric {
                        row: i,
                        col: j,
                        value: a.as_f64(),
                        mirror: b.as_f64(),
                    });
                }
                if a != b {
                    let m = (a + b) * half;
                    entries[[i, j]] = m;
                    entries[[j, i]] = m;
                }
                let v = entries[[i, j]];
                if v < T::zero() || v > T::one() {
                    return Err(Error::OutOfRange {
                        row: i,
                        col: j,
                        value: v.as_f64(),
                    });
                }
            }
        }
        Ok(Self {
            entries,
            item_ids: None,
        })
    }

    /// Builds a matrix from a function of the upper triangle `i < j`.
    pub fn from_upper<F: FnMut(usize, usize) -> T>(n: usize, mut f: F) -> Result<Self> {
        let mut entries = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                entries[[i, j]] = v;
                entries[[j, i]] = v;
            }
        }
        Self::new(entries)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            entries: Array2::zeros((n, n)),
            item_ids: None,
        }
    }

    pub fn with_item_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.n() {
            return Err(Error::Dimension(format!(
                "{} item ids for {} items",
                ids.len(),
                self.n()
            )));
        }
        self.item_ids = Some(ids);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[[i, j]]
    }

    pub fn entries(&self) -> &Array2<T> {
        &self.entries
    }

    pub fn item_ids(&self) -> Option<&[String]> {
        self.item_ids.as_deref()
    }

    /// Identifier of item `i`: the stored id, or the index as a string.
    pub fn item_id(&self, i: usize) -> String {
        match &self.item_ids {
            Some(ids) => ids[i].clone(),
            None => i.to_string(),
        }
    }

    /// Principal submatrix on `indices` (kept in the given order).
    pub fn submatrix(&self, indices: &[usize]) -> Self {
        let m = indices.len();
        let mut entries = Array2::zeros((m, m));
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                entries[[a, b]] = self.entries[[i, j]];
            }
        }
        let item_ids = self
            .item_ids
            .as_ref()
            .map(|ids| indices.iter().map(|&i| ids[i].clone()).collect());
        Self { entries, item_ids }
    }

    /// Converts to another precision. Values stay inside `[0, 1]` because
    /// both bounds are exactly representable.
    pub fn cast<U: Scalar>(&self) -> SimilarityMatrix<U> {
        SimilarityMatrix {
            entries: self.entries.mapv(|v| U::lit(v.as_f64())),
            item_ids: self.item_ids.clone(),
        }
    }

    /// Row sums, accumulated in ascending column order.
    pub fn degrees(&self) -> Array1<T> {
        self.entries
            .rows()
            .into_iter()
            .map(|row| {
                let mut acc = T::zero();
                for &v in row.iter() {
                    acc += v;
                }
                acc
            })
            .collect()
    }
}

/// Node degrees `d_ii` and the degrees `d'_ii` obtained with a unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeInfo<T> {
    pub degrees: Array1<T>,
    pub augmented_degrees: Array1<T>,
}

pub fn degree_info<T: Scalar>(s: &SimilarityMatrix<T>) -> DegreeInfo<T> {
    let degrees = s.degrees();
    let augmented_degrees = degrees.mapv(|d| d + T::one());
    DegreeInfo {
        degrees,
        augmented_degrees,
    }
}
