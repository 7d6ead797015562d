//! K-, M- and B-embeddings: squared pseudo-distances derived from the
//! similarities are double centered into a Gram matrix whose scaled
//! eigenvectors give point coordinates.
//!
//! | embedding | squared distance between `i != l`              | weights  |
//! |-----------|------------------------------------------------|----------|
//! | K         | `1 - s_il`                                     | none     |
//! | M         | `(d_i + d_l - 2 s_il) / (d_i d_l)`             | `d_i`    |
//! | B         | `1/d'_i^2 + 1/d'_l^2 - 2 s_il / (d'_i d'_l)`   | `d'_i`   |
//!
//! where `d` are the degrees and `d' = d + 1`. Negative eigenvalues of the
//! Gram matrix (non-Euclidean input) are dropped; their total magnitude is
//! recorded as the embedding's dropped mass.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simcore::{degree_info, eig_unchecked, Embedding, EmbeddingKind, SimilarityMatrix};

/// Relative (to the trace) eigenvalue threshold below which a Gram dimension
/// is not used for coordinates.
pub const EIGEN_KEEP_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct CenteredGram<T> {
    pub matrix: Array2<T>,
    /// Indices (into the ascending spectrum) of the eigenvalues used for
    /// coordinates. Empty until [`CenteredGram::embed`] runs.
    pub kept_dims: Vec<usize>,
}

/// `-1/2 (I - 11^T/n) A (I - 11^T/n)` for symmetric `A`.
pub fn double_center<T: Scalar>(a: &Array2<T>) -> CenteredGram<T> {
    let n = a.nrows();
    if n == 0 {
        return CenteredGram {
            matrix: Array2::zeros((0, 0)),
            kept_dims: Vec::new(),
        };
    }
    let nf = T::from_count(n);
    let row_means: Array1<T> = a.rows().into_iter().map(|r| r.sum() / nf).collect();
    let grand = row_means.sum() / nf;
    let half = T::lit(0.5);
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = -half * (a[[i, j]] - row_means[i] - row_means[j] + grand);
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    CenteredGram {
        matrix: k,
        kept_dims: Vec::new(),
    }
}

impl<T: Scalar> CenteredGram<T> {
    /// Coordinates `V sqrt(Lambda)` over the eigenvalues above
    /// `EIGEN_KEEP_TOL * trace`, largest first. At least one (possibly zero)
    /// column is always produced.
    pub fn embed(&mut self, kind: EmbeddingKind, weights: Option<Array1<T>>) -> Result<Embedding<T>> {
        let n = self.matrix.nrows();
        let eig = eig_unchecked(&self.matrix)?;
        let trace: T = (0..n).map(|i| self.matrix[[i, i]]).sum();
        let tol = T::lit(EIGEN_KEEP_TOL) * trace.abs();
        self.kept_dims = (0..n).rev().filter(|&c| eig.values[c] > tol).collect();
        let dropped: T = eig
            .values
            .iter()
            .filter(|&&v| v < T::zero())
            .map(|v| v.abs())
            .sum();
        let d = self.kept_dims.len().max(1);
        let mut coords = Array2::zeros((n, d));
        for (out, &c) in self.kept_dims.iter().enumerate() {
            let scale = eig.values[c].sqrt();
            for i in 0..n {
                coords[[i, out]] = eig.vectors[[i, c]] * scale;
            }
        }
        Ok(Embedding::new(coords, weights, kind)?.with_dropped_mass(dropped))
    }
}

/// Squared pseudo-distance `11^T - I - S`.
pub fn k_distances<T: Scalar>(s: &SimilarityMatrix<T>) -> Array2<T> {
    let n = s.n();
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { T::zero() } else { T::one() - s.get(i, j) })
}

/// `D^{-1} (E D + D E - 2 S) D^{-1}` with `E = 11^T - I`.
pub fn m_distances<T: Scalar>(s: &SimilarityMatrix<T>) -> Result<Array2<T>> {
    let degrees = s.degrees();
    if let Some(index) = degrees.iter().position(|&d| d <= T::zero()) {
        return Err(Error::ZeroDegree { index });
    }
    let n = s.n();
    let two = T::lit(2.0);
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            T::zero()
        } else {
            (degrees[i] + degrees[j] - two * s.get(i, j)) / (degrees[i] * degrees[j])
        }
    }))
}

/// `E D'^{-2} + D'^{-2} E - 2 D'^{-1} S D'^{-1}` with `D' = D + I`.
pub fn b_distances<T: Scalar>(s: &SimilarityMatrix<T>) -> Array2<T> {
    let aug = degree_info(s).augmented_degrees;
    let n = s.n();
    let two = T::lit(2.0);
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            T::zero()
        } else {
            let (a, b) = (aug[i], aug[j]);
            T::one() / (a * a) + T::one() / (b * b) - two * s.get(i, j) / (a * b)
        }
    })
}

pub fn k_embedding<T: Scalar>(s: &SimilarityMatrix<T>) -> Result<Embedding<T>> {
    double_center(&k_distances(s)).embed(EmbeddingKind::K, None)
}

/// Carries weights `d_ii`.
pub fn m_embedding<T: Scalar>(s: &SimilarityMatrix<T>) -> Result<Embedding<T>> {
    let a = m_distances(s)?;
    double_center(&a).embed(EmbeddingKind::M, Some(s.degrees()))
}

/// Carries weights `d'_ii = d_ii + 1`.
pub fn b_embedding<T: Scalar>(s: &SimilarityMatrix<T>) -> Result<Embedding<T>> {
    let weights = degree_info(s).augmented_degrees;
    double_center(&b_distances(s)).embed(EmbeddingKind::B, Some(weights))
}
