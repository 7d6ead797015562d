//! Graph Laplacians and Laplacian-eigenvector embeddings.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simcore::{eig_unchecked, Embedding, EmbeddingKind, SimilarityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LaplacianKind {
    /// `L = D - S`
    Combinatorial,
    /// `D^{-1/2} L D^{-1/2}`
    Normalized,
    /// `L D^{-1}`
    RandomWalk,
    /// `(S + d_max I - D) / d_max`, embedded with its top eigenvectors.
    KamvarAffinity,
}

impl LaplacianKind {
    pub fn embedding_kind(self) -> EmbeddingKind {
        match self {
            LaplacianKind::Combinatorial => EmbeddingKind::Combinatorial,
            LaplacianKind::Normalized => EmbeddingKind::Normalized,
            LaplacianKind::RandomWalk => EmbeddingKind::RandomWalk,
            LaplacianKind::KamvarAffinity => EmbeddingKind::Kamvar,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralOptions {
    pub k: usize,
    /// Use `k + 1` eigenvectors.
    #[serde(default)]
    pub extra_dimension: bool,
    /// Scale every embedded row to unit length (zero rows stay zero).
    #[serde(default)]
    pub unit_rows: bool,
    /// Rank of the truncated SVD applied to the term space before the
    /// similarity matrix is built. Only meaningful for corpus input.
    #[serde(default)]
    pub svd_rank: Option<usize>,
    /// Skip the first eigenvector (the trivial one) and take the next `d`.
    #[serde(default)]
    pub skip_trivial: bool,
}

impl SpectralOptions {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            extra_dimension: false,
            unit_rows: false,
            svd_rank: None,
            skip_trivial: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParameter(format!(
                "spectral embedding needs k >= 2, got {}",
                self.k
            )));
        }
        if self.svd_rank == Some(0) {
            return Err(Error::InvalidParameter("svd_rank must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of eigenvectors kept.
    pub fn dims(&self) -> usize {
        self.k + usize::from(self.extra_dimension)
    }
}

pub fn combinatorial_laplacian<T: Scalar>(s: &SimilarityMatrix<T>) -> Array2<T> {
    let degrees = s.degrees();
    let mut l = s.entries().mapv(|v| -v);
    for (i, &d) in degrees.iter().enumerate() {
        l[[i, i]] = d;
    }
    l
}

fn positive_degrees<T: Scalar>(s: &SimilarityMatrix<T>) -> Result<Array1<T>> {
    let degrees = s.degrees();
    if let Some(index) = degrees.iter().position(|&d| d <= T::zero()) {
        return Err(Error::ZeroDegree { index });
    }
    Ok(degrees)
}

pub fn normalized_laplacian<T: Scalar>(s: &SimilarityMatrix<T>) -> Result<Array2<T>> {
    let degrees = positive_degrees(s)?;
    let inv_sqrt = degrees.mapv(|d| T::one() / d.sqrt());
    let n = s.n();
    let mut l = Array2::eye(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = -s.get(i, j) * inv_sqrt[i] * inv_sqrt[j];
            l[[i, j]] = v;
            l[[j, i]] = v;
        }
    }
    Ok(l)
}

/// `L D^{-1}`; not symmetric, columns sum to zero.
pub fn random_walk_laplacian<T: Scalar>(s: &SimilarityMatrix<T>) -> Result<Array2<T>> {
    let degrees = positive_degrees(s)?;
    let mut l = combinatorial_laplacian(s);
    for (mut col, &d) in l.axis_iter_mut(Axis(1)).zip(degrees.iter()) {
        col.mapv_inplace(|v| v / d);
    }
    Ok(l)
}

/// Kamvar-Klein-Manning additive normalization `(S + d_max I - D) / d_max`:
/// symmetric, nonnegative, rows summing to one.
pub fn kamvar_affinity<T: Scalar>(s: &SimilarityMatrix<T>) -> Result<Array2<T>> {
    let degrees = s.degrees();
    let d_max = degrees.iter().copied().fold(T::zero(), T::max);
    if d_max <= T::zero() {
        return Err(Error::InvalidParameter(
            "Kamvar affinity is undefined for an all-zero similarity matrix".into(),
        ));
    }
    let mut a = s.entries().mapv(|v| v / d_max);
    for (i, &d) in degrees.iter().enumerate() {
        a[[i, i]] = (d_max - d) / d_max;
    }
    Ok(a)
}

/// Embeds the items with the eigenvectors of the chosen matrix: the smallest
/// eigenvalues for the Laplacians, the largest for the Kamvar affinity.
pub fn spectral_embed<T: Scalar>(
    s: &SimilarityMatrix<T>,
    kind: LaplacianKind,
    opts: &SpectralOptions,
) -> Result<Embedding<T>> {
    opts.validate()?;
    let n = s.n();
    let d = opts.dims();
    let offset = usize::from(opts.skip_trivial);
    if d + offset > n {
        return Err(Error::InvalidParameter(format!(
            "cannot take {d} eigenvectors (offset {offset}) of a {n}x{n} matrix"
        )));
    }
    let mut coords = match kind {
        LaplacianKind::Combinatorial => {
            let eig = eig_unchecked(&combinatorial_laplacian(s))?;
            eig.vectors.slice(ndarray::s![.., offset..offset + d]).to_owned()
        }
        LaplacianKind::Normalized => {
            let eig = eig_unchecked(&normalized_laplacian(s)?)?;
            eig.vectors.slice(ndarray::s![.., offset..offset + d]).to_owned()
        }
        LaplacianKind::RandomWalk => {
            // If N u = l u then (L D^{-1}) D^{1/2} u = l D^{1/2} u.
            let degrees = positive_degrees(s)?;
            let eig = eig_unchecked(&normalized_laplacian(s)?)?;
            let mut v = eig.vectors.slice(ndarray::s![.., offset..offset + d]).to_owned();
            for (mut row, &deg) in v.axis_iter_mut(Axis(0)).zip(degrees.iter()) {
                let scale = deg.sqrt();
                row.mapv_inplace(|x| x * scale);
            }
            for mut col in v.axis_iter_mut(Axis(1)) {
                let norm = col.iter().map(|&x| x * x).sum::<T>().sqrt();
                if norm > T::zero() {
                    col.mapv_inplace(|x| x / norm);
                }
            }
            v
        }
        LaplacianKind::KamvarAffinity => {
            let eig = eig_unchecked(&kamvar_affinity(s)?)?;
            let cols: Vec<usize> = (0..d).map(|c| n - 1 - offset - c).collect();
            eig.vectors.select(Axis(1), &cols)
        }
    };
    if opts.unit_rows {
        normalize_rows(&mut coords);
    }
    Embedding::new(coords, None, kind.embedding_kind())
}

/// Scales each row to unit Euclidean length; all-zero rows are left alone.
pub fn normalize_rows<T: Scalar>(coords: &mut Array2<T>) {
    for mut row in coords.axis_iter_mut(Axis(0)) {
        let norm = row.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm > T::zero() {
            row.mapv_inplace(|x| x / norm);
        }
    }
}
