use std::fmt;

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Method that produced an [`Embedding`]; rendered as the `kind=` tag of the
/// embedding CSV dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmbeddingKind {
    Combinatorial,
    Normalized,
    RandomWalk,
    Kamvar,
    K,
    M,
    B,
    Raw,
}

impl EmbeddingKind {
    pub fn tag(self) -> &'static str {
        match self {
            EmbeddingKind::Combinatorial => "L",
            EmbeddingKind::Normalized => "N",
            EmbeddingKind::RandomWalk => "RW",
            EmbeddingKind::Kamvar => "Kamvar",
            EmbeddingKind::K => "K",
            EmbeddingKind::M => "M",
            EmbeddingKind::B => "B",
            EmbeddingKind::Raw => "raw",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "L" => EmbeddingKind::Combinatorial,
            "N" => EmbeddingKind::Normalized,
            "RW" => EmbeddingKind::RandomWalk,
            "Kamvar" => EmbeddingKind::Kamvar,
            "K" => EmbeddingKind::K,
            "M" => EmbeddingKind::M,
            "B" => EmbeddingKind::B,
            "raw" => EmbeddingKind::Raw,
            _ => return None,
        })
    }
}

impl fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// `n` points in `d` dimensions, optionally carrying positive clustering
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T> {
    coords: Array2<T>,
    weights: Option<Array1<T>>,
    kind: EmbeddingKind,
    dropped_mass: T,
}

impl<T: Scalar> Embedding<T> {
    pub fn new(coords: Array2<T>, weights: Option<Array1<T>>, kind: EmbeddingKind) -> Result<Self> {
        let (n, d) = coords.dim();
        if d == 0 {
            return Err(Error::Dimension("embedding needs at least one dimension".into()));
        }
        if let Some(((i, j), _)) = coords.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: j });
        }
        if let Some(w) = &weights {
            if w.len() != n {
                return Err(Error::Dimension(format!("{} weights for {n} points", w.len())));
            }
            if let Some((i, v)) = w.iter().enumerate().find(|(_, v)| !(**v > T::zero() && v.is_finite())) {
                return Err(Error::InvalidParameter(format!(
                    "weight {i} is {v}, weights must be strictly positive"
                )));
            }
        }
        Ok(Self {
            coords,
            weights,
            kind,
            dropped_mass: T::zero(),
        })
    }

    pub(crate) fn with_dropped_mass(mut self, mass: T) -> Self {
        self.dropped_mass = mass;
        self
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.coords.ncols()
    }

    pub fn coords(&self) -> &Array2<T> {
        &self.coords
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, T> {
        self.coords.row(i)
    }

    pub fn weights(&self) -> Option<&Array1<T>> {
        self.weights.as_ref()
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    /// Sum of the magnitudes of negative eigenvalues discarded while building
    /// a Gower-type embedding; zero for every other kind.
    pub fn dropped_mass(&self) -> T {
        self.dropped_mass
    }

    pub fn without_weights(&self) -> Self {
        Self {
            weights: None,
            ..self.clone()
        }
    }

    pub fn sq_dist(&self, i: usize, j: usize) -> T {
        self.coords
            .row(i)
            .iter()
            .zip(self.coords.row(j).iter())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum()
    }

    /// CSV dump: `# kind=<tag>`, header `dim_1..dim_d[,weight]`, one row per
    /// point.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# kind={}\n", self.kind.tag());
        let header: Vec<String> = (1..=self.d()).map(|i| format!("dim_{i}")).collect();
        out.push_str(&header.join(","));
        if self.weights.is_some() {
            out.push_str(",weight");
        }
        out.push('\n');
        for i in 0..self.n() {
            let mut fields: Vec<String> = self
                .coords
                .row(i)
                .iter()
                .map(|v| format!("{:.16e}", v.as_f64()))
                .collect();
            if let Some(w) = &self.weights {
                fields.push(format!("{:.16e}", w[i].as_f64()));
            }
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}
