//! Graph spectral clustering with similarity-profile boundary filtering.
//!
//! The crate covers the whole pipeline from raw similarity data to explained
//! clusters:
//!
//! * [`simcore`] holds the shared numeric types (similarity matrices,
//!   partitions, embeddings) and the dense symmetric eigensolver.
//! * [`corpus`] turns documents into a pruned term-vector space and a cosine
//!   similarity matrix, optionally after a truncated SVD.
//! * [`spectral`] builds the combinatorial, normalized, random-walk and
//!   Kamvar-style matrices and their eigenvector embeddings.
//! * [`gower`] builds the K-, M- and B-embeddings by double centering
//!   squared pseudo-distances derived from the similarities.
//! * [`kmeans`] clusters embeddings with plain or weighted k-means.
//! * [`roughfilter`] computes the top/bottom similarity profile of every item
//!   and removes low-contrast (boundary) items below a threshold.
//! * [`synthgen`] generates block-structured similarity matrices and planted
//!   corpora for experiments.
//! * [`evalx`] evaluates cut criteria and matches predicted clusters to
//!   ground-truth labels.
//! * [`explain`] ranks centroid terms to describe each cluster.
//! * [`pipeline`] wires the stages together into named clustering methods and
//!   threshold sweeps.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the precision used by the command-line tool.

pub mod corpus;
pub mod error;
pub mod evalx;
pub mod explain;
pub mod gower;
pub mod kmeans;
pub mod pipeline;
pub mod roughfilter;
pub mod scalar;
pub mod simcore;
pub mod spectral;
pub mod synthgen;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use simcore::{DegreeInfo, EigenDecomposition, Embedding, EmbeddingKind, Partition, SimilarityMatrix};

pub type SimilarityMatrix64 = SimilarityMatrix<f64>;
pub type SimilarityMatrix32 = SimilarityMatrix<f32>;
pub type Embedding64 = Embedding<f64>;
pub type Embedding32 = Embedding<f32>;
pub type EigenDecomposition64 = EigenDecomposition<f64>;
pub type DegreeInfo64 = DegreeInfo<f64>;
pub type KMeansResult64 = kmeans::KMeansResult<f64>;
pub type FilterProfile64 = roughfilter::FilterProfile<f64>;
