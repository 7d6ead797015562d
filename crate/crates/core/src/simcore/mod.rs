//! Shared numeric types and the dense symmetric eigensolver.

mod eigen;
mod embedding;
pub mod io;
mod partition;
mod similarity;

pub use eigen::{eig_unchecked, symmetric_eig, EigenDecomposition};
pub use embedding::{Embedding, EmbeddingKind};
pub use partition::Partition;
pub use similarity::{degree_info, DegreeInfo, SimilarityMatrix};

/// Maximum absolute asymmetry tolerated by validating entry points.
pub const SYMMETRY_TOL: f64 = 1e-10;
