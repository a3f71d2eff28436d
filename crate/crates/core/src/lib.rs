//! Joint cluster recovery across multiple views.
//!
//! Each view of a shared set of `n` items carries either a hard clustering
//! or an orthonormal spectral embedding. The row-wise Kronecker
//! ("transposed Khatri-Rao") product of the per-view matrices gives a joint
//! matrix whose rank equals the number of joint clusters, so its scree plot
//! drops sharply at the right place and its leading left singular vectors
//! separate the joint clusters. [`joint::krafty`] implements that route and
//! [`joint::mase`] the concatenation baseline it is compared against.
//!
//! Around those two sit the pieces needed to use and evaluate them:
//! dense kernels ([`linalg`]), k-means and complete-linkage clustering
//! ([`clustering`]), cluster-count estimation ([`selectk`]), partition
//! metrics ([`metrics`]), the Gaussian-mixture simulation study ([`sim`]),
//! and weighted directed network ingestion ([`ingest`]).

pub mod clustering;
mod error;
pub mod ingest;
pub mod io;
pub mod joint;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod selectk;
pub mod sim;

pub use error::{Error, Result};
pub use linalg::{Assignment, Embedding, Matrix};
pub use selectk::Spectrum;
