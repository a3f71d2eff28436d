//! Dense matrix kernels: the row-wise Kronecker product, truncated SVD,
//! clustering-matrix embeddings, column selectors, row clipping and
//! orthogonal alignment.

mod align;
mod assignment;
mod embedding;
mod matrix;
mod selector;
mod svd;
mod tkr;

pub use align::{procrustes_align, regularize, Procrustes};
pub use assignment::Assignment;
pub use embedding::{embedding_from_assignment, orthonormality_residual, Embedding};
pub use matrix::{kron, Matrix};
pub use selector::{derive_selector, SelectorMatrix, ZERO_COLUMN_TOL};
pub use svd::{singular_values, spectral_norm, svd_k, SvdResult, FULL_SVD_LIMIT};
pub use tkr::{tkr, tkr_multi};

pub(crate) use matrix::row_norm;
