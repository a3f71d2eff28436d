//! Base clustering: k-means++ with Lloyd iterations, and complete-linkage
//! agglomerative clustering.

mod hierarchical;
mod kmeans;

pub use hierarchical::{cut_dendrogram, hierarchical_complete, Dendrogram, Merge};
pub use kmeans::{kmeans, KMeansConfig, KMeansResult};

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
