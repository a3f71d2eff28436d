//! Joint clustering across views.
//!
//! [`krafty`] builds the row-wise Kronecker product of the per-view
//! matrices, embeds it with a truncated SVD and clusters the rows.
//! [`mase`] does the same on the side-by-side concatenation instead.

mod methods;

pub use methods::{joint_matrix_krafty, joint_matrix_mase, krafty, mase};

use crate::clustering::{Dendrogram, KMeansConfig};
use crate::selectk::ElbowEstimate;
use crate::{Assignment, Embedding, Error, Matrix, Result, Spectrum};

/// Largest orthonormality residual accepted for an embedding view.
pub const EMBEDDING_TOL: f64 = 1e-6;

/// Singular values at or below this fraction of σ₁ count as zero.
pub const RANK_TOL: f64 = 1e-8;

/// One view of the shared items.
#[derive(Clone, Debug)]
pub enum ViewInput {
    /// A hard clustering; contributes its 0/1 matrix.
    Assignment(Assignment),
    /// Orthonormal columns.
    Embedding(Embedding),
    /// Any real features, e.g. singular vectors scaled by the square roots
    /// of their singular values. No orthonormality is required.
    Features(Matrix),
}

impl ViewInput {
    /// Wraps an embedding after checking its orthonormality residual.
    pub fn embedding(e: Embedding) -> Result<Self> {
        if e.residual() > EMBEDDING_TOL {
            return Err(Error::invalid(format!(
                "embedding columns are not orthonormal (residual {:.3e})",
                e.residual()
            )));
        }
        Ok(ViewInput::Embedding(e))
    }

    pub fn n(&self) -> usize {
        match self {
            ViewInput::Assignment(a) => a.n(),
            ViewInput::Embedding(e) => e.n(),
            ViewInput::Features(m) => m.rows(),
        }
    }

    /// Number of columns the view contributes (`K_v`).
    pub fn dim(&self) -> usize {
        match self {
            ViewInput::Assignment(a) => a.k(),
            ViewInput::Embedding(e) => e.dim(),
            ViewInput::Features(m) => m.cols(),
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        match self {
            ViewInput::Assignment(a) => a.to_matrix(),
            ViewInput::Embedding(e) => e.matrix().clone(),
            ViewInput::Features(m) => m.clone(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ViewInput::Assignment(_) => "assignment",
            ViewInput::Embedding(_) => "embedding",
            ViewInput::Features(_) => "features",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Krafty,
    Mase,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Krafty => "krafty",
            Method::Mase => "mase",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "krafty" => Ok(Method::Krafty),
            "mase" => Ok(Method::Mase),
            _ => Err(Error::invalid(format!("unknown method '{s}'"))),
        }
    }
}

/// How rows of the joint embedding are grouped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Clusterer {
    /// Complete-linkage tree cut at `k`.
    Hc,
    KMeans,
}

impl Clusterer {
    pub fn as_str(&self) -> &'static str {
        match self {
            Clusterer::Hc => "hc",
            Clusterer::KMeans => "kmeans",
        }
    }
}

impl std::str::FromStr for Clusterer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hc" => Ok(Clusterer::Hc),
            "kmeans" => Ok(Clusterer::KMeans),
            _ => Err(Error::invalid(format!("unknown clusterer '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KSource {
    Given,
    Estimated,
}

impl KSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            KSource::Given => "given",
            KSource::Estimated => "estimated",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointOptions {
    /// Number of joint clusters; estimated from the spectrum when absent.
    pub k: Option<usize>,
    pub clusterer: Clusterer,
    /// Which profile-likelihood elbow estimates `k`.
    pub which_elbow: usize,
    pub seed: u64,
    /// Clip the first embedding view's rows at `C·√(K_v/n)` before use.
    pub regularize: Option<f64>,
    pub kmeans: KMeansConfig,
}

impl Default for JointOptions {
    fn default() -> Self {
        JointOptions {
            k: None,
            clusterer: Clusterer::Hc,
            which_elbow: 2,
            seed: 0,
            regularize: None,
            kmeans: KMeansConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct JointResult {
    pub labels: Assignment,
    /// Leading left singular vectors of the joint matrix.
    pub embedding: Embedding,
    /// Every singular value of the joint matrix.
    pub spectrum: Spectrum,
    pub k_used: usize,
    pub k_source: KSource,
    pub method: Method,
    pub dendrogram: Option<Dendrogram>,
    pub elbow: Option<ElbowEstimate>,
    pub warnings: Vec<String>,
}

/// Maps each joint cluster to one cluster of a view.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectionMatrix {
    k_v: usize,
    map: Vec<usize>,
}

impl ProjectionMatrix {
    /// Every view cluster must be the target of some joint cluster.
    pub fn new(map: Vec<usize>, k_v: usize) -> Result<Self> {
        if map.is_empty() || k_v == 0 {
            return Err(Error::invalid("projection needs at least one cluster on each side"));
        }
        let mut hit = vec![false; k_v];
        for (k, &t) in map.iter().enumerate() {
            if t >= k_v {
                return Err(Error::invalid(format!(
                    "joint cluster {k} maps to {t}, outside {k_v} view clusters"
                )));
            }
            hit[t] = true;
        }
        if let Some(miss) = hit.iter().position(|&h| !h) {
            return Err(Error::invalid(format!("view cluster {miss} has no preimage")));
        }
        Ok(ProjectionMatrix { k_v, map })
    }

    pub fn k(&self) -> usize {
        self.map.len()
    }

    pub fn k_v(&self) -> usize {
        self.k_v
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    /// Dense `k x k_v` 0/1 form.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.map.len(), self.k_v, |i, j| {
            if self.map[i] == j {
                1.0
            } else {
                0.0
            }
        })
    }
}

/// The view clustering `Z_v = Z P_v` induced by a joint clustering.
pub fn project_assignment(z: &Assignment, p: &ProjectionMatrix) -> Result<Assignment> {
    if z.k() != p.k() {
        return Err(Error::dims(format!(
            "assignment has {} clusters, projection expects {}",
            z.k(),
            p.k()
        )));
    }
    Assignment::new(z.labels().iter().map(|&l| p.map[l]).collect(), p.k_v)
}
