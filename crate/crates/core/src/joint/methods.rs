use super::{
    Clusterer, JointOptions, JointResult, KSource, Method, ViewInput, RANK_TOL,
};
use crate::clustering::{cut_dendrogram, hierarchical_complete, kmeans};
use crate::linalg::{regularize, singular_values, svd_k, tkr_multi};
use crate::selectk::estimate_k;
use crate::{Embedding, Error, Matrix, Result};

fn check_views(views: &[ViewInput]) -> Result<usize> {
    if views.len() < 2 {
        return Err(Error::invalid(format!(
            "joint clustering needs at least 2 views, got {}",
            views.len()
        )));
    }
    let n = views[0].n();
    for (v, view) in views.iter().enumerate() {
        if view.n() != n {
            return Err(Error::dims(format!(
                "view {v} has {} items, view 0 has {n}",
                view.n()
            )));
        }
        if let ViewInput::Embedding(e) = view {
            if e.residual() > super::EMBEDDING_TOL {
                return Err(Error::invalid(format!(
                    "view {v} is not orthonormal (residual {:.3e})",
                    e.residual()
                )));
            }
        }
    }
    Ok(n)
}

/// Row-wise Kronecker product of the views' matrices.
pub fn joint_matrix_krafty(views: &[ViewInput]) -> Result<Matrix> {
    check_views(views)?;
    let mats: Vec<Matrix> = views.iter().map(ViewInput::to_matrix).collect();
    tkr_multi(&mats.iter().collect::<Vec<_>>())
}

/// Side-by-side concatenation of the views' matrices.
pub fn joint_matrix_mase(views: &[ViewInput]) -> Result<Matrix> {
    check_views(views)?;
    let mats: Vec<Matrix> = views.iter().map(ViewInput::to_matrix).collect();
    Matrix::hstack(&mats.iter().collect::<Vec<_>>())
}

/// Joint clustering from the row-wise Kronecker product of the views.
pub fn krafty(views: &[ViewInput], opts: &JointOptions) -> Result<JointResult> {
    let n = check_views(views)?;
    let views = maybe_regularize(views, opts, n)?;
    let joint = joint_matrix_krafty(&views)?;
    finish(joint, &views, opts, Method::Krafty)
}

/// Joint clustering from the concatenation of the views.
pub fn mase(views: &[ViewInput], opts: &JointOptions) -> Result<JointResult> {
    let n = check_views(views)?;
    let views = maybe_regularize(views, opts, n)?;
    let joint = joint_matrix_mase(&views)?;
    finish(joint, &views, opts, Method::Mase)
}

fn maybe_regularize(views: &[ViewInput], opts: &JointOptions, n: usize) -> Result<Vec<ViewInput>> {
    let mut out = views.to_vec();
    let Some(c) = opts.regularize else {
        return Ok(out);
    };
    if !(c > 0.0) {
        return Err(Error::invalid(format!("regularization constant must be positive, got {c}")));
    }
    if let Some(slot) = out.iter_mut().find(|v| matches!(v, ViewInput::Embedding(_))) {
        if let ViewInput::Embedding(e) = slot {
            let k_v = e.dim();
            let delta = c * (k_v as f64 / n as f64).sqrt();
            *slot = ViewInput::Embedding(regularize(e, delta, k_v)?);
        }
    }
    Ok(out)
}

fn finish(
    joint: Matrix,
    views: &[ViewInput],
    opts: &JointOptions,
    method: Method,
) -> Result<JointResult> {
    let n = joint.rows();
    let k_max: usize = views.iter().map(ViewInput::dim).product();
    let spectrum = singular_values(&joint)?;
    let rank = spectrum.numerical_rank(RANK_TOL).max(1);
    let mut warnings = Vec::new();

    let (k, k_source, elbow) = match opts.k {
        Some(k) => {
            if k == 0 {
                return Err(Error::invalid("k must be at least 1"));
            }
            if k > k_max {
                warnings.push(format!(
                    "k = {k} exceeds {k_max}, the product of the view dimensions"
                ));
            }
            (k, KSource::Given, None)
        }
        None => {
            // a matrix with fewer columns than rows has a further zero value
            let s = if n > spectrum.len() {
                spectrum.padded(spectrum.len() + 1)
            } else {
                spectrum.clone()
            };
            let e = estimate_k(&s, opts.which_elbow)?;
            if e.which_elbow != opts.which_elbow.max(1) {
                warnings.push(format!(
                    "no elbow {} in the spectrum; used elbow {}",
                    opts.which_elbow, e.which_elbow
                ));
            }
            (e.k_hat, KSource::Estimated, Some(e))
        }
    };
    if k > n {
        return Err(Error::invalid(format!("cannot form {k} clusters from {n} items")));
    }
    let dim = if k > rank {
        warnings.push(format!(
            "joint matrix has numerical rank {rank} < k = {k}; embedding uses {rank} dimensions"
        ));
        rank
    } else {
        k
    };
    let embedding: Embedding = svd_k(&joint, dim)?.left;
    let (labels, dendrogram) = match opts.clusterer {
        Clusterer::Hc => {
            if n < 2 {
                (crate::Assignment::new(vec![0; n], 1)?, None)
            } else {
                let d = hierarchical_complete(embedding.matrix())?;
                (cut_dendrogram(&d, k)?, Some(d))
            }
        }
        Clusterer::KMeans => {
            let r = kmeans(
                embedding.matrix(),
                k,
                opts.kmeans.restarts,
                opts.kmeans.max_iter,
                opts.seed,
            )?;
            (r.assignment, None)
        }
    };
    for w in &warnings {
        log::debug!("{w}");
    }
    Ok(JointResult {
        labels,
        embedding,
        spectrum,
        k_used: k,
        k_source,
        method,
        dendrogram,
        elbow,
        warnings,
    })
}
