use faer::Mat;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::Embedding;
use crate::selectk::Spectrum;
use crate::{rng, Error, Matrix, Result};

/// Up to this smaller dimension the decomposition is computed in full;
/// above it, by randomized subspace iteration.
pub const FULL_SVD_LIMIT: usize = 512;
const OVERSAMPLING: usize = 8;
const POWER_ITERATIONS: usize = 4;
const RANDOMIZED_SEED: u64 = 0x6b72_6166_7479;

/// Top-`k` singular triplets.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub left: Embedding,
    pub values: Spectrum,
    pub right: Matrix,
}

fn no_convergence() -> Error {
    Error::NoConvergence {
        what: "singular value decomposition",
        iterations: 0,
    }
}

/// Top-`k` singular triplets of `m`, values descending.
///
/// Signs are fixed so that the largest-magnitude entry of every left
/// singular vector is positive (lowest index on ties). Vectors belonging
/// to repeated singular values are only determined up to a rotation.
pub fn svd_k(m: &Matrix, k: usize) -> Result<SvdResult> {
    let min_dim = m.rows().min(m.cols());
    if k == 0 || k > min_dim {
        return Err(Error::invalid(format!(
            "rank {k} requested from a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let (u, s, v) = if min_dim <= FULL_SVD_LIMIT {
        full_svd(&m.to_faer())?
    } else {
        randomized_svd(m, k)?
    };
    let mut u = u.subcols(0, k).to_owned();
    let mut v = v.subcols(0, k).to_owned();
    fix_signs(&mut u, &mut v);
    Ok(SvdResult {
        left: Embedding::new(Matrix::from_faer(&u)),
        values: Spectrum::from_svd(s[..k].to_vec()),
        right: Matrix::from_faer(&v),
    })
}

/// All `min(rows, cols)` singular values, descending.
pub fn singular_values(m: &Matrix) -> Result<Spectrum> {
    let mut s = m.to_faer().singular_values().map_err(|_| no_convergence())?;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(Spectrum::from_svd(s))
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.values()[0])
}

/// Thin SVD as (U, s, V) with `s` sorted descending.
fn full_svd(m: &Mat<f64>) -> Result<(Mat<f64>, Vec<f64>, Mat<f64>)> {
    let svd = m.thin_svd().map_err(|_| no_convergence())?;
    let (u, v) = (svd.U(), svd.V());
    let s = svd.S().column_vector();
    let mut order: Vec<usize> = (0..s.nrows()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let u_sorted = Mat::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    let v_sorted = Mat::from_fn(v.nrows(), order.len(), |i, j| v[(i, order[j])]);
    let s_sorted = order.iter().map(|&i| s[i].max(0.0)).collect();
    Ok((u_sorted, s_sorted, v_sorted))
}

/// Range finder with Gaussian sketch, oversampling and power iterations,
/// followed by an exact SVD of the projected matrix.
fn randomized_svd(m: &Matrix, k: usize) -> Result<(Mat<f64>, Vec<f64>, Mat<f64>)> {
    let a = m.to_faer();
    let width = (k + OVERSAMPLING).min(a.nrows().min(a.ncols()));
    let mut rng = rng::stream(RANDOMIZED_SEED, 0);
    let omega = Mat::from_fn(a.ncols(), width, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
    let mut q = (&a * &omega).qr().compute_thin_Q();
    for _ in 0..POWER_ITERATIONS {
        let z = (a.transpose() * &q).qr().compute_thin_Q();
        q = (&a * &z).qr().compute_thin_Q();
    }
    let b = q.transpose() * &a;
    let (ub, s, v) = full_svd(&b)?;
    Ok((&q * &ub, s, v))
}

fn fix_signs(u: &mut Mat<f64>, v: &mut Mat<f64>) {
    for j in 0..u.ncols() {
        let mut best = 0;
        for i in 1..u.nrows() {
            if u[(i, j)].abs() > u[(best, j)].abs() {
                best = i;
            }
        }
        if u[(best, j)] < 0.0 {
            for i in 0..u.nrows() {
                u[(i, j)] = -u[(i, j)];
            }
            for i in 0..v.nrows() {
                v[(i, j)] = -v[(i, j)];
            }
        }
    }
}
