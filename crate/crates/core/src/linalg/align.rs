use crate::linalg::matrix::row_norm;
use crate::linalg::svd::{svd_k, singular_values};
use crate::linalg::Embedding;
use crate::{Error, Matrix, Result};

/// Clips every row of `u` to norm at most `delta`, then returns the top-`k`
/// left singular vectors of the clipped matrix.
pub fn regularize(u: &Embedding, delta: f64, k: usize) -> Result<Embedding> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("clipping radius must be positive, got {delta}")));
    }
    if k == 0 || k > u.dim() {
        return Err(Error::invalid(format!(
            "cannot keep {k} of {} columns",
            u.dim()
        )));
    }
    let mut clipped = u.matrix().clone();
    for i in 0..clipped.rows() {
        let norm = row_norm(clipped.row(i));
        if norm > delta {
            let f = delta / norm;
            clipped.row_mut(i).iter_mut().for_each(|v| *v *= f);
        }
    }
    Ok(svd_k(&clipped, k)?.left)
}

/// Orthogonal alignment of `a` onto `b`.
#[derive(Clone, Debug)]
pub struct Procrustes {
    /// `W = W₁W₂ᵀ` where `aᵀb = W₁ D W₂ᵀ`.
    pub rotation: Matrix,
    /// `aᵀb` is rank deficient, so `W` is not unique.
    pub degenerate: bool,
}

/// The orthogonal `W` minimizing `‖a·W − b‖_F`.
pub fn procrustes_align(a: &Matrix, b: &Matrix) -> Result<Procrustes> {
    if a.shape() != b.shape() {
        return Err(Error::dims(format!(
            "alignment needs equal shapes, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let cross = a.t_matmul(b)?;
    let k = cross.rows();
    let svd = svd_k(&cross, k)?;
    let rotation = svd.left.matrix().matmul(&svd.right.transpose())?;
    let s = singular_values(&cross)?;
    let top = s.values()[0];
    let degenerate = s.values()[k - 1] <= 1e-12 * top.max(f64::MIN_POSITIVE);
    Ok(Procrustes { rotation, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::embedding::orthonormality_residual;

    fn rotation(theta: f64) -> Matrix {
        let (s, c) = theta.sin_cos();
        Matrix::from_rows(&[vec![c, -s], vec![s, c]]).unwrap()
    }

    fn sample() -> Matrix {
        Matrix::from_fn(7, 2, |i, j| ((i * 3 + j * 5) % 7) as f64 / 7.0 - 0.4)
    }

    #[test]
    fn recovers_known_rotation() {
        let a = sample();
        let w0 = rotation(0.7);
        let b = a.matmul(&w0).unwrap();
        let p = procrustes_align(&a, &b).unwrap();
        assert!(p.rotation.sub(&w0).unwrap().max_abs() < 1e-12);
        assert!(!p.degenerate);
        let resid = a.matmul(&p.rotation).unwrap().sub(&b).unwrap().frobenius_norm();
        assert!(resid < 1e-12);
    }

    #[test]
    fn self_alignment_is_identity() {
        let a = sample();
        let p = procrustes_align(&a, &a).unwrap();
        assert!(p.rotation.sub(&Matrix::identity(2)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn degenerate_cross_product_still_orthogonal() {
        let a = Matrix::from_fn(4, 2, |i, j| if j == 0 { i as f64 } else { 0.0 });
        let b = Matrix::from_fn(4, 2, |i, j| if j == 0 { 1.0 + i as f64 } else { 0.0 });
        let p = procrustes_align(&a, &b).unwrap();
        assert!(p.degenerate);
        assert!(orthonormality_residual(&p.rotation) < 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        assert!(procrustes_align(&Matrix::zeros(3, 2), &Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn rejects_nonpositive_delta() {
        let u = Embedding::new(Matrix::identity(3));
        assert!(regularize(&u, 0.0, 2).is_err());
        assert!(regularize(&u, -1.0, 2).is_err());
        assert!(regularize(&u, 1.0, 4).is_err());
    }
}
