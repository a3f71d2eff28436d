use crate::linalg::Assignment;
use crate::{Error, Matrix, Result};

/// An n x k real matrix together with its column-orthonormality residual
/// `‖MᵀM − I‖_F`.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    matrix: Matrix,
    residual: f64,
}

impl Embedding {
    pub fn new(matrix: Matrix) -> Self {
        let residual = orthonormality_residual(&matrix);
        Embedding { matrix, residual }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }
}

pub fn orthonormality_residual(m: &Matrix) -> f64 {
    let gram = m.t_matmul(m).expect("gram of a matrix with itself");
    gram.sub(&Matrix::identity(m.cols()))
        .expect("gram is square")
        .frobenius_norm()
}

/// `U = Z D^{-1/2}`: column `k` is the indicator of cluster `k` scaled by
/// `1/√n_k`.
pub fn embedding_from_assignment(z: &Assignment) -> Result<Embedding> {
    let sizes = z.sizes();
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::invalid(format!("cluster {empty} is empty")));
    }
    let scale: Vec<f64> = sizes.iter().map(|&s| 1.0 / (s as f64).sqrt()).collect();
    let mut m = Matrix::zeros(z.n(), z.k());
    for (i, &l) in z.labels().iter().enumerate() {
        m[(i, l)] = scale[l];
    }
    Ok(Embedding::new(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_example() {
        let z = Assignment::new(vec![0, 0, 1], 2).unwrap();
        let u = embedding_from_assignment(&z).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert_eq!(u.matrix().as_slice(), &[s, 0.0, s, 0.0, 0.0, 1.0]);
        assert!(u.residual() < 1e-12);
    }

    #[test]
    fn balanced_entries() {
        let z = Assignment::new((0..9).map(|i| i % 3).collect(), 3).unwrap();
        let u = embedding_from_assignment(&z).unwrap();
        for &v in u.matrix().as_slice() {
            assert!(v == 0.0 || (v - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
    }
}
