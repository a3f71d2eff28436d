use crate::{Error, Matrix, Result};

/// Transposed Khatri-Rao product: row `i` of the result is `a(i,:) ⊗ b(i,:)`,
/// laid out as `[a(i,0)·b(i,:) | a(i,1)·b(i,:) | ...]`.
pub fn tkr(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return Err(Error::dims(format!(
            "row-wise Kronecker product needs equal row counts, got {} and {}",
            a.rows(),
            b.rows()
        )));
    }
    let (n, m, q) = (a.rows(), a.cols(), b.cols());
    let mut data = Vec::with_capacity(n * m * q);
    for i in 0..n {
        let b_row = b.row(i);
        for &x in a.row(i) {
            data.extend(b_row.iter().map(|&y| x * y));
        }
    }
    Matrix::new(n, m * q, data)
}

/// Left-associated fold `((v0 ⊗ᵣ v1) ⊗ᵣ v2) ...` over two or more matrices.
pub fn tkr_multi(views: &[&Matrix]) -> Result<Matrix> {
    match views {
        [] | [_] => Err(Error::invalid(format!(
            "row-wise Kronecker fold needs at least 2 matrices, got {}",
            views.len()
        ))),
        [first, rest @ ..] => rest.iter().try_fold((*first).clone(), |acc, m| tkr(&acc, m)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert_eq!(tkr(&a, &b).unwrap().as_slice(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn block_order() {
        let a = Matrix::from_rows(&[vec![2.0, 3.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0, 10.0, 100.0]]).unwrap();
        assert_eq!(
            tkr(&a, &b).unwrap().as_slice(),
            &[2.0, 20.0, 200.0, 3.0, 30.0, 300.0]
        );
    }

    #[test]
    fn mismatch_and_arity_errors() {
        assert!(tkr(&Matrix::zeros(2, 1), &Matrix::zeros(3, 1)).is_err());
        assert!(tkr_multi(&[&Matrix::zeros(2, 1)]).is_err());
    }

    #[test]
    fn ones_columns_fold_to_ones() {
        let one = Matrix::new(4, 1, vec![1.0; 4]).unwrap();
        assert_eq!(tkr_multi(&[&one, &one, &one]).unwrap(), one);
    }
}
