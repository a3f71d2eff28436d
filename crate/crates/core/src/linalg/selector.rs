use crate::{Error, Matrix, Result};

/// Entries at or below this magnitude count as zero when deciding whether a
/// column is empty.
pub const ZERO_COLUMN_TOL: f64 = 1e-12;

/// The selector `H`: the identity columns kept at the nonzero columns of a
/// matrix with `source_cols` columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectorMatrix {
    source_cols: usize,
    kept: Vec<usize>,
}

impl SelectorMatrix {
    pub fn source_cols(&self) -> usize {
        self.source_cols
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn k(&self) -> usize {
        self.kept.len()
    }

    /// Dense `source_cols x k` 0/1 form.
    pub fn to_matrix(&self) -> Matrix {
        let mut h = Matrix::zeros(self.source_cols, self.kept.len());
        for (j, &c) in self.kept.iter().enumerate() {
            h[(c, j)] = 1.0;
        }
        h
    }

    /// `m · H`: keeps the selected columns of `m`.
    pub fn apply(&self, m: &Matrix) -> Result<Matrix> {
        if m.cols() != self.source_cols {
            return Err(Error::dims(format!(
                "selector expects {} columns, matrix has {}",
                self.source_cols,
                m.cols()
            )));
        }
        Ok(m.select_columns(&self.kept))
    }
}

/// Indices of the columns whose largest magnitude exceeds
/// [`ZERO_COLUMN_TOL`].
pub fn derive_selector(m: &Matrix) -> Result<SelectorMatrix> {
    let kept: Vec<usize> = (0..m.cols())
        .filter(|&j| m.column_max_abs(j) > ZERO_COLUMN_TOL)
        .collect();
    if kept.is_empty() {
        return Err(Error::invalid("every column is zero"));
    }
    Ok(SelectorMatrix {
        source_cols: m.cols(),
        kept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_zero_columns() {
        let m = Matrix::from_fn(3, 9, |i, j| if [2, 5, 7].contains(&j) { 0.0 } else { (i + j) as f64 + 1.0 });
        let h = derive_selector(&m).unwrap();
        assert_eq!(h.kept(), &[0, 1, 3, 4, 6, 8]);
        assert_eq!(h.apply(&m).unwrap(), m.matmul(&h.to_matrix()).unwrap());
    }

    #[test]
    fn all_nonzero_keeps_everything() {
        let m = Matrix::from_fn(2, 4, |_, _| 1.0);
        assert_eq!(derive_selector(&m).unwrap().kept(), &[0, 1, 2, 3]);
    }

    #[test]
    fn all_zero_is_an_error() {
        assert!(derive_selector(&Matrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn tiny_entries_count_as_zero() {
        let m = Matrix::from_rows(&[vec![1e-13, 1.0], vec![-1e-13, 0.0]]).unwrap();
        assert_eq!(derive_selector(&m).unwrap().kept(), &[1]);
    }
}
