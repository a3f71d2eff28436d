use crate::{Error, Matrix, Result};

/// Hard clustering of `n` items into `k` nonempty groups.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    labels: Vec<usize>,
    k: usize,
}

impl Assignment {
    /// Checks that every label is below `k` and every group is occupied.
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("assignment has no items"));
        }
        if k == 0 {
            return Err(Error::invalid("assignment needs at least one cluster"));
        }
        let mut sizes = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            if l >= k {
                return Err(Error::invalid(format!(
                    "label {l} of item {i} is out of range for {k} clusters"
                )));
            }
            sizes[l] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::invalid(format!("cluster {empty} of {k} is empty")));
        }
        Ok(Assignment { labels, k })
    }

    /// Infers `k` as one past the largest label.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        Assignment::new(labels, k)
    }

    /// Renumbers arbitrary labels by order of first appearance.
    ///
    /// # Panics
    /// If `raw` is empty.
    pub fn relabel_by_first_appearance(raw: &[usize]) -> Self {
        assert!(!raw.is_empty(), "assignment has no items");
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        Assignment { labels, k: map.len() }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// The n x k clustering matrix: one 1 per row.
    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n(), self.k);
        for (i, &l) in self.labels.iter().enumerate() {
            m[(i, l)] = 1.0;
        }
        m
    }

    /// Items reordered so that item `i` of the result is item `perm[i]` here.
    pub fn permute_items(&self, perm: &[usize]) -> Assignment {
        let labels = perm.iter().map(|&p| self.labels[p]).collect();
        Assignment { labels, k: self.k }
    }

    /// Cluster names exchanged: label `l` becomes `relabel[l]`.
    pub fn rename_clusters(&self, relabel: &[usize]) -> Result<Assignment> {
        if relabel.len() != self.k {
            return Err(Error::dims(format!(
                "relabeling has {} entries for {} clusters",
                relabel.len(),
                self.k
            )));
        }
        Assignment::new(self.labels.iter().map(|&l| relabel[l]).collect(), self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Assignment::new(vec![0, 1, 1], 2).is_ok());
        assert!(Assignment::new(vec![0, 2, 2], 3).is_err());
        assert!(Assignment::new(vec![0, 3], 3).is_err());
        assert!(Assignment::new(vec![], 1).is_err());
    }

    #[test]
    fn first_appearance_order() {
        let a = Assignment::relabel_by_first_appearance(&[7, 7, 3, 9, 3]);
        assert_eq!(a.labels(), &[0, 0, 1, 2, 1]);
        assert_eq!(a.k(), 3);
    }

    #[test]
    fn matrix_has_one_per_row() {
        let m = Assignment::new(vec![1, 0, 1], 2).unwrap().to_matrix();
        assert_eq!(m.as_slice(), &[0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
    }
}
