//! Partition agreement: adjusted Rand index, misclustering count under the
//! best label matching, and absolute error of a cluster-count estimate.

use crate::{Assignment, Error, Result};

/// Cross-tabulation of two labelings of the same items.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    n: u64,
}

impl ContingencyTable {
    pub fn new(a: &Assignment, b: &Assignment) -> Result<Self> {
        if a.n() != b.n() {
            return Err(Error::dims(format!(
                "labelings cover {} and {} items",
                a.n(),
                b.n()
            )));
        }
        let (rows, cols) = (a.k(), b.k());
        let mut counts = vec![0u64; rows * cols];
        for (&i, &j) in a.labels().iter().zip(b.labels()) {
            counts[i * cols + j] += 1;
        }
        Ok(ContingencyTable {
            rows,
            cols,
            counts,
            n: a.n() as u64,
        })
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.cols + j]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }
}

fn pairs(x: u64) -> i128 {
    let x = x as i128;
    x * (x - 1) / 2
}

/// Hubert-Arabie adjusted Rand index.
///
/// Pair counts are kept as exact integers and the ratio is formed by a
/// single division. Two labelings with no room for disagreement (both all
/// singletons, or both one cluster) score 1.
pub fn adjusted_rand_index(a: &Assignment, b: &Assignment) -> Result<f64> {
    let t = ContingencyTable::new(a, b)?;
    if t.n() < 2 {
        return Err(Error::invalid("adjusted Rand index needs at least 2 items"));
    }
    let index: i128 = t.counts.iter().map(|&c| pairs(c)).sum();
    let sa: i128 = t.row_sums().into_iter().map(pairs).sum();
    let sb: i128 = t.col_sums().into_iter().map(pairs).sum();
    let total = pairs(t.n());
    let num = 2 * total * index - 2 * sa * sb;
    let den = total * (sa + sb) - 2 * sa * sb;
    if den == 0 {
        return Ok(1.0);
    }
    Ok(num as f64 / den as f64)
}

/// Fewest items that disagree after the best one-to-one matching of labels.
///
/// The smaller label set is padded with empty classes, so the count is
/// defined for any pair of cluster numbers.
pub fn misclustering_count(truth: &Assignment, est: &Assignment) -> Result<usize> {
    let t = ContingencyTable::new(truth, est)?;
    let m = t.rows.max(t.cols);
    let mut weight = vec![0i64; m * m];
    for i in 0..t.rows {
        for j in 0..t.cols {
            weight[i * m + j] = t.get(i, j) as i64;
        }
    }
    let matched = max_weight_matching(&weight, m);
    Ok(t.n() as usize - matched as usize)
}

/// `|k_hat − k_true|`.
pub fn abs_error_k(k_hat: usize, k_true: usize) -> usize {
    k_hat.abs_diff(k_true)
}

/// Total weight of a maximum-weight perfect matching on an `m x m` table
/// (Hungarian method with potentials, O(m³)).
fn max_weight_matching(weight: &[i64], m: usize) -> i64 {
    let top = weight.iter().copied().max().unwrap_or(0);
    // minimize top - w; rows and columns 1-based, 0 is the sentinel
    let cost = |i: usize, j: usize| top - weight[(i - 1) * m + (j - 1)];
    let mut u = vec![0i64; m + 1];
    let mut v = vec![0i64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=m {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=m).map(|j| weight[(p[j] - 1) * m + (j - 1)]).sum()
}
