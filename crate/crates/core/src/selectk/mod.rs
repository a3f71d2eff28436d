//! Estimating the number of joint clusters.
//!
//! Three estimators are offered: the position of the largest drop in a
//! singular-value sequence, the profile-likelihood scree elbow (optionally
//! the second or later elbow, found by recursing on the tail), and the
//! largest jump in complete-linkage merge heights.

mod profile;

pub use profile::{estimate_k, profile_likelihood_elbow, ElbowEstimate};

use crate::clustering::Dendrogram;
use crate::{Error, Result};

/// Slack allowed when checking that a spectrum is descending.
pub const SPECTRUM_SLACK: f64 = 1e-12;

/// Descending, nonnegative singular values.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("spectrum is empty"));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < -SPECTRUM_SLACK {
                return Err(Error::invalid(format!(
                    "spectrum value {} at position {} is not a finite nonnegative number",
                    v,
                    i + 1
                )));
            }
        }
        if let Some(i) = values.windows(2).position(|w| w[0] - w[1] < -SPECTRUM_SLACK) {
            return Err(Error::invalid(format!(
                "spectrum increases between positions {} and {}",
                i + 1,
                i + 2
            )));
        }
        Ok(Spectrum { values })
    }

    /// Values straight from a sorted decomposition; tiny negatives clamp to 0.
    pub(crate) fn from_svd(values: Vec<f64>) -> Self {
        debug_assert!(values.windows(2).all(|w| w[0] >= w[1]));
        Spectrum {
            values: values.into_iter().map(|v| v.max(0.0)).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `values[i] − values[i+1]`.
    pub fn gaps(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[0] - w[1]).collect()
    }

    /// The i-th value (0-based), or 0 past the end.
    pub fn value_or_zero(&self, i: usize) -> f64 {
        self.values.get(i).copied().unwrap_or(0.0)
    }

    /// Extended with trailing zeros up to `len` values.
    pub fn padded(&self, len: usize) -> Spectrum {
        let mut values = self.values.clone();
        values.resize(len.max(values.len()), 0.0);
        Spectrum { values }
    }

    /// Number of values above `rel_tol · σ₁`.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let cut = rel_tol * self.values[0];
        self.values.iter().filter(|&&v| v > cut).count()
    }

    pub fn scaled(&self, c: f64) -> Result<Spectrum> {
        if !(c > 0.0) {
            return Err(Error::invalid(format!("scale must be positive, got {c}")));
        }
        Spectrum::new(self.values.iter().map(|v| v * c).collect())
    }
}

/// 1-based position of the largest drop `σ_i − σ_{i+1}`; ties go to the
/// smallest position.
pub fn largest_gap(s: &Spectrum) -> Result<usize> {
    if s.len() < 2 {
        return Err(Error::invalid("largest gap needs at least 2 values"));
    }
    let gaps = s.gaps();
    let mut best = 0;
    for (i, &g) in gaps.iter().enumerate().skip(1) {
        if g > gaps[best] {
            best = i;
        }
    }
    Ok(best + 1)
}

/// Cluster count read off the largest jump in merge heights.
#[derive(Clone, Debug, PartialEq)]
pub struct MergeHeightElbow {
    pub k_hat: usize,
    /// The step `t*` maximizing `h(t+1) − h(t)`.
    pub step: usize,
    pub gap: f64,
    /// All heights equal; the estimate carries no information.
    pub low_confidence: bool,
}

/// `K̂ = n − t* + 1` where `t*` maximizes `h(t+1) − h(t)` over merge steps
/// `t = 2..n−1`; ties go to the largest `t`.
pub fn merge_height_elbow(d: &Dendrogram) -> Result<MergeHeightElbow> {
    let n = d.n();
    if n < 3 {
        return Err(Error::invalid(format!(
            "merge-height elbow needs at least 3 items, got {n}"
        )));
    }
    // merges()[m] is step t = m + 2
    let h: Vec<f64> = d.merges().iter().map(|m| m.height).collect();
    let mut best_m = 0;
    let mut best_gap = f64::NEG_INFINITY;
    for m in 0..h.len() - 1 {
        let gap = h[m + 1] - h[m];
        if gap >= best_gap {
            best_gap = gap;
            best_m = m;
        }
    }
    let step = best_m + 2;
    let top = h.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    Ok(MergeHeightElbow {
        k_hat: n - step + 1,
        step,
        gap: best_gap,
        low_confidence: best_gap <= 1e-12 * top.max(f64::MIN_POSITIVE),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::hierarchical_complete;
    use crate::Matrix;

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::new(v.to_vec()).unwrap()
    }

    #[test]
    fn spectrum_validation() {
        assert!(Spectrum::new(vec![]).is_err());
        assert!(Spectrum::new(vec![1.0, 2.0]).is_err());
        assert!(Spectrum::new(vec![1.0, -1.0]).is_err());
        assert!(Spectrum::new(vec![1.0, 1.0 + 1e-13, 0.0]).is_ok());
    }

    #[test]
    fn gap_examples() {
        assert_eq!(largest_gap(&spec(&[3.0, 3.0, 3.0, 0.0, 0.0])).unwrap(), 3);
        assert_eq!(largest_gap(&spec(&[5.0, 4.0, 3.0, 2.0, 1.0])).unwrap(), 1);
        let fig1 = [18.7617, 13.1149, 12.8452, 12.4900, 12.4499, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(largest_gap(&spec(&fig1)).unwrap(), 5);
        assert!(largest_gap(&spec(&[1.0])).is_err());
    }

    #[test]
    fn merge_height_two_pairs() {
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![10.0, 0.0],
            vec![10.1, 0.0],
        ])
        .unwrap();
        let d = hierarchical_complete(&x).unwrap();
        let e = merge_height_elbow(&d).unwrap();
        assert_eq!(e.k_hat, 2);
        assert!(!e.low_confidence);
    }

    #[test]
    fn merge_height_duplicate_groups() {
        // 3 groups of 10 exact duplicates at the vertices of a simplex
        let k = 3;
        let x = Matrix::from_fn(30, k, |i, j| if i % k == j { 1.0 } else { 0.0 });
        let d = hierarchical_complete(&x).unwrap();
        for m in &d.merges()[..30 - k] {
            assert_eq!(m.height, 0.0);
        }
        assert_eq!(merge_height_elbow(&d).unwrap().k_hat, k);
    }

    #[test]
    fn merge_height_flat_is_low_confidence() {
        let x = Matrix::zeros(5, 2);
        let d = hierarchical_complete(&x).unwrap();
        let e = merge_height_elbow(&d).unwrap();
        assert!(e.low_confidence);
        assert_eq!(e.k_hat, 2);
    }

    #[test]
    fn merge_height_needs_three_items() {
        let d = hierarchical_complete(&Matrix::zeros(2, 1)).unwrap();
        assert!(merge_height_elbow(&d).is_err());
    }
}
