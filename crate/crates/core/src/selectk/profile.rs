use super::Spectrum;
use crate::{Error, Result};

/// A tail whose spread is below this fraction of σ₁ has no further elbow.
const FLAT_TAIL_TOL: f64 = 1e-8;

/// Outcome of a profile-likelihood elbow search.
#[derive(Clone, Debug, PartialEq)]
pub struct ElbowEstimate {
    pub k_hat: usize,
    /// Which elbow `k_hat` is (1 = first).
    pub which_elbow: usize,
    /// Elbow positions found at each stage, as indices into the full spectrum.
    pub elbows: Vec<usize>,
    /// Scores of the final stage; entry `q − 1` is the split after `q` values
    /// of the stage's segment.
    pub profile: Vec<f64>,
}

/// Profile log-likelihood of every split of `x` into a head of `q` values
/// and a nonempty tail, each Gaussian with its own mean and a shared
/// maximum-likelihood variance.
fn split_scores(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let df = d as f64;
    let scale = x.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let floor = f64::EPSILON * scale * scale;
    (1..d)
        .map(|q| {
            let ss = sum_sq_dev(&x[..q]) + sum_sq_dev(&x[q..]);
            let mut var = (ss / df).max(floor);
            if var == 0.0 {
                var = 1.0;
            }
            -0.5 * df * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * ss / var
        })
        .collect()
}

fn sum_sq_dev(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean) * (v - mean)).sum()
}

/// First maximizer (smallest split) of the scores, 1-based.
fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best + 1
}

/// The `which`-th profile-likelihood elbow of `s`.
///
/// The first elbow maximizes the split likelihood over the whole sequence;
/// each later one is the first elbow of the values after the previous one.
/// Asking for an elbow past a tail that is too short or flat is an error.
pub fn profile_likelihood_elbow(s: &Spectrum, which: usize) -> Result<ElbowEstimate> {
    if which == 0 {
        return Err(Error::invalid("elbow index must be at least 1"));
    }
    let v = s.values();
    if v.len() < 3 {
        return Err(Error::invalid(format!(
            "profile likelihood needs at least 3 values, got {}",
            v.len()
        )));
    }
    let flat = FLAT_TAIL_TOL * v[0];
    let mut offset = 0;
    let mut elbows = Vec::with_capacity(which);
    let mut profile = Vec::new();
    for stage in 1..=which {
        let seg = &v[offset..];
        if stage > 1 {
            if seg.len() < 2 {
                return Err(Error::invalid(format!(
                    "no elbow {stage}: only {} value(s) after position {offset}",
                    seg.len()
                )));
            }
            let spread = seg[0] - seg[seg.len() - 1];
            if spread <= flat {
                return Err(Error::invalid(format!(
                    "no elbow {stage}: values after position {offset} are flat"
                )));
            }
        }
        profile = split_scores(seg);
        offset += argmax_first(&profile);
        elbows.push(offset);
    }
    Ok(ElbowEstimate {
        k_hat: offset,
        which_elbow: which,
        elbows,
        profile,
    })
}

/// The `which`-th elbow if it exists, else the latest earlier one that does.
pub fn estimate_k(s: &Spectrum, which: usize) -> Result<ElbowEstimate> {
    let mut w = which.max(1);
    loop {
        match profile_likelihood_elbow(s, w) {
            Ok(e) => return Ok(e),
            Err(e) if w == 1 => return Err(e),
            Err(_) => w -= 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::new(v.to_vec()).unwrap()
    }

    // Direct evaluation of the Gaussian log-likelihood with per-group means.
    fn oracle_score(x: &[f64], q: usize) -> f64 {
        let (a, b) = x.split_at(q);
        let ma = a.iter().sum::<f64>() / a.len() as f64;
        let mb = b.iter().sum::<f64>() / b.len() as f64;
        let ss: f64 = a.iter().map(|v| (v - ma).powi(2)).sum::<f64>()
            + b.iter().map(|v| (v - mb).powi(2)).sum::<f64>();
        let var = ss / x.len() as f64;
        if var == 0.0 {
            // a perfect split: the likelihood is unbounded
            return f64::INFINITY;
        }
        x.iter()
            .enumerate()
            .map(|(i, v)| {
                let m = if i < q { ma } else { mb };
                -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (v - m).powi(2) / (2.0 * var)
            })
            .sum()
    }

    fn oracle_argmax(x: &[f64]) -> usize {
        let mut best = (1, f64::NEG_INFINITY);
        for q in 1..x.len() {
            let s = oracle_score(x, q);
            if s > best.1 {
                best = (q, s);
            }
        }
        best.0
    }

    #[test]
    fn scores_match_direct_likelihood() {
        let x = [9.0, 7.5, 7.0, 3.0, 2.5, 1.0];
        let got = split_scores(&x);
        for q in 1..x.len() {
            assert!((got[q - 1] - oracle_score(&x, q)).abs() < 1e-9);
        }
    }

    #[test]
    fn first_elbow_example() {
        let x = [10.0, 10.0, 10.0, 1.0, 1.0, 1.0];
        // the q = 3 split has zero within-group variance
        assert_eq!(sum_sq_dev(&x[..3]) + sum_sq_dev(&x[3..]), 0.0);
        let e = profile_likelihood_elbow(&spec(&x), 1).unwrap();
        assert_eq!(e.k_hat, 3);
        assert_eq!(e.profile.len(), 5);
    }

    #[test]
    fn second_elbow_example() {
        let x = [100.0, 10.0, 10.0, 10.0, 1.0, 1.0, 1.0, 1.0];
        let first = oracle_argmax(&x);
        assert_eq!(first, 1);
        let second = first + oracle_argmax(&x[first..]);
        let e = profile_likelihood_elbow(&spec(&x), 2).unwrap();
        assert_eq!(e.k_hat, second);
        assert_eq!(e.k_hat, 4);
        assert_eq!(e.elbows, vec![1, 4]);
    }

    #[test]
    fn constant_spectrum_takes_smallest_split() {
        let e = profile_likelihood_elbow(&spec(&[1.0, 1.0, 1.0, 1.0]), 1).unwrap();
        assert_eq!(e.k_hat, 1);
        assert!(e.profile.iter().all(|&s| s == e.profile[0]));
        let z = profile_likelihood_elbow(&spec(&[0.0, 0.0, 0.0]), 1).unwrap();
        assert_eq!(z.k_hat, 1);
    }

    #[test]
    fn short_or_flat_tail_is_an_error() {
        assert!(profile_likelihood_elbow(&spec(&[3.0, 2.0]), 1).is_err());
        assert!(profile_likelihood_elbow(&spec(&[3.0, 2.0, 1.0]), 0).is_err());
        // first elbow leaves a tail of exact zeros
        let s = spec(&[5.0, 5.0, 5.0, 0.0, 0.0, 0.0]);
        assert_eq!(profile_likelihood_elbow(&s, 1).unwrap().k_hat, 3);
        assert!(profile_likelihood_elbow(&s, 2).is_err());
        let fallback = estimate_k(&s, 2).unwrap();
        assert_eq!((fallback.k_hat, fallback.which_elbow), (3, 1));
    }

    #[test]
    fn zero_tail_falls_back_to_first_elbow() {
        let fig1 = [18.7617, 13.1149, 12.8452, 12.4900, 12.4499, 0.0, 0.0, 0.0, 0.0, 0.0];
        let e = estimate_k(&spec(&fig1), 2).unwrap();
        assert_eq!(e.k_hat, 5);
        assert_eq!(e.which_elbow, 1);
    }
}
