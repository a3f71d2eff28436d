use rand::Rng;
use rayon::prelude::*;

use super::sq_dist;
use crate::rng::{self, StreamRng};
use crate::{Assignment, Error, Matrix, Result};

/// Restart and iteration budget for [`kmeans`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 10,
            max_iter: 300,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KMeansResult {
    pub assignment: Assignment,
    pub centers: Matrix,
    /// Sum of squared distances to the assigned centers.
    pub objective: f64,
    pub iterations: usize,
    pub restarts_used: usize,
    /// Objective after each Lloyd iteration of the winning restart.
    pub history: Vec<f64>,
}

/// Best of `restarts` runs of k-means++ seeding followed by Lloyd iterations.
///
/// Restart `r` draws from stream `r` of `seed`, so results do not depend on
/// thread scheduling. Ties in objective go to the lowest restart.
pub fn kmeans(
    x: &Matrix,
    k: usize,
    restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<KMeansResult> {
    let n = x.rows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "cannot form {k} clusters from {n} points"
        )));
    }
    if restarts == 0 {
        return Err(Error::invalid("kmeans needs at least one restart"));
    }
    let runs: Vec<Run> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, r as u64);
            single_run(x, k, max_iter, &mut rng)
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.objective < a.objective { b } else { a })
        .expect("at least one restart");
    Ok(KMeansResult {
        assignment: Assignment::new(best.labels, k)?,
        centers: best.centers,
        objective: best.objective,
        iterations: best.history.len(),
        restarts_used: restarts,
        history: best.history,
    })
}

pub(crate) struct Run {
    pub labels: Vec<usize>,
    pub centers: Matrix,
    pub objective: f64,
    pub history: Vec<f64>,
}

pub(crate) fn single_run(x: &Matrix, k: usize, max_iter: usize, rng: &mut StreamRng) -> Run {
    let mut centers = seed_plus_plus(x, k, rng);
    let mut labels = assign(x, &centers);
    repair_empty(x, &mut labels, &mut centers);
    let mut history = Vec::new();
    let mut objective;
    loop {
        centers = means(x, &labels, k);
        objective = total_cost(x, &labels, &centers);
        history.push(objective);
        if history.len() >= max_iter.max(1) {
            break;
        }
        let mut next = assign(x, &centers);
        let mut probe = centers.clone();
        repair_empty(x, &mut next, &mut probe);
        if next == labels {
            break;
        }
        labels = next;
    }
    Run {
        labels,
        centers,
        objective,
        history,
    }
}

fn seed_plus_plus(x: &Matrix, k: usize, rng: &mut StreamRng) -> Matrix {
    let n = x.rows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let last = d2.iter().rposition(|&w| w > 0.0).expect("positive total");
            d2.iter()
                .position(|&w| {
                    acc += w;
                    acc > target
                })
                .unwrap_or(last)
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), x.row(next)));
        }
    }
    x.select_rows(&chosen)
}

/// Nearest center per point; ties go to the lowest center index.
fn assign(x: &Matrix, centers: &Matrix) -> Vec<usize> {
    (0..x.rows())
        .map(|i| {
            let p = x.row(i);
            let mut best = (0, f64::INFINITY);
            for c in 0..centers.rows() {
                let d = sq_dist(p, centers.row(c));
                if d < best.1 {
                    best = (c, d);
                }
            }
            best.0
        })
        .collect()
}

/// Moves into each empty cluster the point farthest from its own center,
/// taken from a cluster with at least two members.
fn repair_empty(x: &Matrix, labels: &mut [usize], centers: &mut Matrix) {
    let k = centers.rows();
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for e in 0..k {
        if sizes[e] > 0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, &l) in labels.iter().enumerate() {
            if sizes[l] < 2 {
                continue;
            }
            let d = sq_dist(x.row(i), centers.row(l));
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        let (i, _) = best.expect("k <= n leaves a donor cluster");
        sizes[labels[i]] -= 1;
        labels[i] = e;
        sizes[e] = 1;
        centers.row_mut(e).copy_from_slice(x.row(i));
    }
}

fn means(x: &Matrix, labels: &[usize], k: usize) -> Matrix {
    let d = x.cols();
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, v) in sums[l * d..(l + 1) * d].iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    for (l, &c) in counts.iter().enumerate() {
        debug_assert!(c > 0);
        sums[l * d..(l + 1) * d].iter_mut().for_each(|s| *s /= c as f64);
    }
    Matrix::new(k, d, sums).expect("finite means")
}

fn total_cost(x: &Matrix, labels: &[usize], centers: &Matrix) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(x.row(i), centers.row(l)))
        .sum()
}
