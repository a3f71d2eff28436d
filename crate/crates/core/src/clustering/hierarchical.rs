use super::sq_dist;
use crate::{Assignment, Error, Matrix, Result};

/// One agglomeration step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Merge {
    /// Step number `t`, running from 2 to n.
    pub step: usize,
    /// Smaller of the two merged cluster ids.
    pub left: usize,
    pub right: usize,
    /// Leaves are `0..n`; the cluster formed at step `t` is `n + t − 2`.
    pub new_id: usize,
    /// Diameter of the new cluster.
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    /// Checks ids, step numbers and height monotonicity.
    pub fn new(n: usize, merges: Vec<Merge>) -> Result<Self> {
        if n < 2 || merges.len() != n - 1 {
            return Err(Error::invalid(format!(
                "a dendrogram over {n} items needs {} merges, got {}",
                n.saturating_sub(1),
                merges.len()
            )));
        }
        let mut used = vec![false; 2 * n - 1];
        for (m, merge) in merges.iter().enumerate() {
            let id = n + m;
            let ok = merge.step == m + 2
                && merge.new_id == id
                && merge.left < merge.right
                && merge.right < id
                && !used[merge.left]
                && !used[merge.right]
                && merge.height.is_finite()
                && merge.height >= 0.0;
            if !ok {
                return Err(Error::invalid(format!("malformed merge at step {}", m + 2)));
            }
            used[merge.left] = true;
            used[merge.right] = true;
            if m > 0 && merge.height < merges[m - 1].height {
                return Err(Error::invalid(format!(
                    "merge heights decrease at step {}",
                    m + 2
                )));
            }
        }
        Ok(Dendrogram { n, merges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }
}

fn cidx(i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (j, i) } else { (i, j) };
    a * (a - 1) / 2 + b
}

/// Complete-linkage agglomerative clustering of the rows of `x`.
///
/// Each step merges the pair of clusters with the smallest maximum
/// pairwise distance; ties go to the lexicographically smallest pair of
/// cluster ids. Nearest neighbours are cached per cluster and refreshed
/// only when they pointed at one of the merged clusters.
pub fn hierarchical_complete(x: &Matrix) -> Result<Dendrogram> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::invalid(format!(
            "hierarchical clustering needs at least 2 items, got {n}"
        )));
    }
    let mut dist = vec![0.0f64; n * (n - 1) / 2];
    for i in 1..n {
        for j in 0..i {
            dist[cidx(i, j)] = sq_dist(x.row(i), x.row(j)).sqrt();
        }
    }
    // slot s holds cluster id[s]; a merged cluster keeps the smaller slot
    let mut id: Vec<usize> = (0..n).collect();
    let mut active = vec![true; n];
    let mut diam = vec![0.0f64; n];
    let mut nn = vec![(f64::INFINITY, usize::MAX); n];

    let key = |d: f64, a: usize, b: usize| (d, a.min(b), a.max(b));
    let better = |x: (f64, usize, usize), y: (f64, usize, usize)| {
        x.0 < y.0 || (x.0 == y.0 && (x.1, x.2) < (y.1, y.2))
    };
    let nearest = |s: usize, dist: &[f64], id: &[usize], active: &[bool]| {
        let mut best = (f64::INFINITY, usize::MAX);
        let mut best_key = (f64::INFINITY, usize::MAX, usize::MAX);
        for t in 0..n {
            if t == s || !active[t] {
                continue;
            }
            let d = dist[cidx(s, t)];
            let k = key(d, id[s], id[t]);
            if better(k, best_key) {
                best_key = k;
                best = (d, t);
            }
        }
        best
    };
    for (s, slot) in nn.iter_mut().enumerate() {
        *slot = nearest(s, &dist, &id, &active);
    }

    let mut merges = Vec::with_capacity(n - 1);
    for m in 0..n - 1 {
        let mut a = usize::MAX;
        let mut best_key = (f64::INFINITY, usize::MAX, usize::MAX);
        for s in 0..n {
            if !active[s] {
                continue;
            }
            let k = key(nn[s].0, id[s], id[nn[s].1]);
            if better(k, best_key) {
                best_key = k;
                a = s;
            }
        }
        let b = nn[a].1;
        let (a, b) = (a.min(b), a.max(b));
        let d_ab = dist[cidx(a, b)];
        let height = diam[a].max(diam[b]).max(d_ab);
        let new_id = n + m;
        merges.push(Merge {
            step: m + 2,
            left: id[a].min(id[b]),
            right: id[a].max(id[b]),
            new_id,
            height,
        });
        if let Some(prev) = merges.len().checked_sub(2).map(|p| merges[p].height) {
            assert!(height >= prev, "complete-linkage heights must not decrease");
        }
        active[b] = false;
        for c in 0..n {
            if active[c] && c != a {
                let i = cidx(a, c);
                dist[i] = dist[i].max(dist[cidx(b, c)]);
            }
        }
        id[a] = new_id;
        diam[a] = height;
        if m == n - 2 {
            break;
        }
        nn[a] = nearest(a, &dist, &id, &active);
        for c in 0..n {
            if active[c] && c != a && (nn[c].1 == a || nn[c].1 == b) {
                nn[c] = nearest(c, &dist, &id, &active);
            }
        }
    }
    Dendrogram::new(n, merges)
}

/// The partition left after the first `n − k` merges, labelled by order of
/// first appearance.
pub fn cut_dendrogram(d: &Dendrogram, k: usize) -> Result<Assignment> {
    let n = d.n();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "cannot cut {n} items into {k} clusters"
        )));
    }
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    for merge in &d.merges()[..n - k] {
        parent[merge.left] = merge.new_id;
        parent[merge.right] = merge.new_id;
    }
    let root = |mut i: usize| {
        while parent[i] != i {
            i = parent[i];
        }
        i
    };
    let roots: Vec<usize> = (0..n).map(root).collect();
    Ok(Assignment::relabel_by_first_appearance(&roots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn two_pairs() -> Matrix {
        Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.5, 0.0],
            vec![10.0, 0.0],
            vec![10.5, 0.0],
        ])
        .unwrap()
    }

    // Rescans every pair of current clusters at every step.
    fn brute_force(x: &Matrix) -> Vec<(usize, usize, f64)> {
        let n = x.rows();
        let d = |i: usize, j: usize| sq_dist(x.row(i), x.row(j)).sqrt();
        let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
        let mut out = Vec::new();
        for m in 0..n - 1 {
            let mut best: Option<(f64, usize, usize, usize, usize)> = None;
            for a in 0..clusters.len() {
                for b in a + 1..clusters.len() {
                    let mut link = 0.0f64;
                    for &i in &clusters[a].1 {
                        for &j in &clusters[b].1 {
                            link = link.max(d(i, j));
                        }
                    }
                    let (ia, ib) = (clusters[a].0, clusters[b].0);
                    let cand = (link, ia.min(ib), ia.max(ib), a, b);
                    let take = match best {
                        None => true,
                        Some(bst) => (cand.0, cand.1, cand.2) < (bst.0, bst.1, bst.2),
                    };
                    if take {
                        best = Some(cand);
                    }
                }
            }
            let (_, lo, hi, a, b) = best.unwrap();
            let mut members = clusters[a].1.clone();
            members.extend(&clusters[b].1);
            let mut diam = 0.0f64;
            for &i in &members {
                for &j in &members {
                    diam = diam.max(d(i, j));
                }
            }
            out.push((lo, hi, diam));
            clusters.remove(b);
            clusters.remove(a);
            clusters.push((n + m, members));
        }
        out
    }

    #[test]
    fn two_pairs_merge_order() {
        let d = hierarchical_complete(&two_pairs()).unwrap();
        let m = d.merges();
        assert_eq!((m[0].left, m[0].right), (0, 1));
        assert_eq!(m[0].height, 0.5);
        assert_eq!((m[1].left, m[1].right), (2, 3));
        assert_eq!(m[1].height, 0.5);
        assert_eq!((m[2].left, m[2].right, m[2].new_id), (4, 5, 6));
        assert!(m[2].height >= 10.0);
    }

    #[test]
    fn matches_brute_force() {
        for seed in 0..30u64 {
            let mut g = rng::stream(seed, 0);
            let n = 8 + (seed as usize % 5);
            let x = Matrix::from_fn(n, 2, |_, _| g.random_range(0.0..1.0));
            let got: Vec<_> = hierarchical_complete(&x)
                .unwrap()
                .merges()
                .iter()
                .map(|m| (m.left, m.right, m.height))
                .collect();
            assert_eq!(got, brute_force(&x), "seed {seed}");
        }
    }

    #[test]
    fn matches_brute_force_with_ties() {
        // integer grid: many equal distances
        let x = Matrix::from_fn(9, 2, |i, j| if j == 0 { (i % 3) as f64 } else { (i / 3) as f64 });
        let got: Vec<_> = hierarchical_complete(&x)
            .unwrap()
            .merges()
            .iter()
            .map(|m| (m.left, m.right, m.height))
            .collect();
        assert_eq!(got, brute_force(&x));
    }

    #[test]
    fn duplicates_merge_at_zero() {
        let x = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0], vec![5.0]]).unwrap();
        let d = hierarchical_complete(&x).unwrap();
        assert_eq!(d.heights(), vec![0.0, 0.0, 4.0]);
    }

    #[test]
    fn needs_two_items() {
        assert!(hierarchical_complete(&Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn cuts() {
        let d = hierarchical_complete(&two_pairs()).unwrap();
        assert_eq!(cut_dendrogram(&d, 4).unwrap().labels(), &[0, 1, 2, 3]);
        assert_eq!(cut_dendrogram(&d, 1).unwrap().labels(), &[0, 0, 0, 0]);
        assert_eq!(cut_dendrogram(&d, 2).unwrap().labels(), &[0, 0, 1, 1]);
        assert!(cut_dendrogram(&d, 0).is_err());
        assert!(cut_dendrogram(&d, 5).is_err());
    }

    #[test]
    fn validation_rejects_bad_merges() {
        let good = Merge { step: 2, left: 0, right: 1, new_id: 2, height: 1.0 };
        assert!(Dendrogram::new(2, vec![good]).is_ok());
        assert!(Dendrogram::new(2, vec![Merge { new_id: 3, ..good }]).is_err());
        assert!(Dendrogram::new(3, vec![good]).is_err());
        let second = Merge { step: 3, left: 2, right: 2, new_id: 4, height: 2.0 };
        assert!(Dendrogram::new(3, vec![good, second]).is_err());
    }
}
