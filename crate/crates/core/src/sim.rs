//! Gaussian-mixture simulation study.
//!
//! A run draws a planted joint clustering over a `K₁ x K₂` grid of view
//! clusters, generates one Gaussian data matrix per view, turns each into
//! a view input (hard labels, singular vectors, or scaled singular
//! vectors), runs a joint method and scores it against the truth.
//!
//! Everything is a pure function of the configuration: the data of rep
//! `r` depend only on the seed, the data parameters and `r`, so methods
//! and input kinds sharing those are compared on identical datasets.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::{kmeans, KMeansConfig};
use crate::joint::{self, JointOptions, Method, ProjectionMatrix, ViewInput};
use crate::linalg::svd_k;
use crate::metrics::{abs_error_k, adjusted_rand_index};
use crate::rng::{self, StreamRng};
use crate::{Assignment, Error, Matrix, Result};

/// Cell sets failing the coverage requirement are redrawn this many times
/// before a covering set is built directly.
pub const MAX_COVERAGE_ATTEMPTS: usize = 1000;

/// What each view contributes to the joint method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InputKind {
    /// k-means labels of the view's leading singular vectors.
    #[serde(alias = "z")]
    Z,
    /// The view's leading left singular vectors.
    #[serde(alias = "u")]
    U,
    /// Leading left singular vectors scaled by root singular values.
    #[serde(alias = "x")]
    X,
}

impl InputKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            InputKind::Z => "Z",
            InputKind::U => "U",
            InputKind::X => "X",
        }
    }
}

impl fmt::Display for InputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InputKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z" | "z" => Ok(InputKind::Z),
            "U" | "u" => Ok(InputKind::U),
            "X" | "x" => Ok(InputKind::X),
            _ => Err(Error::invalid(format!("unknown input kind '{s}'"))),
        }
    }
}

fn default_n() -> usize {
    1000
}
fn default_reps() -> usize {
    100
}
fn default_which_elbow() -> usize {
    2
}
fn default_input_kind() -> InputKind {
    InputKind::U
}
fn default_method() -> Method {
    Method::Krafty
}

/// One cell of an experiment grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    pub p: usize,
    /// Within-cluster variance; zero gives exact cluster centers.
    pub sigma2: f64,
    pub k1: usize,
    pub k2: usize,
    /// Number of joint clusters.
    pub k: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_input_kind")]
    pub input_kind: InputKind,
    #[serde(default = "default_method")]
    pub method: Method,
    /// Hand the method the true `k` instead of estimating it.
    #[serde(default)]
    pub k_known: bool,
    #[serde(default = "default_which_elbow")]
    pub which_elbow: usize,
}

impl SimConfig {
    /// Checks every field, naming the first offending one.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::invalid(format!("field `{field}`: {msg}")));
        if self.k1 == 0 {
            return bad("k1", "must be at least 1".into());
        }
        if self.k2 == 0 {
            return bad("k2", "must be at least 1".into());
        }
        let lo = self.k1.max(self.k2);
        let hi = self.k1 * self.k2;
        if self.k < lo || self.k > hi {
            return bad("k", format!("{} is outside {lo}..={hi} for k1 = {}, k2 = {}", self.k, self.k1, self.k2));
        }
        if self.n < self.k.max(2) {
            return bad("n", format!("{} items cannot hold {} clusters", self.n, self.k));
        }
        if self.p == 0 {
            return bad("p", "must be at least 1".into());
        }
        if !self.sigma2.is_finite() || self.sigma2 < 0.0 {
            return bad("sigma2", format!("{} is not a finite nonnegative variance", self.sigma2));
        }
        if self.reps == 0 {
            return bad("reps", "must be at least 1".into());
        }
        if self.which_elbow == 0 {
            return bad("which_elbow", "elbows are counted from 1".into());
        }
        Ok(())
    }

    /// Canonical `key=value` lines; the basis of [`SimConfig::hash`].
    pub fn canonical_text(&self) -> String {
        format!(
            "n={}\np={}\nsigma2={:?}\nk1={}\nk2={}\nk={}\nreps={}\nseed={}\ninput_kind={}\nmethod={}\nk_known={}\nwhich_elbow={}\n",
            self.n,
            self.p,
            self.sigma2,
            self.k1,
            self.k2,
            self.k,
            self.reps,
            self.seed,
            self.input_kind,
            self.method.as_str(),
            self.k_known,
            self.which_elbow
        )
    }

    /// First 16 hex digits of the SHA-256 of [`SimConfig::canonical_text`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    /// Seed of the dataset for `rep`; independent of method and input kind.
    pub fn data_seed(&self, rep: usize) -> u64 {
        rng::derive_seed(
            self.seed,
            &[
                self.n as u64,
                self.p as u64,
                self.sigma2.to_bits(),
                self.k1 as u64,
                self.k2 as u64,
                self.k as u64,
                rep as u64,
            ],
        )
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    run: Vec<SimConfig>,
}

/// Parses a TOML grid: an array of `[[run]]` tables with the
/// [`SimConfig`] fields. `n`, `reps`, `seed`, `input_kind`, `method`,
/// `k_known` and `which_elbow` may be omitted.
pub fn parse_grid(text: &str) -> Result<Vec<SimConfig>> {
    let grid: GridFile =
        toml::from_str(text).map_err(|e| Error::invalid(format!("grid config: {}", e.message())))?;
    if grid.run.is_empty() {
        return Err(Error::invalid("grid config has no [[run]] entries"));
    }
    validate_grid(&grid.run)?;
    Ok(grid.run)
}

pub fn load_grid(path: &Path) -> Result<Vec<SimConfig>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_grid(&text)
}

pub fn validate_grid(grid: &[SimConfig]) -> Result<()> {
    for (i, cfg) in grid.iter().enumerate() {
        cfg.validate()
            .map_err(|e| Error::invalid(format!("run {i}: {}", strip_prefix(&e))))?;
    }
    Ok(())
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::InvalidInput(m) => m.clone(),
        other => other.to_string(),
    }
}

/// A sampled joint clustering and its two view projections.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedStructure {
    pub joint: Assignment,
    pub proj1: ProjectionMatrix,
    pub proj2: ProjectionMatrix,
    /// Grid cell `(k₁, k₂)` of each joint cluster, sorted.
    pub cells: Vec<(usize, usize)>,
}

impl PlantedStructure {
    fn from_cells(joint: Assignment, cells: Vec<(usize, usize)>, k1: usize, k2: usize) -> Result<Self> {
        let proj1 = ProjectionMatrix::new(cells.iter().map(|c| c.0).collect(), k1)?;
        let proj2 = ProjectionMatrix::new(cells.iter().map(|c| c.1).collect(), k2)?;
        Ok(PlantedStructure {
            joint,
            proj1,
            proj2,
            cells,
        })
    }

    pub fn view1(&self) -> Assignment {
        joint::project_assignment(&self.joint, &self.proj1).expect("projection built from the same cells")
    }

    pub fn view2(&self) -> Assignment {
        joint::project_assignment(&self.joint, &self.proj2).expect("projection built from the same cells")
    }
}

fn check_grid_k(k1: usize, k2: usize, k: usize, n: usize) -> Result<()> {
    if k1 == 0 || k2 == 0 {
        return Err(Error::invalid("view cluster counts must be at least 1"));
    }
    if k > k1 * k2 {
        return Err(Error::invalid(format!("k = {k} exceeds the {k1}x{k2} grid")));
    }
    if k < k1.max(k2) {
        return Err(Error::invalid(format!(
            "k = {k} cells cannot cover a {k1}x{k2} grid's rows and columns"
        )));
    }
    if n < k {
        return Err(Error::invalid(format!("{n} items cannot fill {k} clusters")));
    }
    Ok(())
}

fn covers(cells: &[(usize, usize)], k1: usize, k2: usize) -> bool {
    let mut rows = vec![false; k1];
    let mut cols = vec![false; k2];
    for &(a, b) in cells {
        rows[a] = true;
        cols[b] = true;
    }
    rows.iter().all(|&x| x) && cols.iter().all(|&x| x)
}

fn sample_cells(k1: usize, k2: usize, k: usize, rng: &mut StreamRng) -> Vec<(usize, usize)> {
    let grid = k1 * k2;
    for _ in 0..MAX_COVERAGE_ATTEMPTS {
        let cells: Vec<(usize, usize)> = rand::seq::index::sample(rng, grid, k)
            .into_iter()
            .map(|c| (c / k2, c % k2))
            .collect();
        if covers(&cells, k1, k2) {
            return cells;
        }
    }
    // diagonal through shuffled rows and columns, then random extra cells
    let mut rows: Vec<usize> = (0..k1).collect();
    let mut cols: Vec<usize> = (0..k2).collect();
    rows.shuffle(rng);
    cols.shuffle(rng);
    let m = k1.max(k2);
    let mut taken = vec![false; grid];
    let mut cells = Vec::with_capacity(k);
    for t in 0..m {
        let c = (rows[t % k1], cols[t % k2]);
        taken[c.0 * k2 + c.1] = true;
        cells.push(c);
    }
    let mut rest: Vec<usize> = (0..grid).filter(|&c| !taken[c]).collect();
    rest.shuffle(rng);
    cells.extend(rest[..k - m].iter().map(|&c| (c / k2, c % k2)));
    cells
}

/// Draws `k` distinct cells of the `k1 x k2` grid that hit every row and
/// column, puts one item in each, and spreads the remaining items over
/// the cells with the given weights (uniform when `None`).
///
/// Cells are redrawn uniformly until they cover the grid; after
/// [`MAX_COVERAGE_ATTEMPTS`] failures a covering set is built from a
/// random diagonal plus uniformly chosen extra cells.
pub fn sample_planted_structure(
    n: usize,
    k1: usize,
    k2: usize,
    k: usize,
    weights: Option<&[f64]>,
    rng: &mut StreamRng,
) -> Result<PlantedStructure> {
    check_grid_k(k1, k2, k, n)?;
    let dist = match weights {
        Some(w) => {
            if w.len() != k {
                return Err(Error::dims(format!("{} weights for {k} cells", w.len())));
            }
            Some(WeightedIndex::new(w).map_err(|e| Error::invalid(format!("cell weights: {e}")))?)
        }
        None => None,
    };
    let mut cells = sample_cells(k1, k2, k, rng);
    cells.sort_unstable();
    let mut labels: Vec<usize> = (0..k).collect();
    labels.extend((k..n).map(|_| match &dist {
        Some(d) => d.sample(rng),
        None => rng.random_range(0..k),
    }));
    labels.shuffle(rng);
    let joint = Assignment::new(labels, k)?;
    PlantedStructure::from_cells(joint, cells, k1, k2)
}

/// A deterministic planting with near-equal cluster sizes: joint cluster
/// `t` sits in cell `(t mod k1, (t mod k1 + ⌊t/k1⌋) mod k2)` and item `i`
/// belongs to cluster `i mod k`.
pub fn balanced_planted_structure(n: usize, k1: usize, k2: usize, k: usize) -> Result<PlantedStructure> {
    check_grid_k(k1, k2, k, n)?;
    let mut cells: Vec<(usize, usize)> = (0..k).map(|t| (t % k1, (t % k1 + t / k1) % k2)).collect();
    if !covers(&cells, k1, k2) {
        return Err(Error::invalid(format!(
            "the balanced layout of {k} cells does not cover a {k1}x{k2} grid"
        )));
    }
    // relabel clusters so cells are sorted, as in the random planting
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&t| cells[t]);
    let mut rank = vec![0; k];
    for (r, &t) in order.iter().enumerate() {
        rank[t] = r;
    }
    cells.sort_unstable();
    let joint = Assignment::new((0..n).map(|i| rank[i % k]).collect(), k)?;
    PlantedStructure::from_cells(joint, cells, k1, k2)
}

fn draw_centers(k: usize, p: usize, rng: &mut StreamRng) -> Matrix {
    loop {
        let c = Matrix::from_fn(k, p, |_, _| rng.sample(StandardNormal));
        let distinct = (0..k).all(|a| (a + 1..k).all(|b| c.row(a) != c.row(b)));
        if distinct {
            return c;
        }
    }
}

/// One `n x p` matrix per view: rows are the view cluster's center plus
/// `σ` times standard normal noise. Centers are standard normal draws.
pub fn generate_views(s: &PlantedStructure, p: usize, sigma2: f64, rng: &mut StreamRng) -> Result<Vec<Matrix>> {
    if p == 0 {
        return Err(Error::invalid("views need dimension at least 1"));
    }
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(Error::invalid(format!("variance {sigma2} is not finite and nonnegative")));
    }
    let sigma = sigma2.sqrt();
    let mut out = Vec::with_capacity(2);
    for view in [s.view1(), s.view2()] {
        let centers = draw_centers(view.k(), p, rng);
        let mut y = Matrix::zeros(view.n(), p);
        for i in 0..view.n() {
            let mu = centers.row(view.label(i));
            for (dst, &m) in y.row_mut(i).iter_mut().zip(mu) {
                let e: f64 = rng.sample(StandardNormal);
                *dst = m + sigma * e;
            }
        }
        out.push(y);
    }
    Ok(out)
}

/// Turns data matrices into view inputs of the requested kind.
///
/// Each view keeps `min(p, K_v)` singular vectors. Z-kind inputs run
/// k-means with `K_v` clusters on those vectors, seeded from `seed` and the
/// view index.
pub fn prepare_inputs(views: &[Matrix], kvs: &[usize], kind: InputKind, seed: u64) -> Result<Vec<ViewInput>> {
    if views.len() != kvs.len() {
        return Err(Error::dims(format!("{} views but {} cluster counts", views.len(), kvs.len())));
    }
    views
        .iter()
        .zip(kvs)
        .enumerate()
        .map(|(v, (y, &kv))| {
            let d = kv.min(y.cols()).min(y.rows());
            let svd = svd_k(y, d)?;
            Ok(match kind {
                InputKind::U => ViewInput::Embedding(svd.left),
                InputKind::X => {
                    let roots: Vec<f64> = svd.values.values().iter().map(|s| s.sqrt()).collect();
                    ViewInput::Features(svd.left.matrix().scale_columns(&roots))
                }
                InputKind::Z => {
                    let cfg = KMeansConfig::default();
                    let r = kmeans(
                        svd.left.matrix(),
                        kv,
                        cfg.restarts,
                        cfg.max_iter,
                        rng::derive_seed(seed, &[v as u64]),
                    )?;
                    ViewInput::Assignment(r.assignment)
                }
            })
        })
        .collect()
}

/// Outcome of one rep of one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub config_index: usize,
    pub config_hash: String,
    pub rep: usize,
    pub ari: Option<f64>,
    pub k_hat: Option<usize>,
    pub abs_err_k: Option<usize>,
    pub wall_ms: f64,
    pub error: Option<String>,
}

struct Outcome {
    ari: f64,
    k_hat: usize,
}

fn run_rep(cfg: &SimConfig, rep: usize) -> Result<Outcome> {
    let data_seed = cfg.data_seed(rep);
    let mut rng = rng::stream(data_seed, 0);
    let planted = sample_planted_structure(cfg.n, cfg.k1, cfg.k2, cfg.k, None, &mut rng)?;
    let views = generate_views(&planted, cfg.p, cfg.sigma2, &mut rng)?;
    let inputs = prepare_inputs(&views, &[cfg.k1, cfg.k2], cfg.input_kind, rng::derive_seed(data_seed, &[1]))?;
    let opts = JointOptions {
        k: cfg.k_known.then_some(cfg.k),
        which_elbow: cfg.which_elbow,
        seed: rng::derive_seed(data_seed, &[2]),
        ..Default::default()
    };
    let r = match cfg.method {
        Method::Krafty => joint::krafty(&inputs, &opts)?,
        Method::Mase => joint::mase(&inputs, &opts)?,
    };
    Ok(Outcome {
        ari: adjusted_rand_index(&planted.joint, &r.labels)?,
        k_hat: r.k_used,
    })
}

/// Runs one rep; a failure is recorded rather than returned.
pub fn run_one(cfg: &SimConfig, config_index: usize, rep: usize) -> RunRecord {
    let start = Instant::now();
    let out = run_rep(cfg, rep);
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let (ari, k_hat, error) = match out {
        Ok(o) => (Some(o.ari), Some(o.k_hat), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    RunRecord {
        config_index,
        config_hash: cfg.hash(),
        rep,
        ari,
        k_hat,
        abs_err_k: k_hat.map(|h| abs_error_k(h, cfg.k)),
        wall_ms,
        error,
    }
}

/// Per-configuration aggregate over its successful reps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub config_index: usize,
    pub config_hash: String,
    pub completed: usize,
    pub failures: usize,
    pub mean_ari: f64,
    /// `mean ± 1.96·SE` with the sample standard deviation.
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_abs_err_k: f64,
    pub mean_k_hat: f64,
}

/// Mean and half-width `1.96·sd/√m` of the 95% normal interval.
pub fn mean_ci(x: &[f64]) -> (f64, f64) {
    let m = x.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = x.iter().sum::<f64>() / m as f64;
    if m == 1 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    (mean, 1.96 * (var / m as f64).sqrt())
}

pub fn summarize(grid: &[SimConfig], records: &[RunRecord]) -> Vec<SummaryRow> {
    grid.iter()
        .enumerate()
        .map(|(i, cfg)| {
            let mine: Vec<&RunRecord> = records.iter().filter(|r| r.config_index == i).collect();
            let aris: Vec<f64> = mine.iter().filter_map(|r| r.ari).collect();
            let errs: Vec<f64> = mine.iter().filter_map(|r| r.abs_err_k.map(|e| e as f64)).collect();
            let hats: Vec<f64> = mine.iter().filter_map(|r| r.k_hat.map(|e| e as f64)).collect();
            let (mean_ari, half) = mean_ci(&aris);
            SummaryRow {
                config_index: i,
                config_hash: cfg.hash(),
                completed: aris.len(),
                failures: mine.len() - aris.len(),
                mean_ari,
                ci_low: mean_ari - half,
                ci_high: mean_ari + half,
                mean_abs_err_k: mean_ci(&errs).0,
                mean_k_hat: mean_ci(&hats).0,
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub grid: Vec<SimConfig>,
    /// Ordered by configuration, then rep.
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

/// Runs every rep of every configuration in parallel and collects the
/// records in `(config, rep)` order.
pub fn run_experiment(grid: &[SimConfig]) -> Result<Experiment> {
    validate_grid(grid)?;
    let jobs: Vec<(usize, usize)> = grid
        .iter()
        .enumerate()
        .flat_map(|(i, c)| (0..c.reps).map(move |r| (i, r)))
        .collect();
    let records: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(i, r)| run_one(&grid[i], i, r))
        .collect();
    let summary = summarize(grid, &records);
    Ok(Experiment {
        grid: grid.to_vec(),
        records,
        summary,
    })
}

/// Named experiment grids.
pub const PRESETS: [&str; 6] = ["fig2", "fig3", "fig4", "fig5", "appendix-k1k2", "appendix-xu"];

const SIGMA2_SWEEP: [f64; 6] = [0.01, 0.05, 0.1, 0.25, 0.5, 1.0];

#[allow(clippy::too_many_arguments)]
fn cfg(
    p: usize,
    sigma2: f64,
    k1: usize,
    k2: usize,
    k: usize,
    input_kind: InputKind,
    method: Method,
    k_known: bool,
    reps: usize,
    seed: u64,
) -> SimConfig {
    SimConfig {
        n: 1000,
        p,
        sigma2,
        k1,
        k2,
        k,
        reps,
        seed,
        input_kind,
        method,
        k_known,
        which_elbow: 2,
    }
}

const METHODS: [Method; 2] = [Method::Krafty, Method::Mase];
const ZU: [InputKind; 2] = [InputKind::Z, InputKind::U];

/// The grid behind a named experiment, every row with `reps` reps and the
/// master `seed`. All grids use `n = 1000`.
///
/// * `fig2`: `K = 4..=16`, `K₁ = K₂ = 4`, `p = 20`, `σ² = 0.1`; both
///   methods, Z and U inputs, known and unknown `K`.
/// * `fig3`: `K ∈ {4, 9, 15}` against six noise levels; unknown `K`.
/// * `fig4`: `K = 4..=16` against the same noise levels; unknown `K`.
/// * `fig5`: `K ∈ {6, 12}`, `σ² ∈ {0.01, 0.25, 1, 5}`, `p` from 2 to 50;
///   unknown `K`.
/// * `appendix-k1k2`: `K₁, K₂ = 3..=10` with `K` at `max(K₁, K₂)`,
///   `K₁ + K₂`, `⌊K₁K₂/2⌋` and `K₁K₂`; `σ² = 0.1`, `p = 101`; known and
///   unknown `K`.
/// * `appendix-xu`: U against X inputs on the fig2 and fig3 axes, unknown `K`.
pub fn preset(name: &str, reps: usize, seed: u64) -> Result<Vec<SimConfig>> {
    let mut g = Vec::new();
    match name {
        "fig2" => {
            for k in 4..=16 {
                for kind in ZU {
                    for m in METHODS {
                        for known in [true, false] {
                            g.push(cfg(20, 0.1, 4, 4, k, kind, m, known, reps, seed));
                        }
                    }
                }
            }
        }
        "fig3" => {
            for k in [4, 9, 15] {
                for s in SIGMA2_SWEEP {
                    for kind in ZU {
                        for m in METHODS {
                            g.push(cfg(20, s, 4, 4, k, kind, m, false, reps, seed));
                        }
                    }
                }
            }
        }
        "fig4" => {
            for k in 4..=16 {
                for s in SIGMA2_SWEEP {
                    for kind in ZU {
                        for m in METHODS {
                            g.push(cfg(20, s, 4, 4, k, kind, m, false, reps, seed));
                        }
                    }
                }
            }
        }
        "fig5" => {
            for k in [6, 12] {
                for s in [0.01, 0.25, 1.0, 5.0] {
                    for p in [2, 4, 6, 8, 10, 20, 30, 40, 50] {
                        for kind in ZU {
                            for m in METHODS {
                                g.push(cfg(p, s, 4, 4, k, kind, m, false, reps, seed));
                            }
                        }
                    }
                }
            }
        }
        "appendix-k1k2" => {
            for k1 in 3..=10 {
                for k2 in 3..=10 {
                    let (lo, hi) = (k1.max(k2), k1 * k2);
                    let mut ks: Vec<usize> = [lo, k1 + k2, hi / 2, hi]
                        .iter()
                        .map(|&k| k.clamp(lo, hi))
                        .collect();
                    ks.dedup();
                    for k in ks {
                        for kind in ZU {
                            for m in METHODS {
                                for known in [true, false] {
                                    g.push(cfg(101, 0.1, k1, k2, k, kind, m, known, reps, seed));
                                }
                            }
                        }
                    }
                }
            }
        }
        "appendix-xu" => {
            let mut points: Vec<(usize, f64)> = (4..=16).flat_map(|k| [(k, 0.01), (k, 1.0)]).collect();
            points.extend([4, 9, 15].iter().flat_map(|&k| SIGMA2_SWEEP.map(|s| (k, s))));
            for (k, s) in points {
                for kind in [InputKind::U, InputKind::X] {
                    for m in METHODS {
                        g.push(cfg(20, s, 4, 4, k, kind, m, false, reps, seed));
                    }
                }
            }
        }
        _ => {
            return Err(Error::invalid(format!(
                "unknown preset '{name}' (known: {})",
                PRESETS.join(", ")
            )))
        }
    }
    validate_grid(&g)?;
    Ok(g)
}

#[derive(Serialize)]
struct ResultRow<'a> {
    config_index: usize,
    config_hash: &'a str,
    n: usize,
    p: usize,
    sigma2: f64,
    k1: usize,
    k2: usize,
    k: usize,
    input_kind: &'a str,
    method: &'a str,
    k_known: bool,
    which_elbow: usize,
    rep: usize,
    ari: Option<f64>,
    k_hat: Option<usize>,
    abs_err_k: Option<usize>,
    error: &'a str,
}

#[derive(Serialize)]
struct SummaryCsvRow<'a> {
    config_index: usize,
    config_hash: &'a str,
    n: usize,
    p: usize,
    sigma2: f64,
    k1: usize,
    k2: usize,
    k: usize,
    input_kind: &'a str,
    method: &'a str,
    k_known: bool,
    which_elbow: usize,
    reps: usize,
    completed: usize,
    failures: usize,
    mean_ari: f64,
    ci_low: f64,
    ci_high: f64,
    mean_abs_err_k: f64,
    mean_k_hat: f64,
}

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::invalid(format!("csv encoding: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

impl Experiment {
    /// One line per rep with the configuration flattened in. Timings are
    /// left out so the file is reproducible; see [`Experiment::timings_csv`].
    pub fn results_csv(&self) -> Result<String> {
        csv_string(self.records.iter().map(|r| {
            let c = &self.grid[r.config_index];
            ResultRow {
                config_index: r.config_index,
                config_hash: &r.config_hash,
                n: c.n,
                p: c.p,
                sigma2: c.sigma2,
                k1: c.k1,
                k2: c.k2,
                k: c.k,
                input_kind: c.input_kind.as_str(),
                method: c.method.as_str(),
                k_known: c.k_known,
                which_elbow: c.which_elbow,
                rep: r.rep,
                ari: r.ari,
                k_hat: r.k_hat,
                abs_err_k: r.abs_err_k,
                error: r.error.as_deref().unwrap_or(""),
            }
        }))
    }

    pub fn summary_csv(&self) -> Result<String> {
        csv_string(self.summary.iter().map(|s| {
            let c = &self.grid[s.config_index];
            SummaryCsvRow {
                config_index: s.config_index,
                config_hash: &s.config_hash,
                n: c.n,
                p: c.p,
                sigma2: c.sigma2,
                k1: c.k1,
                k2: c.k2,
                k: c.k,
                input_kind: c.input_kind.as_str(),
                method: c.method.as_str(),
                k_known: c.k_known,
                which_elbow: c.which_elbow,
                reps: c.reps,
                completed: s.completed,
                failures: s.failures,
                mean_ari: s.mean_ari,
                ci_low: s.ci_low,
                ci_high: s.ci_high,
                mean_abs_err_k: s.mean_abs_err_k,
                mean_k_hat: s.mean_k_hat,
            }
        }))
    }

    /// `config_index,rep,wall_ms` per rep.
    pub fn timings_csv(&self) -> String {
        let mut s = String::from("config_index,rep,wall_ms\n");
        for r in &self.records {
            s.push_str(&format!("{},{},{:.3}\n", r.config_index, r.rep, r.wall_ms));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SimConfig {
        SimConfig {
            n: 200,
            p: 20,
            sigma2: 0.1,
            k1: 4,
            k2: 4,
            k: 9,
            reps: 2,
            seed: 5,
            input_kind: InputKind::U,
            method: Method::Krafty,
            k_known: true,
            which_elbow: 2,
        }
    }

    #[test]
    fn validation_names_fields() {
        assert!(base().validate().is_ok());
        let e = SimConfig { k: 17, ..base() }.validate().unwrap_err().to_string();
        assert!(e.contains("`k`"), "{e}");
        let e = SimConfig { k: 3, ..base() }.validate().unwrap_err().to_string();
        assert!(e.contains("`k`"), "{e}");
        let e = SimConfig { sigma2: -1.0, ..base() }.validate().unwrap_err().to_string();
        assert!(e.contains("`sigma2`"), "{e}");
        let e = SimConfig { p: 0, ..base() }.validate().unwrap_err().to_string();
        assert!(e.contains("`p`"), "{e}");
        let e = SimConfig { n: 5, ..base() }.validate().unwrap_err().to_string();
        assert!(e.contains("`n`"), "{e}");
        assert!(SimConfig { sigma2: 0.0, ..base() }.validate().is_ok());
    }

    #[test]
    fn hash_tracks_every_field() {
        let a = base();
        assert_eq!(a.hash(), base().hash());
        assert_eq!(a.hash().len(), 16);
        assert_ne!(a.hash(), SimConfig { method: Method::Mase, ..base() }.hash());
        assert_ne!(a.hash(), SimConfig { sigma2: 0.25, ..base() }.hash());
        assert_ne!(a.hash(), SimConfig { k_known: false, ..base() }.hash());
    }

    #[test]
    fn data_seed_ignores_method_and_kind() {
        let a = base();
        let b = SimConfig { method: Method::Mase, input_kind: InputKind::Z, k_known: false, ..base() };
        assert_eq!(a.data_seed(3), b.data_seed(3));
        assert_ne!(a.data_seed(3), a.data_seed(4));
        assert_ne!(a.data_seed(3), SimConfig { p: 21, ..base() }.data_seed(3));
    }

    #[test]
    fn planted_all_cells() {
        let mut r = rng::stream(1, 0);
        let s = sample_planted_structure(50, 3, 4, 12, None, &mut r).unwrap();
        assert_eq!(s.cells.len(), 12);
        assert!(s.proj1.k_v() == 3 && s.proj2.k_v() == 4);
        assert!(s.joint.sizes().iter().all(|&c| c >= 1));
    }

    #[test]
    fn planted_transversal_at_minimum_k() {
        for seed in 0..20 {
            let mut r = rng::stream(seed, 0);
            let s = sample_planted_structure(100, 5, 5, 5, None, &mut r).unwrap();
            let mut rows: Vec<usize> = s.cells.iter().map(|c| c.0).collect();
            let mut cols: Vec<usize> = s.cells.iter().map(|c| c.1).collect();
            rows.sort_unstable();
            cols.sort_unstable();
            assert_eq!(rows, vec![0, 1, 2, 3, 4]);
            assert_eq!(cols, vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn planted_fallback_covers_large_grids() {
        // a random 10-subset of a 10x10 grid is almost never a transversal
        let mut r = rng::stream(2, 0);
        let s = sample_planted_structure(500, 10, 10, 10, None, &mut r).unwrap();
        assert!(covers(&s.cells, 10, 10));
        let mut r = rng::stream(3, 0);
        let s = sample_planted_structure(500, 3, 10, 10, None, &mut r).unwrap();
        assert!(covers(&s.cells, 3, 10));
        assert_eq!(s.view1().k(), 3);
        assert_eq!(s.view2().k(), 10);
    }

    #[test]
    fn planted_errors() {
        let mut r = rng::stream(0, 0);
        assert!(sample_planted_structure(100, 3, 3, 10, None, &mut r).is_err());
        assert!(sample_planted_structure(100, 4, 3, 3, None, &mut r).is_err());
        assert!(sample_planted_structure(5, 3, 3, 6, None, &mut r).is_err());
        assert!(sample_planted_structure(50, 3, 3, 4, Some(&[1.0, 2.0]), &mut r).is_err());
    }

    #[test]
    fn planted_weights_shift_sizes() {
        let mut r = rng::stream(4, 0);
        let s = sample_planted_structure(2000, 2, 2, 2, Some(&[9.0, 1.0]), &mut r).unwrap();
        let sizes = s.joint.sizes();
        assert!(sizes[0] > 3 * sizes[1], "{sizes:?}");
    }

    #[test]
    fn balanced_layout() {
        let s = balanced_planted_structure(1000, 4, 4, 9).unwrap();
        assert_eq!(s.cells.len(), 9);
        assert!(covers(&s.cells, 4, 4));
        let sizes = s.joint.sizes();
        assert!(sizes.iter().all(|&c| c == 111 || c == 112));
        assert_eq!(s.view1().k(), 4);
        assert_eq!(s.view2().k(), 4);
        assert!(balanced_planted_structure(100, 2, 6, 3).is_err());
    }

    #[test]
    fn views_without_noise_repeat_centers() {
        let mut r = rng::stream(6, 0);
        let s = sample_planted_structure(60, 3, 4, 6, None, &mut r).unwrap();
        let views = generate_views(&s, 5, 0.0, &mut r).unwrap();
        for (y, z) in views.iter().zip([s.view1(), s.view2()]) {
            let mut rows: Vec<Vec<u64>> = y.row_iter().map(|r| r.iter().map(|v| v.to_bits()).collect()).collect();
            rows.sort();
            rows.dedup();
            assert_eq!(rows.len(), z.k());
        }
    }

    #[test]
    fn views_are_reproducible() {
        let gen = || {
            let mut r = rng::stream(8, 0);
            let s = sample_planted_structure(40, 3, 3, 5, None, &mut r).unwrap();
            generate_views(&s, 4, 0.5, &mut r).unwrap()
        };
        assert_eq!(gen(), gen());
    }

    #[test]
    fn column_means_follow_centers() {
        let n = 100_000;
        let sigma2 = 0.5f64;
        let mut r = rng::stream(9, 0);
        let s = sample_planted_structure(n, 3, 3, 4, None, &mut r).unwrap();
        let mut r2 = rng::stream(9, 0);
        let _ = sample_planted_structure(n, 3, 3, 4, None, &mut r2).unwrap();
        let views = generate_views(&s, 3, sigma2, &mut r).unwrap();
        // replay the center draws from the same stream state
        let c1 = draw_centers(3, 3, &mut r2);
        let z = s.view1();
        let sizes = z.sizes();
        for j in 0..3 {
            let mean: f64 = views[0].column(j).iter().sum::<f64>() / n as f64;
            let expect: f64 = (0..3).map(|c| sizes[c] as f64 * c1.row(c)[j]).sum::<f64>() / n as f64;
            assert!((mean - expect).abs() <= 5.0 * sigma2.sqrt() / (n as f64).sqrt());
        }
    }

    #[test]
    fn inputs_of_each_kind() {
        let mut r = rng::stream(10, 0);
        let s = sample_planted_structure(120, 3, 4, 7, None, &mut r).unwrap();
        let views = generate_views(&s, 10, 0.0, &mut r).unwrap();
        let u = prepare_inputs(&views, &[3, 4], InputKind::U, 0).unwrap();
        for v in &u {
            match v {
                ViewInput::Embedding(e) => assert!(e.residual() <= 1e-10),
                _ => panic!("expected an embedding"),
            }
        }
        let z = prepare_inputs(&views, &[3, 4], InputKind::Z, 0).unwrap();
        for (v, truth) in z.iter().zip([s.view1(), s.view2()]) {
            match v {
                ViewInput::Assignment(a) => assert_eq!(adjusted_rand_index(a, &truth).unwrap(), 1.0),
                _ => panic!("expected labels"),
            }
        }
        let x = prepare_inputs(&views, &[3, 4], InputKind::X, 0).unwrap();
        assert_eq!(x[1].dim(), 4);
        // fewer dimensions than clusters
        let narrow = generate_views(&s, 2, 0.1, &mut r).unwrap();
        let u = prepare_inputs(&narrow, &[3, 4], InputKind::U, 0).unwrap();
        assert_eq!(u[1].dim(), 2);
        let z = prepare_inputs(&narrow, &[3, 4], InputKind::Z, 0).unwrap();
        assert_eq!(z[1].dim(), 4);
    }

    #[test]
    fn noiseless_known_k_is_perfect() {
        for method in METHODS {
            for kind in [InputKind::Z, InputKind::U, InputKind::X] {
                let c = SimConfig { sigma2: 0.0, k: 7, reps: 1, method, input_kind: kind, ..base() };
                let rec = run_one(&c, 0, 0);
                assert_eq!(rec.ari, Some(1.0), "{method:?} {kind:?} {:?}", rec.error);
            }
        }
    }

    #[test]
    fn failures_are_recorded() {
        let c = SimConfig { k: 40, ..base() };
        let rec = run_one(&c, 0, 0);
        assert!(rec.ari.is_none() && rec.error.is_some());
    }

    #[test]
    fn experiment_is_deterministic() {
        let grid = vec![
            SimConfig { k_known: false, ..base() },
            SimConfig { method: Method::Mase, input_kind: InputKind::Z, ..base() },
        ];
        let a = run_experiment(&grid).unwrap();
        let b = run_experiment(&grid).unwrap();
        assert_eq!(a.results_csv().unwrap(), b.results_csv().unwrap());
        assert_eq!(a.summary_csv().unwrap(), b.summary_csv().unwrap());
        assert_eq!(a.records.len(), 4);
        assert_eq!(a.summary[1].completed + a.summary[1].failures, 2);
        let text = a.summary_csv().unwrap();
        assert!(text.starts_with("config_index,config_hash,n,p,sigma2"));
    }

    #[test]
    fn mean_ci_examples() {
        let (m, h) = mean_ci(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((h - 1.96 * sd / 2.0).abs() < 1e-15);
        assert_eq!(mean_ci(&[0.7]), (0.7, 0.0));
        assert!(mean_ci(&[]).0.is_nan());
    }

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            let g = preset(name, 3, 1).unwrap();
            assert!(!g.is_empty());
            assert!(g.iter().all(|c| c.reps == 3 && c.seed == 1));
        }
        assert_eq!(preset("fig2", 1, 0).unwrap().len(), 13 * 8);
        assert_eq!(preset("fig3", 1, 0).unwrap().len(), 3 * 6 * 4);
        assert_eq!(preset("fig5", 1, 0).unwrap().len(), 2 * 4 * 9 * 4);
        assert!(preset("fig9", 1, 0).is_err());
        // K1 = K2 = 3: max = 3, sum = 6, half = 4, product = 9
        let k1k2 = preset("appendix-k1k2", 1, 0).unwrap();
        let mut ks: Vec<usize> = k1k2.iter().filter(|c| c.k1 == 3 && c.k2 == 3).map(|c| c.k).collect();
        ks.dedup();
        assert_eq!(ks, vec![3, 6, 4, 9]);
    }

    #[test]
    fn grid_file_parsing() {
        let text = r#"
[[run]]
p = 20
sigma2 = 0.1
k1 = 4
k2 = 4
k = 9
method = "mase"
input_kind = "Z"

[[run]]
n = 300
p = 5
sigma2 = 0.0
k1 = 3
k2 = 3
k = 3
k_known = true
"#;
        let g = parse_grid(text).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].n, 1000);
        assert_eq!(g[0].method, Method::Mase);
        assert_eq!(g[0].input_kind, InputKind::Z);
        assert_eq!(g[1].input_kind, InputKind::U);
        assert!(g[1].k_known);
        let e = parse_grid(&text.replace("k = 3\n", "k = 30\n")).unwrap_err().to_string();
        assert!(e.contains("run 1") && e.contains("`k`"), "{e}");
        assert!(parse_grid("[[run]]\np = 1\n").is_err());
        assert!(parse_grid(&text.replace("p = 20", "p = 20\ncolour = 1")).is_err());
    }
}
