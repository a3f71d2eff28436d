//! Weighted directed networks as views.
//!
//! A network's adjacency matrix has exporters on the rows and importers on
//! the columns. Its truncated SVD `A ≈ UΣVᵀ` gives two embeddings per
//! vertex, the rows of `UΣ^{1/2}` (sending behaviour) and of `VΣ^{1/2}`
//! (receiving behaviour), each rescaled to unit length. Clustering those
//! rows per network and role gives hard view labels for the joint methods.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::clustering::{kmeans, KMeansConfig};
use crate::joint::{self, JointOptions, JointResult, Method, ViewInput};
use crate::linalg::{row_norm, singular_values, svd_k};
use crate::rng;
use crate::selectk::{profile_likelihood_elbow, ElbowEstimate};
use crate::{Assignment, Error, Matrix, Result};

/// Rows with norm at or below this fraction of the largest row norm are
/// treated as zero.
pub const ZERO_ROW_TOL: f64 = 1e-12;

/// A nonnegative square weight matrix over named vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedNetwork {
    names: Vec<String>,
    adjacency: Matrix,
}

impl WeightedNetwork {
    pub fn new(names: Vec<String>, adjacency: Matrix) -> Result<Self> {
        let n = names.len();
        if adjacency.shape() != (n, n) {
            return Err(Error::dims(format!(
                "{n} vertex names for a {}x{} adjacency matrix",
                adjacency.rows(),
                adjacency.cols()
            )));
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("vertex '{name}' listed twice")));
            }
        }
        if let Some(bad) = adjacency.as_slice().iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::invalid(format!("edge weight {bad} is not finite and nonnegative")));
        }
        Ok(WeightedNetwork { names, adjacency })
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn adjacency(&self) -> &Matrix {
        &self.adjacency
    }

    /// The same network with vertices listed in `order`, which must be a
    /// permutation of the current names.
    pub fn reordered(&self, order: &[String]) -> Result<WeightedNetwork> {
        let pos: HashMap<&str, usize> =
            self.names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        if order.len() != self.n() {
            return Err(Error::dims(format!("{} names to reorder {} vertices", order.len(), self.n())));
        }
        let idx: Vec<usize> = order
            .iter()
            .map(|s| pos.get(s.as_str()).copied().ok_or_else(|| Error::invalid(format!("unknown vertex '{s}'"))))
            .collect::<Result<_>>()?;
        let a = Matrix::from_fn(self.n(), self.n(), |i, j| self.adjacency[(idx[i], idx[j])]);
        WeightedNetwork::new(order.to_vec(), a)
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Parses `source,target,weight` rows after a header line. `path` only
/// labels error messages.
///
/// Without a universe the vertices are the sorted union of observed names;
/// with one, they are the universe in its given order and any other name
/// is an error. Repeated edges add up.
pub fn parse_edge_list(text: &str, path: &Path, universe: Option<&[String]>) -> Result<WeightedNetwork> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    let expected = ["source", "target", "weight"];
    let empty = text.trim().is_empty();
    if !empty && header.iter().collect::<Vec<_>>() != expected {
        return Err(parse_err(
            path,
            1,
            format!("header must be 'source,target,weight', found '{}'", header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut edges: Vec<(String, String, f64, usize)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if rec.len() != 3 {
            return Err(parse_err(path, line, format!("expected 3 fields, found {}", rec.len())));
        }
        let (s, t, w) = (&rec[0], &rec[1], &rec[2]);
        if s.is_empty() || t.is_empty() {
            return Err(parse_err(path, line, "empty vertex name"));
        }
        let w: f64 = w
            .parse()
            .map_err(|_| parse_err(path, line, format!("weight '{w}' is not a number")))?;
        if !w.is_finite() || w < 0.0 {
            return Err(parse_err(path, line, format!("weight {w} is not finite and nonnegative")));
        }
        edges.push((s.to_string(), t.to_string(), w, line));
    }
    let names: Vec<String> = match universe {
        Some(u) => u.to_vec(),
        None => edges
            .iter()
            .flat_map(|(s, t, _, _)| [s.clone(), t.clone()])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    if index.len() != names.len() {
        return Err(Error::invalid("vertex universe lists a name twice"));
    }
    let n = names.len();
    let mut a = Matrix::zeros(n, n);
    for (s, t, w, line) in &edges {
        let lookup = |v: &str| {
            index
                .get(v)
                .copied()
                .ok_or_else(|| parse_err(path, *line, format!("vertex '{v}' is not in the universe")))
        };
        let (i, j) = (lookup(s)?, lookup(t)?);
        a[(i, j)] += w;
    }
    WeightedNetwork::new(names, a)
}

pub fn load_edge_list(path: &Path, universe: Option<&[String]>) -> Result<WeightedNetwork> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_edge_list(&text, path, universe)
}

/// One vertex name per non-blank line.
pub fn load_universe(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

/// Nonzero entries in row-major order.
pub fn edge_list_csv(net: &WeightedNetwork) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::invalid(format!("csv encoding: {e}"));
    w.write_record(["source", "target", "weight"]).map_err(io)?;
    for i in 0..net.n() {
        for j in 0..net.n() {
            let v = net.adjacency[(i, j)];
            if v != 0.0 {
                w.write_record([net.names[i].as_str(), net.names[j].as_str(), &format!("{v:?}")])
                    .map_err(io)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_edge_list(path: &Path, net: &WeightedNetwork) -> Result<()> {
    std::fs::write(path, edge_list_csv(net)?).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Which side of the adjacency matrix a view describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// Rows: outgoing weights.
    Exporter,
    /// Columns: incoming weights.
    Importer,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Exporter => "exporter",
            Role::Importer => "importer",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exporter" | "exp" | "out" => Ok(Role::Exporter),
            "importer" | "imp" | "in" => Ok(Role::Importer),
            _ => Err(Error::invalid(format!("unknown role '{s}'"))),
        }
    }
}

/// Unit-length rows of `UΣ^{1/2}` and `VΣ^{1/2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RoleEmbeddings {
    pub exporter: Matrix,
    pub importer: Matrix,
    /// Vertices whose exporter row was zero; their rows stay zero.
    pub zero_exporter: Vec<usize>,
    pub zero_importer: Vec<usize>,
}

impl RoleEmbeddings {
    pub fn rows(&self, role: Role) -> &Matrix {
        match role {
            Role::Exporter => &self.exporter,
            Role::Importer => &self.importer,
        }
    }

    pub fn zero_rows(&self, role: Role) -> &[usize] {
        match role {
            Role::Exporter => &self.zero_exporter,
            Role::Importer => &self.zero_importer,
        }
    }
}

fn normalize_rows(m: &mut Matrix) -> Vec<usize> {
    let norms: Vec<f64> = m.row_iter().map(row_norm).collect();
    let top = norms.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut zero = Vec::new();
    for (i, &r) in norms.iter().enumerate() {
        if r <= ZERO_ROW_TOL * top || r == 0.0 {
            m.row_mut(i).iter_mut().for_each(|v| *v = 0.0);
            zero.push(i);
        } else {
            m.row_mut(i).iter_mut().for_each(|v| *v /= r);
        }
    }
    zero
}

/// Exporter and importer embeddings of dimension `d`.
pub fn exporter_importer_embeddings(net: &WeightedNetwork, d: usize) -> Result<RoleEmbeddings> {
    if d == 0 || d > net.n() {
        return Err(Error::invalid(format!(
            "embedding dimension {d} is outside 1..={}",
            net.n()
        )));
    }
    let svd = svd_k(&net.adjacency, d)?;
    let roots: Vec<f64> = svd.values.values().iter().map(|s| s.sqrt()).collect();
    let mut exporter = svd.left.matrix().scale_columns(&roots);
    let mut importer = svd.right.scale_columns(&roots);
    let zero_exporter = normalize_rows(&mut exporter);
    let zero_importer = normalize_rows(&mut importer);
    Ok(RoleEmbeddings {
        exporter,
        importer,
        zero_exporter,
        zero_importer,
    })
}

/// First (or later) profile-likelihood elbow of the adjacency spectrum, a
/// suggestion for the embedding dimension.
pub fn suggest_dimension(net: &WeightedNetwork, which: usize) -> Result<ElbowEstimate> {
    profile_likelihood_elbow(&singular_values(&net.adjacency)?, which)
}

/// One network-and-role view of the pipeline.
#[derive(Clone, Debug)]
pub struct TradeView {
    pub network: WeightedNetwork,
    pub role: Role,
    /// Embedding dimension.
    pub d: usize,
    /// Number of clusters within the view.
    pub k: usize,
}

#[derive(Clone, Debug)]
pub struct TradeResult {
    /// Vertices that were clustered, in the order of the labels.
    pub vertices: Vec<String>,
    /// Vertices left out because some view gave them a zero row.
    pub excluded: Vec<String>,
    /// Per-view k-means labels over `vertices`.
    pub view_labels: Vec<Assignment>,
    pub joint: JointResult,
}

fn check_vertex_sets(views: &[TradeView]) -> Result<()> {
    let first: BTreeSet<&str> = views[0].network.names().iter().map(String::as_str).collect();
    for (v, view) in views.iter().enumerate().skip(1) {
        let other: BTreeSet<&str> = view.network.names().iter().map(String::as_str).collect();
        if other != first {
            let only_first: Vec<&str> = first.difference(&other).copied().collect();
            let only_other: Vec<&str> = other.difference(&first).copied().collect();
            let shared = first.intersection(&other).count();
            return Err(Error::invalid(format!(
                "views 0 and {v} cover different vertices ({shared} shared); only in view 0: [{}]; only in view {v}: [{}]",
                only_first.join(", "),
                only_other.join(", ")
            )));
        }
    }
    Ok(())
}

/// Embeds every view, clusters each with k-means, and clusters the
/// vertices jointly from those labels.
///
/// All views must cover the same vertex names; they are aligned to the
/// first view's order. A vertex with a zero row in any view is excluded
/// from every clustering and reported in [`TradeResult::excluded`].
pub fn trade_pipeline(
    views: &[TradeView],
    k: Option<usize>,
    method: Method,
    which_elbow: usize,
    seed: u64,
) -> Result<TradeResult> {
    if views.len() < 2 {
        return Err(Error::invalid(format!("the pipeline needs at least 2 views, got {}", views.len())));
    }
    check_vertex_sets(views)?;
    let order = views[0].network.names().to_vec();
    let embedded: Vec<(Matrix, Vec<usize>)> = views
        .par_iter()
        .map(|v| {
            let net = v.network.reordered(&order)?;
            let e = exporter_importer_embeddings(&net, v.d)?;
            Ok((e.rows(v.role).clone(), e.zero_rows(v.role).to_vec()))
        })
        .collect::<Result<_>>()?;
    let excluded_idx: BTreeSet<usize> = embedded.iter().flat_map(|(_, z)| z.iter().copied()).collect();
    let keep: Vec<usize> = (0..order.len()).filter(|i| !excluded_idx.contains(i)).collect();
    if keep.len() < 2 {
        return Err(Error::invalid("fewer than 2 vertices have nonzero rows in every view"));
    }
    let cfg = KMeansConfig::default();
    let view_labels: Vec<Assignment> = embedded
        .par_iter()
        .zip(views)
        .enumerate()
        .map(|(v, ((rows, _), view))| {
            let x = rows.select_rows(&keep);
            let r = kmeans(&x, view.k, cfg.restarts, cfg.max_iter, rng::derive_seed(seed, &[v as u64]))?;
            Ok(r.assignment)
        })
        .collect::<Result<_>>()?;
    let inputs: Vec<ViewInput> = view_labels.iter().cloned().map(ViewInput::Assignment).collect();
    let opts = JointOptions {
        k,
        which_elbow,
        seed,
        ..Default::default()
    };
    let joint = match method {
        Method::Krafty => joint::krafty(&inputs, &opts)?,
        Method::Mase => joint::mase(&inputs, &opts)?,
    };
    Ok(TradeResult {
        vertices: keep.iter().map(|&i| order[i].clone()).collect(),
        excluded: excluded_idx.iter().map(|&i| order[i].clone()).collect(),
        view_labels,
        joint,
    })
}

/// Vertex names grouped by label, for reporting.
pub fn members(vertices: &[String], labels: &Assignment) -> BTreeMap<usize, Vec<String>> {
    let mut out: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (name, &l) in vertices.iter().zip(labels.labels()) {
        out.entry(l).or_default().push(name.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::adjusted_rand_index;
    use std::path::PathBuf;

    fn p() -> PathBuf {
        PathBuf::from("edges.csv")
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i:02}")).collect()
    }

    // Block weights with a small deterministic wobble so the matrix is not
    // exactly low rank.
    fn block_network(blocks: &[usize], strength: &[[f64; 3]; 3]) -> WeightedNetwork {
        let n = blocks.len();
        let a = Matrix::from_fn(n, n, |i, j| {
            let wobble = 1.0 + 0.01 * (((i * 7 + j * 13) % 5) as f64 - 2.0);
            strength[blocks[i]][blocks[j]] * wobble
        });
        WeightedNetwork::new(names(n), a).unwrap()
    }

    const STRENGTH: [[f64; 3]; 3] = [[9.0, 1.0, 0.5], [0.5, 8.0, 1.0], [1.0, 0.5, 7.0]];

    #[test]
    fn parse_examples() {
        let u: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let net = parse_edge_list("", &p(), Some(&u)).unwrap();
        assert_eq!(net.adjacency(), &Matrix::zeros(3, 3));
        let net = parse_edge_list("source,target,weight\na,b,2\na,b,3\nc,a,0.5\n", &p(), None).unwrap();
        assert_eq!(net.names(), &u[..]);
        assert_eq!(net.adjacency()[(0, 1)], 5.0);
        assert_eq!(net.adjacency()[(2, 0)], 0.5);
        assert_eq!(net.adjacency()[(1, 0)], 0.0);
    }

    #[test]
    fn parse_errors_name_lines() {
        let e = parse_edge_list("source,target,weight\na,b,1\na,b\n", &p(), None).unwrap_err().to_string();
        assert!(e.contains(":3:"), "{e}");
        let e = parse_edge_list("source,target,weight\na,b,x\n", &p(), None).unwrap_err().to_string();
        assert!(e.contains(":2:") && e.contains("'x'"), "{e}");
        let e = parse_edge_list("source,target,weight\na,b,-1\n", &p(), None).unwrap_err().to_string();
        assert!(e.contains(":2:"), "{e}");
        let u: Vec<String> = vec!["a".into(), "b".into()];
        let e = parse_edge_list("source,target,weight\na,b,1\nb,z,1\n", &p(), Some(&u)).unwrap_err().to_string();
        assert!(e.contains(":3:") && e.contains("'z'"), "{e}");
        assert!(parse_edge_list("from,to,w\na,b,1\n", &p(), None).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let net = block_network(&[0, 1, 2, 0, 1], &STRENGTH);
        write_edge_list(&path, &net).unwrap();
        assert_eq!(load_edge_list(&path, None).unwrap(), net);
        let uni = dir.path().join("u.txt");
        std::fs::write(&uni, "v04\nv03\nv02\nv01\nv00\n").unwrap();
        let u = load_universe(&uni).unwrap();
        let back = load_edge_list(&path, Some(&u)).unwrap();
        assert_eq!(back, net.reordered(&u).unwrap());
    }

    #[test]
    fn network_validation() {
        assert!(WeightedNetwork::new(names(2), Matrix::zeros(3, 3)).is_err());
        assert!(WeightedNetwork::new(vec!["a".into(), "a".into()], Matrix::zeros(2, 2)).is_err());
        let neg = Matrix::from_rows(&[vec![0.0, -1.0], vec![0.0, 0.0]]).unwrap();
        assert!(WeightedNetwork::new(names(2), neg).is_err());
    }

    #[test]
    fn unit_rows_and_flags() {
        let mut a = Matrix::from_fn(6, 6, |i, j| ((i * 3 + j * 5) % 7) as f64 + 1.0);
        // vertex 2 sends nothing, vertex 4 receives nothing
        a.row_mut(2).iter_mut().for_each(|v| *v = 0.0);
        for i in 0..6 {
            a[(i, 4)] = 0.0;
        }
        let net = WeightedNetwork::new(names(6), a).unwrap();
        let e = exporter_importer_embeddings(&net, 3).unwrap();
        assert_eq!(e.zero_exporter, vec![2]);
        assert_eq!(e.zero_importer, vec![4]);
        for (m, flagged) in [(&e.exporter, 2), (&e.importer, 4)] {
            for i in 0..6 {
                let r = row_norm(m.row(i));
                if i == flagged {
                    assert_eq!(r, 0.0);
                } else {
                    assert!((r - 1.0).abs() <= 1e-10);
                }
            }
        }
        assert!(exporter_importer_embeddings(&net, 0).is_err());
        assert!(exporter_importer_embeddings(&net, 7).is_err());
    }

    #[test]
    fn full_dimension_has_no_flags() {
        let a = Matrix::from_fn(5, 5, |i, j| if i == j { 3.0 + i as f64 } else { 1.0 / (1 + i + j) as f64 });
        let net = WeightedNetwork::new(names(5), a).unwrap();
        let e = exporter_importer_embeddings(&net, 5).unwrap();
        assert!(e.zero_exporter.is_empty() && e.zero_importer.is_empty());
    }

    #[test]
    fn two_blocks_separate() {
        let blocks: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let a = Matrix::from_fn(20, 20, |i, j| if blocks[i] == blocks[j] { 5.0 + (i % 3) as f64 } else { 0.0 });
        let net = WeightedNetwork::new(names(20), a).unwrap();
        let e = exporter_importer_embeddings(&net, 2).unwrap();
        let r = kmeans(&e.exporter, 2, 5, 100, 0).unwrap();
        let truth = Assignment::relabel_by_first_appearance(&blocks);
        assert_eq!(adjusted_rand_index(&truth, &r.assignment).unwrap(), 1.0);
    }

    #[test]
    fn rescaling_leaves_rows_unchanged() {
        let net = block_network(&[0, 1, 2, 2, 1, 0, 0], &STRENGTH);
        let scaled = WeightedNetwork::new(net.names().to_vec(), net.adjacency().scale(250.0)).unwrap();
        let a = exporter_importer_embeddings(&net, 3).unwrap();
        let b = exporter_importer_embeddings(&scaled, 3).unwrap();
        for (x, y) in [(&a.exporter, &b.exporter), (&a.importer, &b.importer)] {
            let diff = x.sub(y).unwrap().max_abs();
            assert!(diff <= 1e-10, "{diff}");
        }
    }

    #[test]
    fn identical_block_views_give_the_blocks() {
        let blocks: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let net = block_network(&blocks, &STRENGTH);
        let view = TradeView { network: net, role: Role::Exporter, d: 3, k: 3 };
        let r = trade_pipeline(&[view.clone(), view], None, Method::Krafty, 2, 1).unwrap();
        assert_eq!(r.joint.k_used, 3);
        let truth = Assignment::relabel_by_first_appearance(&blocks);
        assert_eq!(adjusted_rand_index(&truth, &r.joint.labels).unwrap(), 1.0);
        assert!(r.excluded.is_empty());
    }

    #[test]
    fn moved_memberships_refine_the_partition() {
        let year1: Vec<usize> = (0..60).map(|i| i % 3).collect();
        // half the vertices move to the next block in year 2
        let year2: Vec<usize> = year1.iter().enumerate().map(|(i, &b)| if i < 30 { (b + 1) % 3 } else { b }).collect();
        let v1 = TradeView { network: block_network(&year1, &STRENGTH), role: Role::Exporter, d: 3, k: 3 };
        let v2 = TradeView { network: block_network(&year2, &STRENGTH), role: Role::Exporter, d: 3, k: 3 };
        let r = trade_pipeline(&[v1, v2], None, Method::Krafty, 2, 1).unwrap();
        assert!(r.joint.k_used > 3, "k = {}", r.joint.k_used);
        let pairs: Vec<usize> = year1.iter().zip(&year2).map(|(a, b)| a * 3 + b).collect();
        let truth = Assignment::relabel_by_first_appearance(&pairs);
        assert_eq!(adjusted_rand_index(&truth, &r.joint.labels).unwrap(), 1.0);
    }

    #[test]
    fn vertex_sets_must_match() {
        let a = block_network(&[0, 1, 2, 0], &STRENGTH);
        let other = vec!["x".to_string(), "y".into(), "v02".into(), "v03".into()];
        let b = WeightedNetwork::new(other, a.adjacency().clone()).unwrap();
        let views = [
            TradeView { network: a.clone(), role: Role::Exporter, d: 2, k: 2 },
            TradeView { network: b, role: Role::Importer, d: 2, k: 2 },
        ];
        let e = trade_pipeline(&views, None, Method::Krafty, 2, 0).unwrap_err().to_string();
        assert!(e.contains("v00") && e.contains("x"), "{e}");
        let disjoint = WeightedNetwork::new(vec!["p".into(), "q".into(), "r".into(), "s".into()], a.adjacency().clone()).unwrap();
        let views = [
            TradeView { network: a, role: Role::Exporter, d: 2, k: 2 },
            TradeView { network: disjoint, role: Role::Exporter, d: 2, k: 2 },
        ];
        let e = trade_pipeline(&views, None, Method::Krafty, 2, 0).unwrap_err().to_string();
        assert!(e.contains("0 shared"), "{e}");
    }

    #[test]
    fn pipeline_is_deterministic() {
        let blocks: Vec<usize> = (0..24).map(|i| (i * 5) % 3).collect();
        let net = block_network(&blocks, &STRENGTH);
        let views = [
            TradeView { network: net.clone(), role: Role::Exporter, d: 3, k: 3 },
            TradeView { network: net, role: Role::Importer, d: 3, k: 2 },
        ];
        let a = trade_pipeline(&views, None, Method::Mase, 2, 9).unwrap();
        let b = trade_pipeline(&views, None, Method::Mase, 2, 9).unwrap();
        assert_eq!(a.joint.labels, b.joint.labels);
        assert_eq!(a.view_labels, b.view_labels);
    }

    #[test]
    fn dimension_suggestion() {
        let blocks: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let a = Matrix::from_fn(30, 30, |i, j| STRENGTH[blocks[i]][blocks[j]]);
        let net = WeightedNetwork::new(names(30), a).unwrap();
        assert_eq!(suggest_dimension(&net, 1).unwrap().k_hat, 3);
    }
}
