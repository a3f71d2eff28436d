//! `krafty`: joint clustering of multi-view data from the command line.
//!
//! Every command writes into its `--out` directory and finishes with a
//! `manifest.json` recording the arguments, the seed and the SHA-256 of
//! every input and output. `krafty replay` re-runs a manifest and checks
//! that the outputs come out byte-identical.
//!
//! Exit codes: 0 success, 1 replay mismatch, 2 input error, 3 numeric
//! failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use krafty::ingest::Role;
use krafty::joint::{Clusterer, Method};

#[derive(Parser, Debug)]
#[command(name = "krafty", version, about = "Joint clustering of items seen through several views")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Cluster items jointly from two or more view files.
    Cluster(ClusterArgs),
    /// Run a simulation grid.
    Simulate(SimulateArgs),
    /// Estimate a cluster count from a spectrum or a dendrogram.
    SelectK(SelectKArgs),
    /// Cluster the vertices of weighted directed networks.
    Trade(TradeArgs),
    /// Re-run a manifest and compare output digests.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ViewKind {
    /// Hard labels, one per line.
    Z,
    /// Matrix with orthonormal columns.
    U,
    /// Any real feature matrix.
    X,
}

#[derive(Clone, Debug)]
pub struct ViewSpec {
    pub kind: ViewKind,
    pub path: PathBuf,
}

fn parse_view(s: &str) -> Result<ViewSpec, String> {
    let (kind, path) = s
        .split_once(':')
        .ok_or_else(|| format!("expected KIND:PATH, got '{s}'"))?;
    let kind = ViewKind::from_str(kind, true).map_err(|_| format!("unknown view kind '{kind}' (use z, u or x)"))?;
    if path.is_empty() {
        return Err("empty path".into());
    }
    Ok(ViewSpec {
        kind,
        path: PathBuf::from(path),
    })
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    /// A view as KIND:PATH with KIND one of z (labels), u (orthonormal
    /// matrix) or x (feature matrix). Repeat for every view.
    #[arg(long = "view", value_name = "KIND:PATH", value_parser = parse_view, required = true)]
    pub views: Vec<ViewSpec>,
    /// Number of joint clusters; estimated from the spectrum when absent.
    #[arg(long)]
    pub k: Option<usize>,
    /// krafty or mase.
    #[arg(long, default_value = "krafty")]
    pub method: Method,
    /// hc or kmeans.
    #[arg(long, default_value = "hc")]
    pub clusterer: Clusterer,
    /// Which profile-likelihood elbow estimates k.
    #[arg(long, default_value_t = 2)]
    pub elbow: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Clip the first embedding view's rows at C·sqrt(K_v/n).
    #[arg(long, value_name = "C")]
    pub regularize: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// fig2, fig3, fig4, fig5, appendix-k1k2 or appendix-xu.
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    pub preset: Option<String>,
    /// TOML grid of [[run]] tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Reps per configuration; 100 for presets, overrides a config file.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed; 0 for presets, overrides a config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    /// Largest drop between consecutive singular values.
    Gap,
    /// Profile-likelihood elbow.
    Profile,
    /// Largest jump in complete-linkage merge heights.
    MergeHeight,
}

#[derive(Args, Debug)]
pub struct SelectKArgs {
    /// Spectrum CSV for gap and profile, dendrogram CSV for merge-height.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub strategy: Strategy,
    /// Which elbow, for the profile strategy.
    #[arg(long, default_value_t = 2)]
    pub which: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Embedding dimension of a trade view.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dim {
    Fixed(usize),
    /// First profile-likelihood elbow of the adjacency spectrum.
    Auto,
}

#[derive(Clone, Debug)]
pub struct TradeViewSpec {
    pub path: PathBuf,
    pub role: Role,
    pub d: Dim,
    pub k: usize,
}

fn parse_trade_view(s: &str) -> Result<TradeViewSpec, String> {
    let parts: Vec<&str> = s.rsplitn(4, ':').collect();
    let [k, d, role, path] = parts[..] else {
        return Err(format!("expected PATH:ROLE:D:K, got '{s}'"));
    };
    let role: Role = role.parse().map_err(|e: krafty::Error| e.to_string())?;
    let d = match d {
        "auto" => Dim::Auto,
        _ => Dim::Fixed(d.parse().map_err(|_| format!("dimension '{d}' is not a count or 'auto'"))?),
    };
    let k = k.parse().map_err(|_| format!("cluster count '{k}' is not a count"))?;
    Ok(TradeViewSpec {
        path: PathBuf::from(path),
        role,
        d,
        k,
    })
}

#[derive(Args, Debug)]
pub struct TradeArgs {
    /// An edge-list view as PATH:ROLE:D:K, ROLE exporter or importer, D the
    /// embedding dimension or `auto`, K the per-view cluster count.
    #[arg(long = "view", value_name = "PATH:ROLE:D:K", value_parser = parse_trade_view, required = true)]
    pub views: Vec<TradeViewSpec>,
    /// Vertex names, one per line, shared by every view. Without it each
    /// view covers the names in its own edge list and these must agree.
    #[arg(long)]
    pub universe: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value = "krafty")]
    pub method: Method,
    #[arg(long, default_value_t = 2)]
    pub elbow: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Raised when a replay produces different bytes.
#[derive(Debug)]
pub struct ReplayMismatch(pub Vec<String>);

impl std::fmt::Display for ReplayMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "outputs differ from the manifest: {}", self.0.join(", "))
    }
}

impl std::error::Error for ReplayMismatch {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ReplayMismatch>().is_some() {
        return 1;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<krafty::Error>() {
            return if e.is_numeric() { 3 } else { 2 };
        }
    }
    2
}

pub fn dispatch(command: &Command, argv: &[String]) -> anyhow::Result<()> {
    match command {
        Command::Cluster(a) => commands::cluster(a, argv),
        Command::Simulate(a) => commands::simulate(a, argv),
        Command::SelectK(a) => commands::select_k(a, argv),
        Command::Trade(a) => commands::trade(a, argv),
        Command::Replay(a) => commands::replay(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(&cli.command, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
