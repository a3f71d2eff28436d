use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Parser;
use krafty::ingest::{self, TradeView};
use krafty::joint::{self, JointOptions, JointResult, Method, ViewInput, RANK_TOL};
use krafty::selectk::{largest_gap, merge_height_elbow, profile_likelihood_elbow};
use krafty::{io, sim, Embedding};
use serde::Serialize;
use serde_json::json;

use crate::output::{json_bytes, name_value_csv, sha256_file, Manifest, Outputs, MANIFEST};
use crate::{
    Cli, ClusterArgs, Command, Dim, ReplayArgs, ReplayMismatch, SelectKArgs, SimulateArgs, Strategy, TradeArgs,
    ViewKind,
};

fn timings(start: Instant) -> Result<Vec<u8>> {
    json_bytes(&json!({ "total_ms": start.elapsed().as_secs_f64() * 1e3 }))
}

fn load_view(kind: ViewKind, path: &Path) -> krafty::Result<ViewInput> {
    match kind {
        ViewKind::Z => Ok(ViewInput::Assignment(io::read_assignment(path)?)),
        ViewKind::U => ViewInput::embedding(Embedding::new(io::read_matrix(path)?)),
        ViewKind::X => Ok(ViewInput::Features(io::read_matrix(path)?)),
    }
}

fn run_joint(method: Method, views: &[ViewInput], opts: &JointOptions) -> krafty::Result<JointResult> {
    match method {
        Method::Krafty => joint::krafty(views, opts),
        Method::Mase => joint::mase(views, opts),
    }
}

pub fn cluster(args: &ClusterArgs, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    if args.views.len() < 2 {
        bail!("need at least 2 --view arguments, got {}", args.views.len());
    }
    let views = args
        .views
        .iter()
        .map(|v| load_view(v.kind, &v.path))
        .collect::<krafty::Result<Vec<_>>>()?;
    let opts = JointOptions {
        k: args.k,
        clusterer: args.clusterer,
        which_elbow: args.elbow,
        seed: args.seed,
        regularize: args.regularize,
        ..Default::default()
    };
    let r = run_joint(args.method, &views, &opts)?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }

    let view_info: Vec<_> = args
        .views
        .iter()
        .zip(&views)
        .map(|(spec, v)| json!({ "path": spec.path, "kind": v.kind(), "columns": v.dim() }))
        .collect();
    let summary = json!({
        "n": r.labels.n(),
        "k_used": r.k_used,
        "k_source": r.k_source.as_str(),
        "method": r.method.as_str(),
        "clusterer": args.clusterer.as_str(),
        "which_elbow": args.elbow,
        "elbows": r.elbow.as_ref().map(|e| &e.elbows),
        "numerical_rank": r.spectrum.numerical_rank(RANK_TOL),
        "seed": args.seed,
        "views": view_info,
        "warnings": r.warnings,
    });
    let mut out = Outputs::default();
    out.add("labels.csv", io::assignment_csv(&r.labels));
    out.add("spectrum.csv", io::spectrum_csv(&r.spectrum));
    if let Some(d) = &r.dendrogram {
        out.add("dendrogram.csv", io::dendrogram_csv(d));
    }
    out.add("summary.json", json_bytes(&summary)?);
    out.add_timing("timings.json", timings(start)?);
    let inputs: Vec<PathBuf> = args.views.iter().map(|v| v.path.clone()).collect();
    let manifest = Manifest::new("cluster", argv, args.seed, &inputs)?;
    out.commit(&args.out, manifest)?;
    eprintln!(
        "{} items in {} clusters (k {}); outputs in {}",
        r.labels.n(),
        r.labels.k(),
        r.k_source.as_str(),
        args.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ConfigSummary<'a> {
    config: &'a sim::SimConfig,
    summary: &'a sim::SummaryRow,
}

pub fn simulate(args: &SimulateArgs, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    let (grid, source, inputs) = match (&args.preset, &args.config) {
        (Some(name), _) => {
            let g = sim::preset(name, args.reps.unwrap_or(100), args.seed.unwrap_or(0))?;
            (g, json!({ "preset": name }), Vec::new())
        }
        (None, Some(path)) => {
            let mut g = sim::load_grid(path)?;
            for c in &mut g {
                if let Some(r) = args.reps {
                    c.reps = r;
                }
                if let Some(s) = args.seed {
                    c.seed = s;
                }
            }
            sim::validate_grid(&g)?;
            (g, json!({ "config": path }), vec![path.clone()])
        }
        (None, None) => bail!("give --preset or --config"),
    };
    let exp = match args.threads {
        Some(0) => bail!("--threads must be at least 1"),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .context("starting worker threads")?
            .install(|| sim::run_experiment(&grid))?,
        None => sim::run_experiment(&grid)?,
    };
    let failures: usize = exp.summary.iter().map(|s| s.failures).sum();
    let rows: Vec<ConfigSummary> = exp
        .grid
        .iter()
        .zip(&exp.summary)
        .map(|(config, summary)| ConfigSummary { config, summary })
        .collect();
    let summary = json!({
        "source": source,
        "configs": rows.len(),
        "runs": exp.records.len(),
        "failures": failures,
        "rows": rows,
    });
    let mut out = Outputs::default();
    out.add("results.csv", exp.results_csv()?);
    out.add("summary.csv", exp.summary_csv()?);
    out.add("summary.json", json_bytes(&summary)?);
    out.add_timing("timings.csv", exp.timings_csv());
    out.add_timing("timings.json", timings(start)?);
    let mut manifest = Manifest::new("simulate", argv, args.seed.unwrap_or(0), &inputs)?;
    manifest.config_path = args.config.clone();
    out.commit(&args.out, manifest)?;
    eprintln!(
        "{} configurations, {} runs, {failures} failed; outputs in {}",
        rows.len(),
        exp.records.len(),
        args.out.display()
    );
    Ok(())
}

pub fn select_k(args: &SelectKArgs, argv: &[String]) -> Result<()> {
    let mut scores = csv::Writer::from_writer(Vec::new());
    let (k_hat, detail) = match args.strategy {
        Strategy::Gap => {
            let s = io::read_spectrum(&args.input)?;
            let k = largest_gap(&s)?;
            scores.write_record(["k", "gap"])?;
            for (i, g) in s.gaps().iter().enumerate() {
                scores.write_record([(i + 1).to_string(), format!("{g:?}")])?;
            }
            (k, json!({ "strategy": "gap" }))
        }
        Strategy::Profile => {
            let s = io::read_spectrum(&args.input)?;
            let e = profile_likelihood_elbow(&s, args.which)?;
            // the final stage searched the values after the previous elbow
            let base = e.elbows.len().checked_sub(2).map_or(0, |i| e.elbows[i]);
            scores.write_record(["k", "log_likelihood"])?;
            for (q, v) in e.profile.iter().enumerate() {
                scores.write_record([(base + q + 1).to_string(), format!("{v:?}")])?;
            }
            (e.k_hat, json!({ "strategy": "profile", "which": args.which, "elbows": e.elbows }))
        }
        Strategy::MergeHeight => {
            let d = io::read_dendrogram(&args.input)?;
            let e = merge_height_elbow(&d)?;
            let h = d.heights();
            scores.write_record(["step", "k", "height", "jump"])?;
            for (m, height) in h.iter().enumerate() {
                let jump = h.get(m + 1).map_or(String::new(), |next| format!("{:?}", next - height));
                scores.write_record([(m + 2).to_string(), (d.n() - m - 1).to_string(), format!("{height:?}"), jump])?;
            }
            (
                e.k_hat,
                json!({
                    "strategy": "merge-height",
                    "step": e.step,
                    "jump": e.gap,
                    "low_confidence": e.low_confidence,
                }),
            )
        }
    };
    let mut selection = detail;
    selection["k_hat"] = json!(k_hat);
    let mut out = Outputs::default();
    out.add(
        "scores.csv",
        scores.into_inner().map_err(|e| anyhow::anyhow!("csv encoding: {e}"))?,
    );
    out.add("selection.json", json_bytes(&selection)?);
    let manifest = Manifest::new("select-k", argv, 0, std::slice::from_ref(&args.input))?;
    out.commit(&args.out, manifest)?;
    println!("{k_hat}");
    Ok(())
}

pub fn trade(args: &TradeArgs, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    let universe = args.universe.as_deref().map(ingest::load_universe).transpose()?;
    let mut views = Vec::with_capacity(args.views.len());
    for spec in &args.views {
        let network = ingest::load_edge_list(&spec.path, universe.as_deref())?;
        let d = match spec.d {
            Dim::Fixed(d) => d,
            Dim::Auto => ingest::suggest_dimension(&network, 1)?.k_hat,
        };
        views.push(TradeView {
            network,
            role: spec.role,
            d,
            k: spec.k,
        });
    }
    let r = ingest::trade_pipeline(&views, args.k, args.method, args.elbow, args.seed)?;
    for w in &r.joint.warnings {
        eprintln!("warning: {w}");
    }

    let mut out = Outputs::default();
    let names = || r.vertices.iter().map(String::as_str);
    out.add(
        "membership.csv",
        name_value_csv(["vertex_name", "cluster"], names().zip(r.joint.labels.labels().iter()))?,
    );
    for (v, (labels, view)) in r.view_labels.iter().zip(&views).enumerate() {
        out.add(
            format!("view_{}_{}.csv", v + 1, view.role),
            name_value_csv(["vertex_name", "cluster"], names().zip(labels.labels().iter()))?,
        );
    }
    out.add("spectrum.csv", io::spectrum_csv(&r.joint.spectrum));
    let mut excluded = csv::Writer::from_writer(Vec::new());
    excluded.write_record(["vertex_name"])?;
    for name in &r.excluded {
        excluded.write_record([name])?;
    }
    out.add(
        "excluded.csv",
        excluded.into_inner().map_err(|e| anyhow::anyhow!("csv encoding: {e}"))?,
    );
    let view_info: Vec<_> = args
        .views
        .iter()
        .zip(&views)
        .zip(&r.view_labels)
        .map(|((spec, v), labels)| {
            json!({ "path": spec.path, "role": v.role.as_str(), "d": v.d, "k": v.k, "clusters": labels.k() })
        })
        .collect();
    let summary = json!({
        "vertices": r.vertices.len(),
        "excluded": r.excluded.len(),
        "k_used": r.joint.k_used,
        "k_source": r.joint.k_source.as_str(),
        "method": r.joint.method.as_str(),
        "which_elbow": args.elbow,
        "elbows": r.joint.elbow.as_ref().map(|e| &e.elbows),
        "seed": args.seed,
        "views": view_info,
        "warnings": r.joint.warnings,
    });
    out.add("summary.json", json_bytes(&summary)?);
    out.add_timing("timings.json", timings(start)?);
    let mut inputs: Vec<PathBuf> = args.views.iter().map(|v| v.path.clone()).collect();
    inputs.extend(args.universe.clone());
    let manifest = Manifest::new("trade", argv, args.seed, &inputs)?;
    out.commit(&args.out, manifest)?;
    eprintln!(
        "{} vertices in {} clusters, {} excluded; outputs in {}",
        r.vertices.len(),
        r.joint.labels.k(),
        r.excluded.len(),
        args.out.display()
    );
    Ok(())
}

/// `argv` with the value of `--out` replaced.
fn with_out(argv: &[String], out: &Path) -> Result<Vec<String>> {
    let out = out.display().to_string();
    let mut args = argv.to_vec();
    let mut found = false;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--out" && i + 1 < args.len() {
            args[i + 1] = out.clone();
            found = true;
            i += 1;
        } else if args[i].starts_with("--out=") {
            args[i] = format!("--out={out}");
            found = true;
        }
        i += 1;
    }
    if !found {
        bail!("manifest arguments have no --out");
    }
    Ok(args)
}

pub fn replay(args: &ReplayArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.manifest).map_err(|source| krafty::Error::Io {
        path: args.manifest.clone(),
        source,
    })?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| anyhow::anyhow!("{}: {e}", args.manifest.display()))?;
    let out = std::path::absolute(&args.out).context("resolving --out")?;
    let argv = with_out(&manifest.args, &out)?;
    let cli = Cli::try_parse_from(std::iter::once("krafty".to_string()).chain(argv.iter().cloned()))
        .map_err(|e| anyhow::anyhow!("manifest arguments: {e}"))?;
    if matches!(cli.command, Command::Replay(_)) {
        bail!("a manifest cannot replay another replay");
    }
    std::env::set_current_dir(&manifest.cwd)
        .map_err(|source| krafty::Error::Io { path: manifest.cwd.clone(), source })?;
    for input in &manifest.inputs {
        if sha256_file(Path::new(&input.path))? != input.sha256 {
            bail!("input {} changed since the manifest was written", input.path);
        }
    }
    crate::dispatch(&cli.command, &argv)?;
    let mut differ = Vec::new();
    for o in &manifest.outputs {
        if sha256_file(&out.join(&o.path))? != o.sha256 {
            differ.push(o.path.clone());
        }
    }
    if !differ.is_empty() {
        return Err(ReplayMismatch(differ).into());
    }
    eprintln!("{} outputs match {}", manifest.outputs.len(), MANIFEST);
    Ok(())
}
