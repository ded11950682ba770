//! `cefs` — cross-entropy feature selection from the command line.
//!
//! Subcommands: `select` (run the optimizer on a CSV and emit a selection
//! JSON), `benchmark` (compare against the greedy baselines on a held-out
//! split), `sweep` (metric curves against subset size as CSV), and `report`
//! (render a benchmark JSON as a table or CSV).
//!
//! Exit codes: 0 success, 1 error, 2 success with warnings (the optimizer
//! hit its iteration cap; the result is still written).

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cefs_core::ce::{self, CEConfig, ExtractPolicy};
use cefs_core::data::{discretize, load_csv, split, Dataset, LabelSelector, SplitSpec};
use cefs_core::eval::{self, ClassifierSpec, Method, ProtocolConfig};
use cefs_core::report::{BenchmarkReport, SelectionReport};

use manifest::{ManifestConfig, RunManifest, SweepInfo};

/// Environment variable naming the default data directory; relative dataset
/// paths that do not resolve locally are retried under it.
const DATA_DIR_ENV: &str = "CEFS_DATA_DIR";

#[derive(Parser)]
#[command(name = "cefs", version, about = "Information-based feature selection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select a feature subset by cross-entropy optimization.
    Select(SelectArgs),
    /// Compare selection methods on a train/test split.
    Benchmark(BenchmarkArgs),
    /// Emit MCE and information-gap curves against subset size.
    Sweep(SweepArgs),
    /// Render a benchmark JSON as a table or CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Path to the CSV dataset.
    #[arg(long)]
    data: PathBuf,
    /// Label column: header name or 0-based index.
    #[arg(long)]
    label: String,
    /// Treat the first row as data, not a header.
    #[arg(long)]
    no_header: bool,
    /// Equal-frequency bins for real-valued feature columns.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Equal-frequency classes for a real-valued label.
    #[arg(long, default_value_t = 5)]
    label_bins: usize,
}

#[derive(Args)]
struct CeArgs {
    /// Seed for every random choice in the run.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Stopping tolerance on the elite threshold, in bits.
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Stopping lag d: compare gamma_t against gamma_{t-d}.
    #[arg(long, default_value_t = 5)]
    lag: usize,
    /// Coefficient in the elite fraction rho = coeff * m / S.
    #[arg(long, default_value_t = 0.05)]
    rho_coef: f64,
    /// Smoothing toward the previous model; 1.0 = pure elite mean.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Initial per-feature selection probability.
    #[arg(long, default_value_t = 0.5)]
    p_init: f64,
    /// Smallest per-iteration sample count (default: m).
    #[arg(long)]
    s_min: Option<usize>,
    /// Largest per-iteration sample count (default: 20 * s_min).
    #[arg(long)]
    s_max: Option<usize>,
    /// Disable sample-size adaptation; always draw s_max masks.
    #[arg(long)]
    static_s: bool,
    /// Mask extraction from the converged model.
    #[arg(long, default_value = "threshold", value_parser = parse_extract)]
    extract: ExtractPolicy,
    /// Objective penalty in bits per selected feature.
    #[arg(long, default_value_t = 0.0)]
    size_penalty: f64,
}

fn parse_extract(s: &str) -> Result<ExtractPolicy, String> {
    match s {
        "threshold" => Ok(ExtractPolicy::Threshold),
        "sample" => Ok(ExtractPolicy::Sample),
        other => Err(format!("unknown policy {other:?}; valid: threshold, sample")),
    }
}

impl CeArgs {
    fn to_config(&self) -> CEConfig {
        CEConfig {
            s_min: self.s_min,
            s_max: self.s_max,
            rho_coefficient: self.rho_coef,
            epsilon: self.epsilon,
            lag: self.lag,
            max_iters: self.max_iters,
            seed: self.seed,
            smoothing_alpha: self.alpha,
            p_init: self.p_init,
            extract_policy: self.extract,
            adaptive_s: !self.static_s,
            size_penalty: self.size_penalty,
        }
    }
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long, default_value_t = 0.9)]
    train_fraction: f64,
    /// Preserve per-class proportions in the split.
    #[arg(long)]
    stratified: bool,
}

impl SplitArgs {
    fn to_spec(&self, seed: u64) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            seed,
            stratified: self.stratified,
        }
    }
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    ce: CeArgs,
    /// Write the JSON here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    ce: CeArgs,
    #[command(flatten)]
    split: SplitArgs,
    /// Comma-separated subset of: ce, mim, cmim, mrmr, disr.
    #[arg(long, default_value = "ce,mim,cmim,mrmr,disr")]
    methods: String,
    /// Comma-separated subset of: nb-pooled, nb-diag, knn (or knn<k>).
    #[arg(long, default_value = "nb-pooled,nb-diag,knn")]
    classifiers: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    ce: CeArgs,
    #[command(flatten)]
    split: SplitArgs,
    /// Selection method driving the curve.
    #[arg(long)]
    method: String,
    /// Subset sizes: a single k, an inclusive range a..b, or a comma list.
    #[arg(long)]
    ks: String,
    #[arg(long, default_value = "nb-diag")]
    classifier: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Benchmark JSON produced by `cefs benchmark`.
    #[arg(long)]
    input: PathBuf,
    /// Output format: table or csv.
    #[arg(long, default_value = "table")]
    format: String,
}

#[derive(Serialize)]
struct Output<T: Serialize> {
    manifest: RunManifest,
    result: T,
}

fn resolve_data_path(path: &Path) -> PathBuf {
    if !path.exists() && path.is_relative() {
        if let Ok(dir) = std::env::var(DATA_DIR_ENV) {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

fn load_dataset(args: &DataArgs) -> anyhow::Result<(Dataset, PathBuf)> {
    let path = resolve_data_path(&args.data);
    let selector = LabelSelector::parse(&args.label);
    let dataset = load_csv(&path, &selector, !args.no_header)
        .with_context(|| format!("loading {}", path.display()))?;
    if dataset.rows_dropped > 0 {
        eprintln!(
            "note: dropped {} rows containing missing values",
            dataset.rows_dropped
        );
    }
    Ok((dataset, path))
}

fn write_output(target: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match target {
        Some(path) => fs::write(path, content)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{content}"),
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn parse_methods(arg: &str) -> anyhow::Result<Vec<Method>> {
    let mut methods = Vec::new();
    for token in arg.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let m = Method::from_str(token).map_err(|e| anyhow!("{e}"))?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    Ok(methods)
}

fn parse_classifiers(arg: &str) -> anyhow::Result<Vec<ClassifierSpec>> {
    let mut specs = Vec::new();
    for token in arg.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let spec = ClassifierSpec::from_str(token).map_err(|e| anyhow!("{e}"))?;
        if !specs.contains(&spec) {
            specs.push(spec);
        }
    }
    if specs.is_empty() {
        bail!("no classifiers given; valid: nb-pooled, nb-diag, knn");
    }
    Ok(specs)
}

/// `--ks` grammar: `N`, `A..B` (inclusive), or a comma list of either.
fn parse_ks(arg: &str, m: usize) -> anyhow::Result<Vec<usize>> {
    let mut ks = Vec::new();
    for token in arg.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((a, b)) = token.split_once("..") {
            let a: usize = a.trim().parse().context("range start")?;
            let b: usize = b.trim().trim_start_matches('=').parse().context("range end")?;
            if a > b {
                bail!("empty range {token:?}");
            }
            ks.extend(a..=b);
        } else {
            ks.push(token.parse().with_context(|| format!("bad k {token:?}"))?);
        }
    }
    if ks.is_empty() {
        bail!("--ks produced no values");
    }
    ks.sort_unstable();
    ks.dedup();
    if let Some(&bad) = ks.iter().find(|&&k| k < 1 || k > m) {
        bail!("k = {bad} out of range: the dataset has m = {m} features");
    }
    Ok(ks)
}

fn cmd_select(args: &SelectArgs) -> anyhow::Result<ExitCode> {
    let (dataset, path) = load_dataset(&args.data)?;
    let cfg = args.ce.to_config();
    let ddata = discretize(&dataset, args.data.bins, args.data.label_bins)?;
    let result = ce::run(&ddata, &cfg)?;
    let report = SelectionReport::new(&result, &ddata);

    let manifest = RunManifest::new(
        std::env::args().collect(),
        cfg.seed,
        &path,
        ManifestConfig {
            bins: args.data.bins,
            label_bins: args.data.label_bins,
            label: args.data.label.clone(),
            header: !args.data.no_header,
            ce: cfg,
            split: None,
            methods: None,
            classifiers: None,
            sweep: None,
        },
    )?;
    let converged = report.converged;
    write_output(
        args.output.as_deref(),
        &to_json(&Output {
            manifest,
            result: report,
        })?,
    )?;
    if converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("warning: iteration cap reached before convergence");
        Ok(ExitCode::from(2))
    }
}

fn cmd_benchmark(args: &BenchmarkArgs) -> anyhow::Result<ExitCode> {
    let methods = parse_methods(&args.methods)?;
    let specs = parse_classifiers(&args.classifiers)?;
    let (dataset, path) = load_dataset(&args.data)?;
    let cfg = args.ce.to_config();
    let protocol = ProtocolConfig {
        split: args.split.to_spec(cfg.seed),
        bins: args.data.bins,
        label_bins: args.data.label_bins,
    };
    let report = eval::benchmark(&dataset, &methods, &cfg, &protocol, &specs)?;

    let manifest = RunManifest::new(
        std::env::args().collect(),
        cfg.seed,
        &path,
        ManifestConfig {
            bins: args.data.bins,
            label_bins: args.data.label_bins,
            label: args.data.label.clone(),
            header: !args.data.no_header,
            ce: cfg,
            split: Some(protocol.split.clone()),
            methods: Some(methods.iter().map(|m| m.to_string()).collect()),
            classifiers: Some(specs.iter().map(|s| s.name()).collect()),
            sweep: None,
        },
    )?;
    let converged = report.ce.as_ref().is_none_or(|ce| ce.converged);
    write_output(
        args.output.as_deref(),
        &to_json(&Output {
            manifest,
            result: report,
        })?,
    )?;
    if converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("warning: iteration cap reached before convergence");
        Ok(ExitCode::from(2))
    }
}

fn format_mce(mce: Option<f64>) -> String {
    match mce {
        Some(v) => format!("{v:.6}"),
        None => "//".into(),
    }
}

fn cmd_sweep(args: &SweepArgs) -> anyhow::Result<ExitCode> {
    let method = Method::from_str(&args.method).map_err(|e| anyhow!("{e}"))?;
    let spec = ClassifierSpec::from_str(&args.classifier).map_err(|e| anyhow!("{e}"))?;
    let (dataset, path) = load_dataset(&args.data)?;
    let cfg = args.ce.to_config();
    let split_spec = args.split.to_spec(cfg.seed);
    let (train, test) = split(&dataset, &split_spec)?;
    let ddata = discretize(&train, args.data.bins, args.data.label_bins)?;
    let ks = parse_ks(&args.ks, ddata.m)?;
    let points = eval::sweep_cardinality(method, &train, &test, &ddata, &ks, &spec, &cfg)?;

    let manifest = RunManifest::new(
        std::env::args().collect(),
        cfg.seed,
        &path,
        ManifestConfig {
            bins: args.data.bins,
            label_bins: args.data.label_bins,
            label: args.data.label.clone(),
            header: !args.data.no_header,
            ce: cfg,
            split: Some(split_spec),
            methods: None,
            classifiers: None,
            sweep: Some(SweepInfo {
                method: method.to_string(),
                classifier: spec.name(),
                ks: ks.clone(),
            }),
        },
    )?;

    let mut out = format!("# manifest: {}\n", serde_json::to_string(&manifest)?);
    out.push_str("k,mce,delta_ir\n");
    for p in &points {
        let mce = p.mce.map_or("nan".to_string(), |v| v.to_string());
        out.push_str(&format!("{},{},{}\n", p.k, mce, p.delta_ir));
    }
    write_output(args.output.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(args: &ReportArgs) -> anyhow::Result<ExitCode> {
    let raw = fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let value: serde_json::Value = serde_json::from_str(&raw)?;
    // Accept both the {manifest, result} wrapper and a bare report.
    let report: BenchmarkReport = if value.get("result").is_some() {
        serde_json::from_value(value["result"].clone())?
    } else {
        serde_json::from_value(value)?
    };

    match args.format.as_str() {
        "csv" => {
            println!("method,classifier,cardinality,mce,delta_ir,delta_t");
            for r in &report.records {
                println!(
                    "{},{},{},{},{},{}",
                    r.method,
                    r.classifier,
                    r.cardinality,
                    r.mce.map_or("nan".to_string(), |v| v.to_string()),
                    r.delta_ir,
                    r.delta_t
                );
            }
        }
        "table" => {
            println!(
                "dataset: {}   seed: {}{}",
                report.dataset,
                report.seed,
                report
                    .mrmr_variant
                    .as_deref()
                    .map(|v| format!("   mrmr: {v} form"))
                    .unwrap_or_default()
            );
            println!(
                "{:<8} {:<10} {:>11} {:>10} {:>12} {:>10}",
                "method", "classifier", "cardinality", "MCE", "dI_r", "dt[s]"
            );
            for r in &report.records {
                println!(
                    "{:<8} {:<10} {:>11} {:>10} {:>12.6} {:>10.3}",
                    r.method,
                    r.classifier,
                    r.cardinality,
                    format_mce(r.mce),
                    r.delta_ir,
                    r.delta_t
                );
            }
            if let Some(ce) = &report.ce {
                println!(
                    "ce: {} features, objective {:.6} bits, H(y) {:.6} bits, {} iterations{}",
                    ce.selected_indices.len(),
                    ce.objective_bits,
                    ce.entropy_y_bits,
                    ce.iterations,
                    if ce.converged { "" } else { " (not converged)" }
                );
            }
        }
        other => bail!("unknown format {other:?}; valid: table, csv"),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            let benign = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if benign {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };

    let outcome = match &cli.command {
        Command::Select(args) => cmd_select(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Report(args) => cmd_report(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
