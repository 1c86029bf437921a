//! `laggraph`: deterministic command-line front end for lagged causal graph
//! discovery.
//!
//! Four subcommands cover the full benchmark loop:
//!
//! - `generate` — synthesize a dataset with a known ground-truth graph;
//! - `discover` — learn a causal graph from a dataset CSV;
//! - `evaluate` — score a predicted graph against a ground truth;
//! - `fit-report` — measure the train/test MSE gap across sample sizes.
//!
//! Every command writes a `manifest.json` recording its fully-resolved
//! configuration; manifest plus seed determine all outputs byte-for-byte.
//! Exit codes are stable for scripting: 0 success, 1 usage or validation
//! error, 2 runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use laggraph::datagen::{generate_dataset, GenConfig};
use laggraph::dataset::Dataset;
use laggraph::discovery::discover;
use laggraph::fit::{fit_report, write_fit_csv};
use laggraph::graph::CausalGraph;
use laggraph::io::{write_attention_csv, write_trace_csv, Manifest, RunConfigFile};
use laggraph::metrics::MetricsReport;
use laggraph::Error;

#[derive(Parser)]
#[command(
    name = "laggraph",
    version,
    about = "Time-lagged causal graph discovery from multivariate time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with a known ground-truth graph.
    Generate(GenerateArgs),
    /// Discover a causal graph from a dataset CSV.
    Discover(DiscoverArgs),
    /// Score a predicted graph against a ground-truth graph.
    Evaluate(EvaluateArgs),
    /// Measure the train/test MSE gap across sample sizes.
    FitReport(FitReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// TOML run configuration with an optional [generate] table.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for dataset.csv, truth.graph, and manifest.json.
    #[arg(long)]
    out_dir: PathBuf,
    /// Number of variables.
    #[arg(long)]
    n: Option<usize>,
    /// Number of causal edges.
    #[arg(long)]
    d: Option<usize>,
    /// Series length (timesteps).
    #[arg(long)]
    t: Option<usize>,
    /// Largest possible edge lag.
    #[arg(long)]
    max_lag: Option<usize>,
    /// Standard deviation of the additive noise.
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Master seed for graph, roots, and noise.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated series lengths; sweep mode writes one `t_<size>`
    /// subdirectory per entry, all sharing the same seed.
    #[arg(long, conflicts_with = "t")]
    t_list: Option<String>,
}

#[derive(Args)]
struct DiscoverArgs {
    /// Input dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// TOML run configuration with an optional [discovery] table.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for pred.graph, attention.csv, trace.csv, manifest.json.
    #[arg(long)]
    out_dir: PathBuf,
    /// Treat the CSV as headerless; variable names become x0..x{n-1}.
    #[arg(long)]
    no_header: bool,
    /// Keep self-loops in the output graph.
    #[arg(long)]
    self_causation: bool,
    /// Override the training seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the epoch count from the config file.
    #[arg(long)]
    epochs: Option<usize>,
    /// Override the extraction threshold from the config file.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Predicted graph file.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth graph file.
    #[arg(long)]
    truth: PathBuf,
    /// Count self-loops as ordinary edges instead of dropping them.
    #[arg(long)]
    self_causation: bool,
    /// Optional directory for metrics.txt, metrics.csv, and manifest.json.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct FitReportArgs {
    /// TOML run configuration; [generate] sets the synthetic data family,
    /// [discovery] the model trained on each prefix.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated series lengths to measure.
    #[arg(long)]
    sizes: String,
    /// Generation seeds averaged per size.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Directory for fit.csv and manifest.json.
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests print to stdout and succeed; real
            // usage errors go to stderr and exit 1.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Discover(args) => cmd_discover(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::FitReport(args) => cmd_fit_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e
                .downcast_ref::<Error>()
                .is_some_and(Error::is_validation);
            ExitCode::from(if validation { 1 } else { 2 })
        }
    }
}

/// Loads the run configuration file, or defaults when none is given.
fn load_run_config(path: Option<&PathBuf>) -> anyhow::Result<RunConfigFile> {
    match path {
        Some(path) => Ok(RunConfigFile::read(path)?),
        None => Ok(RunConfigFile::default()),
    }
}

/// Parses a comma-separated list of positive sizes.
fn parse_size_list(text: &str) -> anyhow::Result<Vec<usize>> {
    let sizes = text
        .split(',')
        .map(|field| {
            field
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("invalid size {:?} in list", field.trim())))
        })
        .collect::<Result<Vec<usize>, Error>>()?;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::Config("sizes must be positive integers".into()).into());
    }
    Ok(sizes)
}

/// Creates `dir` (and parents), mapping failures onto the shared error type.
fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(())
}

/// Generates one dataset/truth pair plus manifest into `dir`.
fn generate_into(gen: &GenConfig, dir: &Path) -> anyhow::Result<()> {
    ensure_dir(dir)?;
    let (dataset, truth) = generate_dataset(gen)
        .with_context(|| format!("generating into {}", dir.display()))?;
    dataset.write_csv(&dir.join("dataset.csv"))?;
    truth.graph().write(&dir.join("truth.graph"))?;
    let mut manifest = Manifest::new("generate", &json!({ "generate": gen }))?;
    manifest.outputs = vec![
        "dataset.csv".into(),
        "truth.graph".into(),
    ];
    manifest.write(&dir.join("manifest.json"))?;
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> anyhow::Result<()> {
    let file_cfg = load_run_config(args.config.as_ref())?;
    let mut gen = file_cfg.generate.unwrap_or_default();
    if let Some(n) = args.n {
        gen.n = n;
    }
    if let Some(d) = args.d {
        gen.d = d;
    }
    if let Some(t) = args.t {
        gen.t_len = t;
    }
    if let Some(max_lag) = args.max_lag {
        gen.max_lag = max_lag;
    }
    if let Some(noise_sigma) = args.noise_sigma {
        gen.noise_sigma = noise_sigma;
    }
    if let Some(seed) = args.seed {
        gen.seed = seed;
    }

    if let Some(list) = &args.t_list {
        let sizes = parse_size_list(list)?;
        for &t in &sizes {
            GenConfig { t_len: t, ..gen.clone() }.validate()?;
        }
        sizes.par_iter().try_for_each(|&t| {
            let cell = GenConfig { t_len: t, ..gen.clone() };
            generate_into(&cell, &args.out_dir.join(format!("t_{t}")))
        })?;
        println!(
            "generated {} sweep cells under {}",
            sizes.len(),
            args.out_dir.display()
        );
    } else {
        gen.validate()?;
        generate_into(&gen, &args.out_dir)?;
        println!(
            "generated {} variables x {} timesteps ({} edges) into {}",
            gen.n,
            gen.t_len,
            gen.d,
            args.out_dir.display()
        );
    }
    Ok(())
}

fn cmd_discover(args: DiscoverArgs) -> anyhow::Result<()> {
    let file_cfg = load_run_config(args.config.as_ref())?;
    let mut cfg = file_cfg.discovery.unwrap_or_default();
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(epochs) = args.epochs {
        cfg.epochs = epochs;
    }
    if let Some(threshold) = args.threshold {
        cfg.threshold = threshold;
    }
    if args.self_causation {
        cfg.self_causation = true;
    }

    let dataset = Dataset::read_csv(&args.data, !args.no_header)?;
    let outcome = discover(&dataset, &cfg)
        .with_context(|| format!("discovering from {}", args.data.display()))?;

    ensure_dir(&args.out_dir)?;
    outcome.graph.write(&args.out_dir.join("pred.graph"))?;
    write_attention_csv(
        dataset.names(),
        &outcome.trace.final_softmax_attention,
        &args.out_dir.join("attention.csv"),
    )?;
    write_trace_csv(&outcome.trace, &args.out_dir.join("trace.csv"))?;
    let mut manifest = Manifest::new(
        "discover",
        &json!({ "discovery": cfg, "no_header": args.no_header }),
    )?;
    manifest.inputs = vec![args.data.display().to_string()];
    manifest.outputs = vec![
        "pred.graph".into(),
        "attention.csv".into(),
        "trace.csv".into(),
    ];
    manifest.write(&args.out_dir.join("manifest.json"))?;

    println!(
        "discovered {} edge(s) over {} variables into {}",
        outcome.graph.d(),
        dataset.n(),
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let pred = CausalGraph::read(&args.pred)?;
    let truth = CausalGraph::read(&args.truth)?;
    let report = MetricsReport::compare(&truth, &pred, args.self_causation)?;
    print!("{}", report.to_key_value_string());

    if let Some(dir) = &args.out_dir {
        ensure_dir(dir)?;
        report.write_key_value(&dir.join("metrics.txt"))?;
        report.write_csv(&dir.join("metrics.csv"))?;
        let mut manifest = Manifest::new(
            "evaluate",
            &json!({ "self_causation": args.self_causation }),
        )?;
        manifest.inputs = vec![
            args.pred.display().to_string(),
            args.truth.display().to_string(),
        ];
        manifest.outputs = vec!["metrics.txt".into(), "metrics.csv".into()];
        manifest.write(&dir.join("manifest.json"))?;
    }
    Ok(())
}

fn cmd_fit_report(args: FitReportArgs) -> anyhow::Result<()> {
    let file_cfg = load_run_config(args.config.as_ref())?;
    let gen = file_cfg.generate.unwrap_or_default();
    let discovery = file_cfg.discovery.unwrap_or_default();
    let sizes = parse_size_list(&args.sizes)?;

    let rows = fit_report(&gen, &discovery, &sizes, args.seeds)?;
    println!("size,train_mse,test_mse,gap");
    for row in &rows {
        println!(
            "{},{},{},{}",
            row.size, row.train_mse, row.test_mse, row.gap
        );
    }

    ensure_dir(&args.out_dir)?;
    write_fit_csv(&rows, &args.out_dir.join("fit.csv"))?;
    let mut manifest = Manifest::new(
        "fit-report",
        &json!({
            "generate": gen,
            "discovery": discovery,
            "sizes": sizes,
            "seeds": args.seeds,
        }),
    )?;
    manifest.outputs = vec!["fit.csv".into()];
    manifest.write(&args.out_dir.join("manifest.json"))?;
    Ok(())
}
