//! Benchmark CLI: budget-sweep experiments, result aggregation, bound
//! diagnostics, and synthetic dataset generation.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use featprop::graph::{generate_sbm, SbmConfig};
use featprop::harness::{
    bound_report, emit_csv, emit_plot_data, read_csv, read_pools_json, run_experiment, summarize,
    write_pools_json, ExperimentConfig, ExperimentOutput, SummaryRow,
};
use featprop::{load_dataset, normalized_adjacency, propagate, save_dataset_json, Dataset, NodeSet};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "featprop",
    about = "Active-learning benchmark for GCN node classification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a budget sweep over strategies and seeds, writing CSV results.
    Run(Box<RunArgs>),
    /// Aggregate a results CSV into per-strategy mean +/- stddev.
    Summarize {
        /// Results CSV produced by `run`.
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Evaluate both clustering objectives for every recorded pool.
    BoundReport {
        /// Output directory of a previous `run`.
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Generate a stochastic block model dataset as JSON.
    GenSbm(GenSbmArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Dataset path (stem for content-cites, file for json).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Dataset format: content-cites | json.
    #[arg(long)]
    format: Option<String>,
    /// Comma-separated strategy names (default: all seven).
    #[arg(long)]
    strategies: Option<String>,
    /// Comma-separated budgets (default: 10,20,40,80,160).
    #[arg(long)]
    budgets: Option<String>,
    /// Either a seed count N (runs seeds 0..N-1) or a comma-separated list.
    #[arg(long)]
    seeds: Option<String>,
    /// Size of the uniformly drawn initial labeled pool.
    #[arg(long = "initial-pool")]
    initial_pool: Option<usize>,
    /// Model variant: gcn | sgc.
    #[arg(long)]
    model: Option<String>,
    /// Number of propagation steps K for the selection distance.
    #[arg(long = "prop-steps")]
    prop_steps: Option<usize>,
    /// Hidden layer width.
    #[arg(long)]
    hidden: Option<usize>,
    /// Training epochs per budget.
    #[arg(long)]
    epochs: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// L2 weight decay (first layer unless --decay-all-layers).
    #[arg(long = "weight-decay")]
    weight_decay: Option<f64>,
    /// Apply weight decay to both layers.
    #[arg(long = "decay-all-layers")]
    decay_all_layers: bool,
    /// Skip the unit-L1 row normalization of input features.
    #[arg(long = "no-row-normalize")]
    no_row_normalize: bool,
    /// Representation for coreset selection: final | hidden.
    #[arg(long)]
    representation: Option<String>,
    /// Record zeros instead of wall-clock timings (byte-reproducible output).
    #[arg(long = "no-timings")]
    no_timings: bool,
    /// JSON config file mirroring these flags; flags override the file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenSbmArgs {
    /// Comma-separated block sizes, e.g. 50,50.
    #[arg(long)]
    blocks: String,
    /// Within-block edge probability.
    #[arg(long = "p-in")]
    p_in: f64,
    /// Cross-block edge probability.
    #[arg(long = "p-out")]
    p_out: f64,
    /// Stddev of gaussian feature noise.
    #[arg(long = "feature-noise", default_value_t = 0.5)]
    feature_noise: f64,
    #[arg(long)]
    seed: u64,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(*args),
        Command::Summarize { input } => cmd_summarize(&input),
        Command::BoundReport { input } => cmd_bound_report(&input),
        Command::GenSbm(args) => cmd_gen_sbm(args),
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| anyhow!("bad {what} '{t}': {e}")))
        .collect()
}

/// `--seeds 5` means five seeds 0..4; a comma-separated list is explicit.
fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    if text.contains(',') {
        parse_list(text, "seed")
    } else {
        let count: u64 = text
            .trim()
            .parse()
            .map_err(|e| anyhow!("bad seed count '{text}': {e}"))?;
        Ok((0..count).collect())
    }
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config file {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(dataset) = &args.dataset {
        cfg.dataset_path = Some(dataset.clone());
    }
    if let Some(format) = &args.format {
        cfg.dataset_format = format.parse().map_err(|e: String| anyhow!(e))?;
    }
    if let Some(strategies) = &args.strategies {
        cfg.strategies = parse_list(strategies, "strategy")?;
    }
    if let Some(budgets) = &args.budgets {
        cfg.budgets = parse_list(budgets, "budget")?;
    }
    if let Some(seeds) = &args.seeds {
        cfg.seeds = parse_seeds(seeds)?;
    }
    if let Some(initial_pool) = args.initial_pool {
        cfg.initial_pool_size = initial_pool;
    }
    if let Some(model) = &args.model {
        cfg.variant = model.parse().map_err(|e: String| anyhow!(e))?;
    }
    if let Some(prop_steps) = args.prop_steps {
        cfg.prop_steps = prop_steps;
    }
    if let Some(hidden) = args.hidden {
        cfg.train.hidden_size = hidden;
    }
    if let Some(epochs) = args.epochs {
        cfg.train.epochs = epochs;
    }
    if let Some(lr) = args.lr {
        cfg.train.learning_rate = lr;
    }
    if let Some(weight_decay) = args.weight_decay {
        cfg.train.weight_decay = weight_decay;
    }
    if args.decay_all_layers {
        cfg.train.decay_all_layers = true;
    }
    if args.no_row_normalize {
        cfg.row_normalize = false;
    }
    if let Some(representation) = &args.representation {
        cfg.representation = representation.parse().map_err(|e: String| anyhow!(e))?;
    }
    if args.no_timings {
        cfg.zero_timings = true;
    }
    Ok(cfg)
}

fn load_configured_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let path = cfg
        .dataset_path
        .as_ref()
        .ok_or_else(|| anyhow!("no dataset given (use --dataset or the config file)"))?;
    let opts = featprop::LoadOptions {
        row_normalize: cfg.row_normalize,
    };
    load_dataset(path, cfg.dataset_format, &opts)
        .with_context(|| format!("loading dataset {}", path.display()))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let cfg = build_config(&args)?;
    let dataset = load_configured_dataset(&cfg)?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;

    eprintln!(
        "running {} strategies x {} seeds x {} budgets on '{}' (n={}, {} edges, d={}, C={})",
        cfg.strategies.len(),
        cfg.seeds.len(),
        cfg.budgets.len(),
        dataset.name,
        dataset.n_nodes(),
        dataset.graph.n_edges(),
        dataset.features.n_cols(),
        dataset.labels.n_classes()
    );
    let output = run_experiment(&cfg, &dataset)?;
    write_run_outputs(&cfg, &output, &args.out)?;

    if !output.records.is_empty() {
        print_summary(&summarize(&output.records)?);
    }
    for failure in &output.failures {
        eprintln!(
            "FAILED cell strategy={} seed={} budget={}: {}",
            failure.strategy,
            failure.seed,
            failure.budget.map_or("bootstrap".into(), |b| b.to_string()),
            failure.message
        );
    }
    eprintln!(
        "wrote {} records to {}",
        output.records.len(),
        args.out.join("results.csv").display()
    );
    if output.failures.is_empty() {
        Ok(())
    } else {
        bail!("{} cell(s) failed", output.failures.len());
    }
}

fn write_run_outputs(cfg: &ExperimentConfig, output: &ExperimentOutput, dir: &Path) -> Result<()> {
    emit_csv(&output.records, &dir.join("results.csv"))?;
    emit_plot_data(&output.records, &dir.join("plot_macro_f1.csv"))?;
    write_pools_json(&output.pools, &dir.join("pools.json"))?;
    let config_text = serde_json::to_string_pretty(cfg).context("serializing run config")?;
    fs::write(dir.join("run_config.json"), config_text)
        .with_context(|| format!("writing {}", dir.join("run_config.json").display()))?;
    Ok(())
}

fn print_summary(rows: &[SummaryRow]) {
    println!(
        "{:<18} {:>6} {:>16} {:>16} {:>16}",
        "strategy", "runs", "macro_f1", "micro_f1", "accuracy"
    );
    for row in rows {
        println!(
            "{:<18} {:>6} {:>7.2} ± {:>5.2} {:>7.2} ± {:>5.2} {:>7.2} ± {:>5.2}",
            row.strategy,
            row.n_runs,
            100.0 * row.macro_f1_mean,
            100.0 * row.macro_f1_std,
            100.0 * row.micro_f1_mean,
            100.0 * row.micro_f1_std,
            100.0 * row.accuracy_mean,
            100.0 * row.accuracy_std,
        );
    }
}

fn cmd_summarize(input: &Path) -> Result<()> {
    let records = read_csv(input)?;
    print_summary(&summarize(&records)?);
    Ok(())
}

fn cmd_bound_report(dir: &Path) -> Result<()> {
    let config_text = fs::read_to_string(dir.join("run_config.json"))
        .with_context(|| format!("reading {}", dir.join("run_config.json").display()))?;
    let cfg: ExperimentConfig = serde_json::from_str(&config_text)?;
    let dataset = load_configured_dataset(&cfg)?;
    let adjacency = normalized_adjacency(&dataset.graph);
    let propagated = propagate(&adjacency, &dataset.features, cfg.prop_steps)?;
    let pools = read_pools_json(&dir.join("pools.json"))?;

    // Regroup as (seed, budget) -> strategy -> pool.
    let mut groups: std::collections::BTreeMap<(u64, usize), std::collections::BTreeMap<String, NodeSet>> =
        Default::default();
    for (strategy, by_seed) in &pools {
        for (&seed, by_budget) in by_seed {
            for (&budget, pool) in by_budget {
                groups
                    .entry((seed, budget))
                    .or_default()
                    .insert(strategy.clone(), pool.iter().copied().collect());
            }
        }
    }

    let mut csv_text =
        String::from("seed,budget,strategy,kmedoids_obj,kcenter_obj,featprop_attains_min\n");
    println!(
        "{:>6} {:>8} {:<18} {:>14} {:>14} {:>10}",
        "seed", "budget", "strategy", "kmedoids_obj", "kcenter_obj", "fp_best"
    );
    for ((seed, budget), by_strategy) in &groups {
        let report = bound_report(&propagated, by_strategy)?;
        let flag = report
            .featprop_attains_min
            .map_or("-".to_string(), |b| b.to_string());
        for row in &report.rows {
            println!(
                "{seed:>6} {budget:>8} {:<18} {:>14.6} {:>14.6} {:>10}",
                row.strategy, row.kmedoids_objective, row.kcenter_objective, flag
            );
            csv_text.push_str(&format!(
                "{seed},{budget},{},{},{},{flag}\n",
                row.strategy, row.kmedoids_objective, row.kcenter_objective
            ));
        }
    }
    let out_path = dir.join("bound_report.csv");
    fs::write(&out_path, csv_text).with_context(|| format!("writing {}", out_path.display()))?;
    eprintln!("wrote {}", out_path.display());
    Ok(())
}

fn cmd_gen_sbm(args: GenSbmArgs) -> Result<()> {
    let blocks: Vec<usize> = parse_list(&args.blocks, "block size")?;
    let dataset = generate_sbm(&SbmConfig {
        blocks,
        p_in: args.p_in,
        p_out: args.p_out,
        feature_noise: args.feature_noise,
        seed: args.seed,
    })?;
    save_dataset_json(&dataset, &args.out)?;
    eprintln!(
        "wrote '{}' (n={}, {} edges, C={}) to {}",
        dataset.name,
        dataset.n_nodes(),
        dataset.graph.n_edges(),
        dataset.labels.n_classes(),
        args.out.display()
    );
    Ok(())
}
