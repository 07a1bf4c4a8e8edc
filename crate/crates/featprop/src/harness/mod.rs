//! Experiment harness: budget sweep over (strategy, seed) cells with
//! multi-seed aggregation, pool objectives, and timing capture.
//!
//! Each cell draws a seeded initial pool (shared by all strategies under the
//! same seed), optionally trains a bootstrap model on it for model-dependent
//! strategies, then walks the budget list: select, train a fresh model on
//! the pool, evaluate Macro-F1 / Micro-F1 / accuracy on the full node set,
//! and record both clustering objectives of the pool. Cells run in parallel
//! but results are collected in a canonical order, so identical configs
//! produce identical outputs.

mod output;

pub use output::{
    emit_csv, emit_plot_data, read_csv, read_pools_json, write_pools_json, CSV_HEADER,
};

use crate::clustering::{kcenter_objective, kmedoids_objective, ClusterError};
use crate::gcn::metrics::{accuracy, macro_f1, micro_f1, predict_labels, MetricsError};
use crate::gcn::{
    forward_prepared, train_prepared, GcnError, GcnVariant, PreparedInputs, TrainConfig,
};
use crate::graph::{Dataset, DatasetFormat, NodeSet, NormalizedAdjacency};
use crate::propagation::{propagate, PropagatedFeatures, PropagationError};
use crate::strategies::{
    strategy_by_name, PoolSemantics, RepresentationKind, SelectionContext, StrategyError,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("unknown strategy '{0}'")]
    UnknownStrategy(String),
    #[error("no records to aggregate")]
    EmptyRecords,
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Gcn(#[from] GcnError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

fn default_strategies() -> Vec<String> {
    crate::strategies::STRATEGY_NAMES.iter().map(|s| s.to_string()).collect()
}

fn default_budgets() -> Vec<usize> {
    vec![10, 20, 40, 80, 160]
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

fn default_initial_pool_size() -> usize {
    5
}

fn default_prop_steps() -> usize {
    2
}

fn default_variant() -> GcnVariant {
    GcnVariant::Gcn
}

fn default_representation() -> RepresentationKind {
    RepresentationKind::FinalLayer
}

fn default_row_normalize() -> bool {
    true
}

/// Full description of a sweep. Serializable so a run directory can carry
/// its own provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Where the dataset came from; `None` when passed in memory.
    #[serde(default)]
    pub dataset_path: Option<PathBuf>,
    #[serde(default = "default_dataset_format")]
    pub dataset_format: DatasetFormat,
    #[serde(default = "default_row_normalize")]
    pub row_normalize: bool,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<String>,
    #[serde(default = "default_budgets")]
    pub budgets: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_initial_pool_size")]
    pub initial_pool_size: usize,
    #[serde(default = "default_variant")]
    pub variant: GcnVariant,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_prop_steps")]
    pub prop_steps: usize,
    #[serde(default = "default_representation")]
    pub representation: RepresentationKind,
    /// Write zeros instead of wall-clock timings, making output files
    /// byte-reproducible across runs.
    #[serde(default)]
    pub zero_timings: bool,
}

fn default_dataset_format() -> DatasetFormat {
    DatasetFormat::Json
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset_path: None,
            dataset_format: default_dataset_format(),
            row_normalize: true,
            strategies: default_strategies(),
            budgets: default_budgets(),
            seeds: default_seeds(),
            initial_pool_size: default_initial_pool_size(),
            variant: default_variant(),
            train: TrainConfig::default(),
            prop_steps: default_prop_steps(),
            representation: default_representation(),
            zero_timings: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.strategies.is_empty() {
            return Err(HarnessError::InvalidConfig("no strategies given".into()));
        }
        for name in &self.strategies {
            if strategy_by_name(name).is_none() {
                return Err(HarnessError::UnknownStrategy(name.clone()));
            }
        }
        if self.budgets.is_empty() {
            return Err(HarnessError::InvalidConfig("no budgets given".into()));
        }
        if !self.budgets.windows(2).all(|w| w[0] < w[1]) {
            return Err(HarnessError::InvalidConfig(format!(
                "budgets must be strictly increasing, got {:?}",
                self.budgets
            )));
        }
        if self.budgets[0] == 0 {
            return Err(HarnessError::InvalidConfig("budgets must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::InvalidConfig("no seeds given".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(HarnessError::InvalidConfig("seeds must be distinct".into()));
        }
        self.train.validate()?;
        Ok(())
    }
}

/// One (strategy, seed, budget) result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub strategy: String,
    pub seed: u64,
    pub budget: usize,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub accuracy: f64,
    #[serde(rename = "kmedoids_obj")]
    pub kmedoids_objective: f64,
    #[serde(rename = "kcenter_obj")]
    pub kcenter_objective: f64,
    pub selection_ms: f64,
    pub train_ms: f64,
}

/// A cell that errored out, with enough context to locate it.
#[derive(Debug, Clone)]
pub struct CellFailure {
    pub strategy: String,
    pub seed: u64,
    /// Budget at which the failure happened; `None` for the bootstrap phase.
    pub budget: Option<usize>,
    pub message: String,
}

/// strategy -> seed -> budget -> sorted labeled pool.
pub type PoolMap = BTreeMap<String, BTreeMap<u64, BTreeMap<usize, Vec<usize>>>>;

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<ExperimentRecord>,
    pub failures: Vec<CellFailure>,
    pub pools: PoolMap,
}

const SALT_INITIAL_POOL: u64 = 0x51;
const SALT_SELECTION: u64 = 0x5e;
const SALT_TRAIN: u64 = 0x7a;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic sub-seed for one purpose + round of a given base seed.
fn derive_seed(base: u64, salt: u64, round: u64) -> u64 {
    splitmix(base ^ splitmix(salt.wrapping_mul(0x0100_0000_01b3).wrapping_add(round)))
}

fn draw_initial_pool(seed: u64, size: usize, n: usize) -> NodeSet {
    if size == 0 {
        return NodeSet::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, SALT_INITIAL_POOL, 0));
    rand::seq::index::sample(&mut rng, n, size).iter().collect()
}

struct CellResult {
    strategy_idx: usize,
    seed_idx: usize,
    records: Vec<ExperimentRecord>,
    pools: Vec<(usize, Vec<usize>)>,
    failure: Option<CellFailure>,
}

/// Runs the full sweep over an already-loaded dataset.
///
/// Failures are isolated per (strategy, seed) cell: a failing cell stops at
/// the failing budget and is reported in `failures` without affecting other
/// cells.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    dataset: &Dataset,
) -> Result<ExperimentOutput, HarnessError> {
    cfg.validate()?;
    let n = dataset.n_nodes();
    let max_budget = *cfg.budgets.last().expect("validated nonempty");
    if cfg.initial_pool_size + max_budget > n {
        return Err(HarnessError::InvalidConfig(format!(
            "initial pool {} + max budget {max_budget} exceeds {n} nodes",
            cfg.initial_pool_size
        )));
    }

    let adjacency = NormalizedAdjacency::from_graph(&dataset.graph);
    let propagated = propagate(&adjacency, &dataset.features, cfg.prop_steps)?;
    let prepared = PreparedInputs::new(&adjacency, &dataset.features, cfg.variant)?;

    let cells: Vec<(usize, usize)> = (0..cfg.strategies.len())
        .flat_map(|si| (0..cfg.seeds.len()).map(move |ei| (si, ei)))
        .collect();

    let mut results: Vec<CellResult> = cells
        .par_iter()
        .map(|&(strategy_idx, seed_idx)| {
            run_cell(
                cfg,
                dataset,
                &adjacency,
                &propagated,
                &prepared,
                strategy_idx,
                seed_idx,
            )
        })
        .collect();
    results.sort_by_key(|r| (r.strategy_idx, r.seed_idx));

    let mut output = ExperimentOutput {
        records: Vec::new(),
        failures: Vec::new(),
        pools: PoolMap::new(),
    };
    for cell in results {
        let strategy = cfg.strategies[cell.strategy_idx].clone();
        let seed = cfg.seeds[cell.seed_idx];
        for (budget, pool) in cell.pools {
            output
                .pools
                .entry(strategy.clone())
                .or_default()
                .entry(seed)
                .or_default()
                .insert(budget, pool);
        }
        output.records.extend(cell.records);
        output.failures.extend(cell.failure);
    }
    Ok(output)
}

fn run_cell(
    cfg: &ExperimentConfig,
    dataset: &Dataset,
    adjacency: &NormalizedAdjacency,
    propagated: &PropagatedFeatures,
    prepared: &PreparedInputs,
    strategy_idx: usize,
    seed_idx: usize,
) -> CellResult {
    let strategy_name = &cfg.strategies[strategy_idx];
    let seed = cfg.seeds[seed_idx];
    let mut cell = CellResult {
        strategy_idx,
        seed_idx,
        records: Vec::new(),
        pools: Vec::new(),
        failure: None,
    };
    let strategy = strategy_by_name(strategy_name).expect("validated strategy name");
    let initial = draw_initial_pool(seed, cfg.initial_pool_size, dataset.n_nodes());

    let mut fail = |budget: Option<usize>, message: String| CellFailure {
        strategy: strategy_name.clone(),
        seed,
        budget,
        message,
    };

    // Bootstrap model on the initial pool so model-dependent strategies have
    // predictions available from the first budget round on.
    let mut previous_model = None;
    if strategy.needs_model() && !initial.is_empty() {
        let train_cfg = TrainConfig {
            seed: derive_seed(seed, SALT_TRAIN, 0),
            ..cfg.train.clone()
        };
        match train_prepared(prepared, adjacency, &dataset.labels, &initial, &train_cfg) {
            Ok(model) => previous_model = Some(model),
            Err(e) => {
                cell.failure = Some(fail(None, e.to_string()));
                return cell;
            }
        }
    }

    let mut pool = initial.clone();
    let mut previous_budget = 0usize;
    for (budget_idx, &budget) in cfg.budgets.iter().enumerate() {
        let (round_pool, n_new) = match strategy.pool_semantics() {
            PoolSemantics::Incremental => (pool.clone(), budget - previous_budget),
            PoolSemantics::Reclustered => (initial.clone(), budget),
        };
        let ctx = SelectionContext {
            dataset,
            adjacency,
            propagated,
            current_pool: &round_pool,
            previous_model: previous_model.as_ref(),
            budget_total: budget,
            n_new,
            seed: derive_seed(seed, SALT_SELECTION, budget_idx as u64),
            representation: cfg.representation,
        };
        let select_start = Instant::now();
        let selection = match strategy.select(&ctx) {
            Ok(s) => s,
            Err(e) => {
                cell.failure = Some(fail(Some(budget), e.to_string()));
                return cell;
            }
        };
        let selection_ms = select_start.elapsed().as_secs_f64() * 1e3;

        let new_pool: NodeSet = round_pool.union(&selection.new_nodes).copied().collect();
        if new_pool.len() != initial.len() + budget {
            cell.failure = Some(fail(
                Some(budget),
                format!(
                    "pool size {} != initial {} + budget {budget}",
                    new_pool.len(),
                    initial.len()
                ),
            ));
            return cell;
        }

        let train_cfg = TrainConfig {
            seed: derive_seed(seed, SALT_TRAIN, budget_idx as u64 + 1),
            ..cfg.train.clone()
        };
        let train_start = Instant::now();
        let model =
            match train_prepared(prepared, adjacency, &dataset.labels, &new_pool, &train_cfg) {
                Ok(m) => m,
                Err(e) => {
                    cell.failure = Some(fail(Some(budget), e.to_string()));
                    return cell;
                }
            };
        let train_ms = train_start.elapsed().as_secs_f64() * 1e3;

        let record = (|| -> Result<ExperimentRecord, HarnessError> {
            let pass = forward_prepared(&model, adjacency, prepared)?;
            let pred = predict_labels(&pass.probabilities.view());
            Ok(ExperimentRecord {
                strategy: strategy_name.clone(),
                seed,
                budget,
                macro_f1: macro_f1(&pred, &dataset.labels)?,
                micro_f1: micro_f1(&pred, &dataset.labels)?,
                accuracy: accuracy(&pred, &dataset.labels)?,
                kmedoids_objective: kmedoids_objective(propagated, &new_pool)?,
                kcenter_objective: kcenter_objective(propagated, &new_pool)?,
                selection_ms: if cfg.zero_timings { 0.0 } else { selection_ms },
                train_ms: if cfg.zero_timings { 0.0 } else { train_ms },
            })
        })();
        match record {
            Ok(r) => cell.records.push(r),
            Err(e) => {
                cell.failure = Some(fail(Some(budget), e.to_string()));
                return cell;
            }
        }
        cell.pools.push((budget, new_pool.iter().copied().collect()));

        pool = new_pool;
        previous_model = Some(model);
        previous_budget = budget;
    }
    cell
}

/// Per-strategy mean and population standard deviation over all
/// (seed, budget) records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: String,
    pub n_runs: usize,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
    pub micro_f1_mean: f64,
    pub micro_f1_std: f64,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregates records the way the benchmark tables do: a flat mean and
/// population stddev across every (seed, budget) run of a strategy.
/// Strategies appear in order of first appearance.
pub fn summarize(records: &[ExperimentRecord]) -> Result<Vec<SummaryRow>, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::EmptyRecords);
    }
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.strategy.as_str()) {
            order.push(&r.strategy);
        }
    }
    let mut rows = Vec::with_capacity(order.len());
    for name in order {
        let macro_v: Vec<f64> = records
            .iter()
            .filter(|r| r.strategy == name)
            .map(|r| r.macro_f1)
            .collect();
        let micro_v: Vec<f64> = records
            .iter()
            .filter(|r| r.strategy == name)
            .map(|r| r.micro_f1)
            .collect();
        let acc_v: Vec<f64> = records
            .iter()
            .filter(|r| r.strategy == name)
            .map(|r| r.accuracy)
            .collect();
        let (macro_f1_mean, macro_f1_std) = mean_std(&macro_v);
        let (micro_f1_mean, micro_f1_std) = mean_std(&micro_v);
        let (accuracy_mean, accuracy_std) = mean_std(&acc_v);
        rows.push(SummaryRow {
            strategy: name.to_string(),
            n_runs: macro_v.len(),
            macro_f1_mean,
            macro_f1_std,
            micro_f1_mean,
            micro_f1_std,
            accuracy_mean,
            accuracy_std,
        });
    }
    Ok(rows)
}

/// One row of the bound diagnostics table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub strategy: String,
    pub kmedoids_objective: f64,
    pub kcenter_objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    /// Whether the featprop pool has the smallest K-Medoids objective of all
    /// listed pools; `None` when no featprop pool is present.
    pub featprop_attains_min: Option<bool>,
}

/// Evaluates both clustering objectives for each strategy's pool on the same
/// propagated features.
pub fn bound_report(
    p: &PropagatedFeatures,
    pools: &BTreeMap<String, NodeSet>,
) -> Result<BoundReport, HarnessError> {
    if pools.is_empty() {
        return Err(HarnessError::EmptyRecords);
    }
    let mut rows = Vec::with_capacity(pools.len());
    for (strategy, pool) in pools {
        rows.push(BoundRow {
            strategy: strategy.clone(),
            kmedoids_objective: kmedoids_objective(p, pool)?,
            kcenter_objective: kcenter_objective(p, pool)?,
        });
    }
    let featprop_attains_min = rows
        .iter()
        .find(|r| r.strategy == "featprop")
        .map(|f| rows.iter().all(|r| f.kmedoids_objective <= r.kmedoids_objective));
    Ok(BoundReport { rows, featprop_attains_min })
}
