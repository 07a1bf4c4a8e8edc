//! File output for experiment sweeps: the results CSV, per-budget plot data,
//! and the pools file consumed by the bound report.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces the records exactly and identical runs yield byte-identical
//! files.

use super::{ExperimentRecord, HarnessError, PoolMap};
use std::fs;
use std::path::Path;

/// Fixed header of the results CSV.
pub const CSV_HEADER: &str =
    "strategy,seed,budget,macro_f1,micro_f1,accuracy,kmedoids_obj,kcenter_obj,selection_ms,train_ms";

/// Writes records as CSV under [`CSV_HEADER`]. Empty input produces a
/// header-only file.
pub fn emit_csv(records: &[ExperimentRecord], path: &Path) -> Result<(), HarnessError> {
    let io_err = |source: csv::Error| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = csv::Writer::from_path(path).map_err(io_err)?;
    if records.is_empty() {
        writer
            .write_record(CSV_HEADER.split(','))
            .map_err(io_err)?;
    }
    for record in records {
        writer.serialize(record).map_err(io_err)?;
    }
    writer.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

/// Reads a results CSV written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<ExperimentRecord>, HarnessError> {
    let mut reader = csv::Reader::from_path(path).map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    reader
        .deserialize()
        .collect::<Result<Vec<ExperimentRecord>, csv::Error>>()
        .map_err(|source| HarnessError::Csv {
            path: path.to_path_buf(),
            source,
        })
}

/// Writes curve data for budget-vs-score plots: one row per (budget,
/// strategy) with the mean and population stddev of Macro-F1 across seeds.
/// Budgets ascend; strategies keep their order of first appearance.
pub fn emit_plot_data(records: &[ExperimentRecord], path: &Path) -> Result<(), HarnessError> {
    let mut budgets: Vec<usize> = records.iter().map(|r| r.budget).collect();
    budgets.sort_unstable();
    budgets.dedup();
    let mut strategies: Vec<&str> = Vec::new();
    for r in records {
        if !strategies.contains(&r.strategy.as_str()) {
            strategies.push(&r.strategy);
        }
    }

    let mut text = String::from("budget,strategy,mean,stddev\n");
    for &budget in &budgets {
        for &strategy in &strategies {
            let values: Vec<f64> = records
                .iter()
                .filter(|r| r.budget == budget && r.strategy == strategy)
                .map(|r| r.macro_f1)
                .collect();
            if values.is_empty() {
                continue;
            }
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            text.push_str(&format!("{budget},{strategy},{mean},{}\n", var.sqrt()));
        }
    }
    fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the per-(strategy, seed, budget) labeled pools as JSON.
pub fn write_pools_json(pools: &PoolMap, path: &Path) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(pools).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_pools_json(path: &Path) -> Result<PoolMap, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(strategy: &str, seed: u64, budget: usize, score: f64) -> ExperimentRecord {
        ExperimentRecord {
            strategy: strategy.into(),
            seed,
            budget,
            macro_f1: score,
            micro_f1: score,
            accuracy: score,
            kmedoids_objective: 0.125,
            kcenter_objective: 0.5,
            selection_ms: 1.5,
            train_ms: 20.25,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let records = vec![
            record("random", 0, 10, 0.1 + 0.2), // deliberately non-representable
            record("featprop", 1, 20, 1.0 / 3.0),
        ];
        emit_csv(&records, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(CSV_HEADER), "header was: {}", text.lines().next().unwrap());
        let reloaded = read_csv(&path).unwrap();
        assert_eq!(reloaded, records);
    }

    #[test]
    fn empty_records_write_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        emit_csv(&[], &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.trim_end(), CSV_HEADER);
        assert!(read_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn plot_data_has_one_row_per_budget_strategy_pair() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.csv");
        let mut records = Vec::new();
        for strategy in ["random", "featprop"] {
            for budget in [10, 20, 40, 80, 160] {
                for seed in 0..3 {
                    records.push(record(strategy, seed, budget, 0.5 + seed as f64 * 0.1));
                }
            }
        }
        emit_plot_data(&records, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "budget,strategy,mean,stddev");
        assert_eq!(lines.len(), 1 + 2 * 5);
        assert!(lines[1].starts_with("10,random,"));
        assert!(lines[2].starts_with("10,featprop,"));
    }

    #[test]
    fn plot_data_empty_records_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.csv");
        emit_plot_data(&[], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "budget,strategy,mean,stddev\n");
    }

    #[test]
    fn pools_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pools.json");
        let mut pools = PoolMap::new();
        pools
            .entry("featprop".into())
            .or_default()
            .entry(3)
            .or_default()
            .insert(10, vec![1, 4, 7]);
        write_pools_json(&pools, &path).unwrap();
        assert_eq!(read_pools_json(&path).unwrap(), pools);
    }
}
