use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, LoadedEnvs, SuiteConfig};
use super::experiment::{run_with_envs, IterationLog};
use crate::error::{Error, Result};

/// One CSV line: a metric snapshot for one (cell, iteration, environment).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub iteration: usize,
    pub condition: String,
    pub seed: u64,
    pub user: usize,
    pub env: String,
    pub entropy: Option<f64>,
    pub reward_diff: Option<f64>,
    pub policy_acc: f64,
    pub jaccard: f64,
    pub info_gain: Option<f64>,
}

pub fn csv_rows(config: &ExperimentConfig, logs: &[IterationLog]) -> Vec<CsvRow> {
    let mut rows = Vec::new();
    for log in logs {
        for m in &log.metrics {
            rows.push(CsvRow {
                iteration: log.iteration,
                condition: config.condition.to_string(),
                seed: config.seed,
                user: config.user_index,
                env: m.env.clone(),
                entropy: log.entropy,
                reward_diff: (!m.metrics.reward_diff.is_nan()).then_some(m.metrics.reward_diff),
                policy_acc: m.metrics.policy_acc,
                jaccard: m.metrics.jaccard,
                info_gain: log.info_gain(),
            });
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (0 for a single value).
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<MeanStd> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(MeanStd { mean, std, n })
    }
}

/// Final-iteration test-environment statistics for one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: String,
    pub cells: usize,
    pub reward_diff: Option<MeanStd>,
    pub policy_acc: Option<MeanStd>,
    pub jaccard: Option<MeanStd>,
    pub entropy: Option<MeanStd>,
    /// Mean query gain over all answered iterations.
    pub info_gain: Option<MeanStd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub condition: String,
    pub user: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub final_iteration: usize,
    pub conditions: Vec<ConditionSummary>,
    pub failures: Vec<CellFailure>,
}

#[derive(Debug, Clone)]
pub struct SuiteOutput {
    pub rows: Vec<CsvRow>,
    pub summary: SuiteSummary,
}

/// Summaries computed from CSV rows: final-iteration rows of test
/// environments, one value per row.
pub fn summarize(rows: &[CsvRow], final_iteration: usize, failures: Vec<CellFailure>) -> SuiteSummary {
    let mut order: Vec<String> = Vec::new();
    for r in rows {
        if !order.contains(&r.condition) {
            order.push(r.condition.clone());
        }
    }
    let conditions = order
        .into_iter()
        .map(|cond| {
            let last: Vec<&CsvRow> = rows
                .iter()
                .filter(|r| r.condition == cond && r.iteration == final_iteration && r.env.starts_with("test"))
                .collect();
            let cells: std::collections::BTreeSet<(usize, u64)> = rows
                .iter()
                .filter(|r| r.condition == cond)
                .map(|r| (r.user, r.seed))
                .collect();
            let gains: Vec<f64> = rows
                .iter()
                .filter(|r| r.condition == cond && r.env == "train")
                .filter_map(|r| r.info_gain)
                .collect();
            ConditionSummary {
                condition: cond.clone(),
                cells: cells.len(),
                reward_diff: MeanStd::of(&last.iter().filter_map(|r| r.reward_diff).collect::<Vec<_>>()),
                policy_acc: MeanStd::of(&last.iter().map(|r| r.policy_acc).collect::<Vec<_>>()),
                jaccard: MeanStd::of(&last.iter().map(|r| r.jaccard).collect::<Vec<_>>()),
                entropy: MeanStd::of(&last.iter().filter_map(|r| r.entropy).collect::<Vec<_>>()),
                info_gain: MeanStd::of(&gains),
            }
        })
        .collect();
    SuiteSummary {
        final_iteration,
        conditions,
        failures,
    }
}

/// Run every cell. Cells run on a worker pool; output order is the cell
/// order regardless of scheduling. A failing cell is recorded and skipped.
pub fn run_suite(config: &SuiteConfig, base: Option<&Path>) -> Result<SuiteOutput> {
    let envs = LoadedEnvs::load(&config.train_env, &config.test_envs, config.domain, base)?;
    let cells = config.cells(envs.dim())?;
    for c in &cells {
        c.validate()?;
    }
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(cells.len()).max(1);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Vec<IterationLog>>>>> = Mutex::new((0..cells.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= cells.len() {
                    break;
                }
                let r = run_with_envs(&cells[i], &envs);
                results.lock().expect("results lock")[i] = Some(r);
            });
        }
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (cell, result) in cells.iter().zip(results.into_inner().expect("results lock")) {
        match result.expect("every cell ran") {
            Ok(logs) => rows.extend(csv_rows(cell, &logs)),
            Err(e) => {
                log::error!("cell {} user {} seed {} failed: {e}", cell.condition, cell.user_index, cell.seed);
                failures.push(CellFailure {
                    condition: cell.condition.to_string(),
                    user: cell.user_index,
                    seed: cell.seed,
                    error: e.to_string(),
                });
            }
        }
    }
    let summary = summarize(&rows, config.iterations, failures);
    Ok(SuiteOutput { rows, summary })
}

pub fn write_csv(path: impl AsRef<Path>, rows: &[CsvRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Write `results.csv`, `summary.json` and a `manifest.json` describing the
/// plot-ready series into `dir`.
pub fn write_suite_outputs(dir: impl AsRef<Path>, output: &SuiteOutput) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_csv(dir.join("results.csv"), &output.rows)?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&output.summary)?)?;
    let mut series: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    series.insert("x", vec!["iteration"]);
    series.insert("group_by", vec!["condition", "env"]);
    series.insert("y", vec!["entropy", "reward_diff", "policy_acc", "jaccard", "info_gain"]);
    let manifest = serde_json::json!({
        "data": "results.csv",
        "summary": "summary.json",
        "series": series,
    });
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}
