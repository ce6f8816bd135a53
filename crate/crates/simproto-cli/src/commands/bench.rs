//! `bench`: compare training strategies over a seed list.
//!
//! Each seed generates its own dataset and prototype; every strategy then
//! trains on identical data with identical batch order, so the strategy is
//! the only difference within a seed. Rows report mean and standard
//! deviation of test accuracy, the paired delta against the `hard`
//! baseline, and a one-sided sign-test p-value.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::{ensure_out_dir, resolve_data, run_training, say};
use crate::config::RunConfig;
use simproto::io::fmt_f64;

pub const TABLE_FILE: &str = "bench.csv";

/// One training run's outcome, also stored as `run_*.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub strategy: String,
    pub strategy_index: usize,
    pub seed: u64,
    pub test_accuracy: f64,
}

/// One aggregated table row.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub strategy: String,
    pub seeds: usize,
    pub mean_accuracy: f64,
    /// Sample standard deviation; absent for a single seed.
    pub stddev_accuracy: Option<f64>,
    /// Mean paired difference against the `hard` baseline, when present.
    pub delta_vs_hard: Option<f64>,
    /// One-sided sign-test p-value against `hard`, ties dropped.
    pub sign_test_p: Option<f64>,
}

/// One-sided sign test: probability of at least `wins` successes in
/// `wins + losses` fair coin flips. Ties are dropped before calling; an
/// empty comparison yields 1.
pub fn sign_test_p(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    // Tail sum of binomial(n, 1/2).
    let mut coeff = 1.0f64; // C(n, k) running value
    let mut tail = 0.0f64;
    let mut total = 0.0f64;
    for k in 0..=n {
        if k > 0 {
            coeff = coeff * (n - k + 1) as f64 / k as f64;
        }
        total += coeff;
        if k >= wins {
            tail += coeff;
        }
    }
    tail / total
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Aggregate per-run records into table rows, keyed by strategy position.
pub fn aggregate_runs(records: &[RunRecord]) -> Vec<BenchRow> {
    let mut strategy_count = 0usize;
    for r in records {
        strategy_count = strategy_count.max(r.strategy_index + 1);
    }
    let baseline: Option<Vec<&RunRecord>> =
        records.iter().find(|r| r.strategy == "hard").map(|first| {
            let idx = first.strategy_index;
            let mut runs: Vec<&RunRecord> =
                records.iter().filter(|r| r.strategy_index == idx).collect();
            runs.sort_by_key(|r| r.seed);
            runs
        });

    let mut rows = Vec::with_capacity(strategy_count);
    for idx in 0..strategy_count {
        let mut runs: Vec<&RunRecord> =
            records.iter().filter(|r| r.strategy_index == idx).collect();
        if runs.is_empty() {
            continue;
        }
        runs.sort_by_key(|r| r.seed);
        let name = runs[0].strategy.clone();
        let accs: Vec<f64> = runs.iter().map(|r| r.test_accuracy).collect();
        let m = mean(&accs);
        let stddev = (accs.len() > 1).then(|| {
            let var = accs.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (accs.len() - 1) as f64;
            var.sqrt()
        });
        let (delta, p) = match &baseline {
            Some(base) if base.len() == runs.len() => {
                let deltas: Vec<f64> = runs
                    .iter()
                    .zip(base.iter())
                    .map(|(r, b)| {
                        debug_assert_eq!(r.seed, b.seed);
                        r.test_accuracy - b.test_accuracy
                    })
                    .collect();
                let wins = deltas.iter().filter(|&&d| d > 0.0).count();
                let losses = deltas.iter().filter(|&&d| d < 0.0).count();
                (Some(mean(&deltas)), Some(sign_test_p(wins, losses)))
            }
            _ => (None, None),
        };
        rows.push(BenchRow {
            strategy: name,
            seeds: runs.len(),
            mean_accuracy: m,
            stddev_accuracy: stddev,
            delta_vs_hard: delta,
            sign_test_p: p,
        });
    }
    rows
}

pub fn table_csv(rows: &[BenchRow]) -> String {
    let mut out =
        String::from("strategy,seeds,mean_accuracy,stddev_accuracy,delta_vs_hard,sign_test_p\n");
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.strategy,
            row.seeds,
            fmt_f64(row.mean_accuracy),
            row.stddev_accuracy.map(fmt_f64).unwrap_or_default(),
            row.delta_vs_hard.map(fmt_f64).unwrap_or_default(),
            row.sign_test_p.map(fmt_f64).unwrap_or_default(),
        )
        .expect("string write");
    }
    out
}

/// Run the benchmark and write per-run files plus the aggregated table.
/// Returns the table rows.
pub fn cmd_bench(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<BenchRow>> {
    ensure_out_dir(out_dir)?;
    if cfg.bench.strategies.is_empty() || cfg.bench.seeds.is_empty() {
        bail!("bench needs at least one strategy and one seed");
    }
    // Parse tokens up front so bad names fail before any training.
    let resolved: Vec<_> = cfg
        .bench
        .strategies
        .iter()
        .map(|token| cfg.resolve_strategy_token(token))
        .collect::<Result<_>>()?;

    // Fan out per seed: the dataset and prototype are shared across
    // strategies within a seed.
    let mut records: Vec<RunRecord> = cfg
        .bench
        .seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<RunRecord>> {
            let data = resolve_data(cfg, None, seed)?;
            let mut out = Vec::with_capacity(resolved.len());
            for (idx, (label, contrastive)) in resolved.iter().enumerate() {
                let (report, _) = run_training(cfg, *label, *contrastive, &data, seed)?;
                out.push(RunRecord {
                    strategy: cfg.bench.strategies[idx].clone(),
                    strategy_index: idx,
                    seed,
                    test_accuracy: report.test_accuracy,
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    records.sort_by_key(|r| (r.strategy_index, r.seed));

    for record in &records {
        let mut json = serde_json::to_string_pretty(record)?;
        json.push('\n');
        let name = format!(
            "run_{}_{}_seed{}.json",
            record.strategy_index,
            record.strategy.replace('+', "-"),
            record.seed
        );
        std::fs::write(out_dir.join(name), json)?;
    }

    let rows = aggregate_runs(&records);
    std::fs::write(out_dir.join(TABLE_FILE), table_csv(&rows))?;
    for row in &rows {
        say(
            cfg,
            format!(
                "{:<12} mean={:.4}{}{}",
                row.strategy,
                row.mean_accuracy,
                row.stddev_accuracy
                    .map(|s| format!(" sd={s:.4}"))
                    .unwrap_or_default(),
                row.delta_vs_hard
                    .map(|d| format!(" delta={d:+.4} p={:.4}", row.sign_test_p.unwrap_or(1.0)))
                    .unwrap_or_default(),
            ),
        );
    }
    Ok(rows)
}
