//! Whole experiments: one algorithm, or all four side by side.

use std::path::{Path, PathBuf};

use vanet_core::mobility::NetworkSnapshot;

use crate::config::{Algorithm, ExperimentConfig};
use crate::engine::{run_steps, StepRow};
use crate::error::SimError;
use crate::output::{comparison_csv, correlation_csv, create_step_writer, step_write, summary_csv, write_text};
use crate::summary::{summarize, SummaryStats};

/// Caps how many algorithms `compare` runs at once; unset or 0 means the
/// machine's available parallelism.
pub const THREADS_ENV: &str = "VANET_SIM_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub algorithm: Algorithm,
    pub rows: Vec<StepRow>,
    pub summary: SummaryStats,
}

pub fn step_csv_path(out_dir: &Path, algorithm: Algorithm) -> PathBuf {
    out_dir.join(format!("{}.csv", algorithm.label()))
}

/// Runs one algorithm on prepared snapshots, writing `<algorithm>.csv` row
/// by row when `out_dir` is given.
pub fn run_on(
    config: &ExperimentConfig,
    snapshots: &[NetworkSnapshot],
    algorithm: Algorithm,
    out_dir: Option<&Path>,
) -> Result<RunOutput, SimError> {
    let rows = match out_dir {
        Some(dir) => {
            let path = step_csv_path(dir, algorithm);
            let mut writer = create_step_writer(&path)?;
            run_steps(config, snapshots, algorithm, |row| step_write(&mut writer, row, &path))?
        }
        None => run_steps(config, snapshots, algorithm, |_| Ok(()))?,
    };
    let records: Vec<_> = rows.iter().map(|r| r.record).collect();
    let summary = summarize(&records, config.run.warmup);
    Ok(RunOutput { algorithm, rows, summary })
}

fn prepare_dir(out_dir: &Path) -> Result<(), SimError> {
    std::fs::create_dir_all(out_dir).map_err(|e| SimError::io(out_dir, e))
}

fn write_summaries(out_dir: &Path, runs: &[RunOutput]) -> Result<(), SimError> {
    let table: Vec<_> = runs.iter().map(|r| (r.algorithm, &r.summary)).collect();
    write_text(&out_dir.join("summary.csv"), &summary_csv(&table))?;
    write_text(&out_dir.join("correlation.csv"), &correlation_csv(&table))
}

/// `run` subcommand: the configured algorithm with outputs under `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunOutput, SimError> {
    let snapshots = config.snapshots()?;
    if let Some(dir) = out_dir {
        prepare_dir(dir)?;
    }
    let out = run_on(config, &snapshots, config.run.algorithm, out_dir)?;
    if let Some(dir) = out_dir {
        write_summaries(dir, std::slice::from_ref(&out))?;
    }
    Ok(out)
}

pub fn thread_cap() -> usize {
    let auto = || std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(0) | None => auto(),
        Some(n) => n,
    }
}

/// All four algorithms on the same snapshots. Runs are independent, so up
/// to `thread_cap()` of them execute concurrently; results come back in
/// fixed algorithm order.
pub fn compare(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<Vec<RunOutput>, SimError> {
    let snapshots = config.snapshots()?;
    if let Some(dir) = out_dir {
        prepare_dir(dir)?;
    }
    let cap = thread_cap().max(1);
    let mut results: Vec<Option<Result<RunOutput, SimError>>> = (0..Algorithm::ALL.len()).map(|_| None).collect();
    for chunk in Algorithm::ALL.iter().enumerate().collect::<Vec<_>>().chunks(cap) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&(i, &alg)| {
                    let snaps = &snapshots;
                    (i, scope.spawn(move || run_on(config, snaps, alg, out_dir)))
                })
                .collect();
            for (i, h) in handles {
                results[i] = Some(h.join().unwrap_or_else(|_| Err(SimError::Runtime("worker thread panicked".into()))));
            }
        });
    }
    let runs = results.into_iter().map(|r| r.expect("every algorithm ran")).collect::<Result<Vec<_>, _>>()?;
    if let Some(dir) = out_dir {
        write_summaries(dir, &runs)?;
        let table: Vec<_> = runs.iter().map(|r| (r.algorithm, &r.summary)).collect();
        write_text(&dir.join("comparison.csv"), &comparison_csv(&table))?;
    }
    Ok(runs)
}
