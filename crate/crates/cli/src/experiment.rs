//! Running named series of batches and collecting what the artifacts need.

use degenloop_core::engine::{InterestRecord, MetricPoint};
use degenloop_core::rng::run_seed;
use degenloop_core::{run_batch_map, BatchResult, RunSeries, SimConfig, Trajectory};

use crate::error::CliError;

/// Per-item snapshots are written only up to this pool size.
pub const ITEM_SNAPSHOT_LIMIT: usize = 1_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSpec {
    pub name: String,
    pub config: SimConfig,
}

impl SeriesSpec {
    pub fn new(name: impl Into<String>, config: SimConfig) -> Self {
        SeriesSpec { name: name.into(), config }
    }
}

/// One item at one report snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItemRow {
    pub run_id: usize,
    pub t: u64,
    pub item_id: usize,
    pub mu: f64,
    pub serving_rate: f64,
    /// 1-based rank by descending interest, ties by id.
    pub mu_rank: usize,
    /// 1-based rank by descending serving rate, ties by id.
    pub rate_rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesOutput {
    pub spec: SeriesSpec,
    pub batch: BatchResult,
    pub items: Vec<ItemRow>,
}

fn item_rows(run_id: usize, traj: &Trajectory) -> Vec<ItemRow> {
    let mut rows = Vec::new();
    for snap in &traj.snapshots {
        let InterestRecord::Full(mu) = &snap.interest else { continue };
        if mu.len() > ITEM_SNAPSHOT_LIMIT {
            continue;
        }
        let mu = mu.as_slice();
        let mut rate = vec![0.0; mu.len()];
        for &(item, n) in &snap.serve_counts {
            rate[item.index()] = f64::from(n) / snap.interval_length as f64;
        }
        let rank_by = |v: &[f64]| {
            let mut order: Vec<usize> = (0..v.len()).collect();
            order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
            let mut rank = vec![0; v.len()];
            for (r, a) in order.into_iter().enumerate() {
                rank[a] = r + 1;
            }
            rank
        };
        let mu_rank = rank_by(mu);
        let rate_rank = rank_by(&rate);
        rows.extend((0..mu.len()).map(|a| ItemRow {
            run_id,
            t: snap.t,
            item_id: a,
            mu: mu[a],
            serving_rate: rate[a],
            mu_rank: mu_rank[a],
            rate_rank: rate_rank[a],
        }));
    }
    rows
}

pub fn run_series(spec: SeriesSpec, per_item: bool) -> Result<SeriesOutput, CliError> {
    let config = &spec.config;
    let per_run = run_batch_map(config, |run, traj| {
        let series = RunSeries {
            run_index: run,
            seed: run_seed(config.master_seed, run as u64),
            points: traj.snapshots.iter().map(MetricPoint::from).collect(),
        };
        let items = if per_item { item_rows(run, &traj) } else { Vec::new() };
        (series, items)
    })?;
    let (runs, items): (Vec<_>, Vec<_>) = per_run.into_iter().unzip();
    Ok(SeriesOutput { batch: BatchResult::from_runs(runs), items: items.into_iter().flatten().collect(), spec })
}

/// Runs the series one after another; runs within a series go in parallel.
pub fn run_all(specs: Vec<SeriesSpec>, per_item: bool) -> Result<Vec<SeriesOutput>, CliError> {
    specs.into_iter().map(|s| run_series(s, per_item)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use degenloop_core::{PolicyKind, PolicyTag};

    #[test]
    fn item_rows_rank_and_rate() {
        let mut c = SimConfig::standard(PolicyKind::new(PolicyTag::Oracle));
        c.m0 = 20;
        c.horizon = 100;
        c.report_interval = 50;
        c.n_runs = 2;
        let out = run_series(SeriesSpec::new("oracle", c), true).unwrap();
        assert_eq!(out.items.len(), 2 * 2 * 20);
        for chunk in out.items.chunks(20) {
            let total: f64 = chunk.iter().map(|r| r.serving_rate).sum();
            assert!((total - 5.0).abs() < 1e-12);
            let mut ranks: Vec<usize> = chunk.iter().map(|r| r.mu_rank).collect();
            ranks.sort_unstable();
            assert_eq!(ranks, (1..=20).collect::<Vec<_>>());
        }
    }
}
