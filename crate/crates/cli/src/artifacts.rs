//! CSV and JSON artifacts.
//!
//! * `trajectory.csv`: `series,run_id,t,pool_size,l2,sup,l2_speed,sup_speed`,
//!   one row per run and report snapshot.
//! * `aggregate.csv`: per-series, per-snapshot mean and sample std.
//! * `items.csv`: per-item interest and serving rate (per-item presets only).
//! * `summary.json`: final means/stds and tail slopes per series.
//! * `config.echo.json`: everything needed to regenerate the above.

use std::fs;
use std::path::Path;

use degenloop_core::engine::MeanStd;
use degenloop_core::metrics::{self, tail_slope};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::experiment::SeriesOutput;
use crate::format::{fmt_num, fmt_opt};

pub const TRAJECTORY_HEADER: [&str; 8] =
    ["series", "run_id", "t", "pool_size", metrics::L2, metrics::SUP, metrics::L2_SPEED, metrics::SUP_SPEED];

pub const AGGREGATE_HEADER: [&str; 12] = [
    "series",
    "t",
    "n_runs",
    "pool_size_mean",
    "l2_mean",
    "l2_std",
    "sup_mean",
    "sup_std",
    "l2_speed_mean",
    "l2_speed_std",
    "sup_speed_mean",
    "sup_speed_std",
];

pub const ITEMS_HEADER: [&str; 8] =
    ["series", "run_id", "t", "item_id", "mu", metrics::SERVING_RATE, "mu_rank", "rate_rank"];

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Runtime(format!("{}: {other:?}", path.display())),
    }
}

pub fn write_trajectory_csv(path: &Path, outputs: &[SeriesOutput]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    w.write_record(TRAJECTORY_HEADER).map_err(&err)?;
    for out in outputs {
        for run in &out.batch.runs {
            for p in &run.points {
                w.write_record([
                    out.spec.name.clone(),
                    run.run_index.to_string(),
                    p.t.to_string(),
                    p.pool_size.to_string(),
                    fmt_num(p.l2),
                    fmt_num(p.sup),
                    fmt_opt(p.l2_speed),
                    fmt_opt(p.sup_speed),
                ])
                .map_err(&err)?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_aggregate_csv(path: &Path, outputs: &[SeriesOutput]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    w.write_record(AGGREGATE_HEADER).map_err(&err)?;
    for out in outputs {
        for p in &out.batch.aggregate {
            let ms = |m: Option<MeanStd>| [fmt_opt(m.map(|m| m.mean)), fmt_opt(m.map(|m| m.std))];
            let [l2s_mean, l2s_std] = ms(p.l2_speed);
            let [sups_mean, sups_std] = ms(p.sup_speed);
            w.write_record([
                out.spec.name.clone(),
                p.t.to_string(),
                out.batch.runs.len().to_string(),
                fmt_num(p.pool_size.mean),
                fmt_num(p.l2.mean),
                fmt_num(p.l2.std),
                fmt_num(p.sup.mean),
                fmt_num(p.sup.std),
                l2s_mean,
                l2s_std,
                sups_mean,
                sups_std,
            ])
            .map_err(&err)?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_items_csv(path: &Path, outputs: &[SeriesOutput]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    w.write_record(ITEMS_HEADER).map_err(&err)?;
    for out in outputs {
        for r in &out.items {
            w.write_record([
                out.spec.name.clone(),
                r.run_id.to_string(),
                r.t.to_string(),
                r.item_id.to_string(),
                fmt_num(r.mu),
                fmt_num(r.serving_rate),
                r.mu_rank.to_string(),
                r.rate_rank.to_string(),
            ])
            .map_err(&err)?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn mean_std(m: MeanStd) -> Value {
    json!({ "mean": m.mean, "std": m.std })
}

/// Slope of the mean series over the trailing half, when defined.
fn mean_tail_slope(out: &SeriesOutput, pick: fn(&degenloop_core::AggregatePoint) -> f64) -> Option<f64> {
    let series: Vec<(f64, f64)> = out.batch.aggregate.iter().map(|p| (p.t as f64, pick(p))).collect();
    tail_slope(&series, metrics::DEFAULT_WINDOW).ok()
}

pub fn summary(outputs: &[SeriesOutput]) -> Value {
    let series: Vec<Value> = outputs
        .iter()
        .map(|out| {
            let c = &out.spec.config;
            let last = out.batch.final_point().map(|p| {
                json!({
                    "t": p.t,
                    "pool_size": mean_std(p.pool_size),
                    "l2": mean_std(p.l2),
                    "sup": mean_std(p.sup),
                    "l2_speed": p.l2_speed.map(mean_std),
                    "sup_speed": p.sup_speed.map(mean_std),
                })
            });
            json!({
                "name": out.spec.name,
                "policy": c.policy.tag.name(),
                "noise_epsilon": c.policy.noise_epsilon,
                "m0": c.m0,
                "l": c.l,
                "eta": c.eta,
                "horizon": c.horizon,
                "n_runs": c.n_runs,
                "master_seed": c.master_seed,
                "final": last,
                "tail_slope_l2_mean": mean_tail_slope(out, |p| p.l2.mean),
                "tail_slope_sup_mean": mean_tail_slope(out, |p| p.sup.mean),
            })
        })
        .collect();
    json!({ "series": series })
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Optional files beyond trajectory, summary and config echo.
#[derive(Debug, Clone, Copy, Default)]
pub struct Extras {
    pub aggregate: bool,
    pub items: bool,
}

/// Writes the artifact set for a finished experiment.
pub fn write_outputs(dir: &Path, echo: &Value, outputs: &[SeriesOutput], extras: Extras) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_json(&dir.join("config.echo.json"), echo)?;
    write_trajectory_csv(&dir.join("trajectory.csv"), outputs)?;
    if extras.aggregate {
        write_aggregate_csv(&dir.join("aggregate.csv"), outputs)?;
    }
    if extras.items {
        write_items_csv(&dir.join("items.csv"), outputs)?;
    }
    write_json(&dir.join("summary.json"), &summary(outputs))
}
