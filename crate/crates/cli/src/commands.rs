//! Subcommand implementations. Output files are written only after all
//! simulations of the command have finished.

use std::fs;
use std::path::Path;

use degenloop_core::SimConfig;
use serde_json::json;

use crate::artifacts::{self, Extras};
use crate::config::{self, SCHEMA_VERSION};
use crate::error::CliError;
use crate::experiment::{run_all, SeriesOutput, SeriesSpec};
use crate::format::{fmt_num, fmt_opt};
use crate::presets::{noise_series_name, Preset, PresetOptions};
use crate::sweep::{sweep_specs, SweepParam, SWEEP_HEADER};
use crate::verify::{run_check, Check, Report};

fn series_name(config: &SimConfig) -> String {
    if config.policy.noise_epsilon > 0.0 {
        noise_series_name(config.policy.tag, config.policy.noise_epsilon)
    } else {
        config.policy.tag.name().to_string()
    }
}

pub fn run(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut config = config::load_config(config_path)?;
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    let outputs = run_all(vec![SeriesSpec::new(series_name(&config), config.clone())], false)?;
    artifacts::write_outputs(out, &config::echo(&config), &outputs, Extras::default())
}

fn series_echo(outputs: &[SeriesOutput]) -> Vec<serde_json::Value> {
    outputs.iter().map(|o| json!({ "name": o.spec.name, "config": config::echo(&o.spec.config) })).collect()
}

pub fn figure(preset: Preset, out: &Path, opts: &PresetOptions) -> Result<(), CliError> {
    let outputs = run_all(preset.series(opts), preset.per_item())?;
    let echo = json!({
        "schema_version": SCHEMA_VERSION,
        "preset": preset.name(),
        "master_seed": opts.master_seed,
        "series": series_echo(&outputs),
    });
    artifacts::write_outputs(out, &echo, &outputs, Extras { aggregate: true, items: preset.per_item() })
}

pub fn sweep(
    param: SweepParam,
    values: &[f64],
    config_path: &Path,
    out: &Path,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let mut base = config::load_config(config_path)?;
    if let Some(seed) = seed {
        base.master_seed = seed;
    }
    let specs = sweep_specs(param, values, &base)?;
    let mut results = Vec::with_capacity(specs.len());
    for (dir, spec) in specs {
        let outputs = run_all(vec![spec], false)?;
        results.push((dir, outputs));
    }
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let table = out.join("sweep.csv");
    let mut w = csv::Writer::from_path(&table).map_err(|e| CliError::Runtime(format!("{}: {e}", table.display())))?;
    let csv_err = |e: csv::Error| CliError::Runtime(format!("{}: {e}", table.display()));
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for ((dir, outputs), &value) in results.iter().zip(values) {
        let o = &outputs[0];
        artifacts::write_outputs(&out.join(dir), &config::echo(&o.spec.config), outputs, Extras::default())?;
        if let Some(p) = o.batch.final_point() {
            w.write_record([
                param.name().to_string(),
                fmt_num(value),
                o.spec.name.clone(),
                p.t.to_string(),
                o.batch.runs.len().to_string(),
                fmt_opt(p.l2_speed.map(|m| m.mean)),
                fmt_opt(p.l2_speed.map(|m| m.std)),
                fmt_opt(p.sup_speed.map(|m| m.mean)),
                fmt_opt(p.sup_speed.map(|m| m.std)),
                fmt_num(p.l2.mean),
                fmt_num(p.sup.mean),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| CliError::io(&table, e))?;
    let echo = json!({
        "schema_version": SCHEMA_VERSION,
        "sweep": { "param": param.name(), "values": values },
        "base": config::echo(&base),
    });
    artifacts::write_json(&out.join("config.echo.json"), &echo)
}

/// Runs a check and writes `verify_<check>.json`, whether or not it passed.
pub fn verify(check: Check, seed: u64, out: &Path) -> Result<Report, CliError> {
    let report = run_check(check, seed)?;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let value = serde_json::to_value(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    artifacts::write_json(&out.join(format!("verify_{}.json", check.name())), &value)?;
    Ok(report)
}

pub fn verification_error(report: &Report) -> Option<CliError> {
    if report.passed {
        return None;
    }
    let failed: Vec<&str> = report.failures().map(|a| a.name.as_str()).collect();
    Some(CliError::Verification(format!("{}: {}", report.check, failed.join(", "))))
}
