//! Acceptance criteria for the simulator, each evaluated at full scale.
//!
//! [`evaluate`] runs criteria 1 to 8 in order and hands every verdict to a
//! callback as soon as it is known.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::time::Instant;

use degenloop_cli::experiment::{run_all, SeriesOutput};
use degenloop_cli::presets::{growth_series_name, noise_series_name, Preset, PresetOptions, GROWTH_RATES};
use degenloop_cli::verify::{
    closed_form_max_relative_error, run_check, speed_ratio, Check, FIXED_SET_SPEED_TOL, LINEAR_REL_TOL, ORACLE_HORIZON,
    RANDOM_SPEED_TOL,
};
use degenloop_cli::{commands, CliError};
use degenloop_core::engine::{MeanStd, DEFAULT_MASTER_SEED};
use degenloop_core::metrics::{predicted_speed_bandit, serving_rates, tail_slope, DEFAULT_WINDOW};
use degenloop_core::{run_batch_map, PolicyKind, PolicyTag, SimConfig};

type Outcome = Result<(bool, String), CliError>;

const SEED: u64 = DEFAULT_MASTER_SEED;

fn pooled_se(a: &MeanStd, b: &MeanStd, n: usize) -> f64 {
    (a.sem(n).powi(2) + b.sem(n).powi(2)).sqrt()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let report = run_check(Check::LinearRegimes, SEED)?;
    let worst = closed_form_max_relative_error(SEED);
    let elapsed = start.elapsed().as_secs_f64();
    let failed: Vec<&str> = report.failures().map(|a| a.name.as_str()).collect();
    let ok = report.passed && worst <= LINEAR_REL_TOL && elapsed < 1.0;
    Ok((
        ok,
        format!("max rel err {worst:.3e} (<= {LINEAR_REL_TOL:e}), failed assertions {failed:?}, {elapsed:.3}s (< 1s)"),
    ))
}

/// Per-run final L² speed and final-interval serving rates for the Fig. 2/3 configuration.
struct StandardRuns {
    speeds: Vec<f64>,
    rates: Vec<Vec<f64>>,
}

fn standard_runs(tag: PolicyTag) -> Result<StandardRuns, CliError> {
    let config = SimConfig::standard(PolicyKind::new(tag));
    let m = config.m0;
    let l = config.l;
    let per_run = run_batch_map(&config, |_, traj| {
        let last = traj.last();
        let mut rates = vec![0.0; m];
        for (item, rate) in serving_rates(&last.serve_counts, last.interval_length, l)? {
            rates[item.index()] = rate;
        }
        Ok::<_, degenloop_core::Error>((last.l2_speed.unwrap_or(0.0), rates))
    })?;
    let mut runs = StandardRuns { speeds: Vec::new(), rates: Vec::new() };
    for r in per_run {
        let (speed, rates) = r?;
        runs.speeds.push(speed);
        runs.rates.push(rates);
    }
    Ok(runs)
}

fn criterion_2(runs: &HashMap<PolicyTag, StandardRuns>) -> Outcome {
    let order =
        [PolicyTag::OptimalOracle, PolicyTag::Oracle, PolicyTag::ThompsonSampling, PolicyTag::Ucb, PolicyTag::Random];
    let stats: Vec<(PolicyTag, MeanStd, usize)> =
        order.iter().map(|t| (*t, MeanStd::of(&runs[t].speeds), runs[t].speeds.len())).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for w in stats.windows(2) {
        let (hi_tag, hi, n) = &w[0];
        let (lo_tag, lo, _) = &w[1];
        let gap = hi.mean - lo.mean;
        let se = pooled_se(hi, lo, *n);
        ok &= gap > se;
        parts.push(format!("{hi_tag}>{lo_tag} gap {gap:.3e} se {se:.3e}"));
    }
    let means: Vec<String> = stats.iter().map(|(t, s, _)| format!("{t} {:.4e}", s.mean)).collect();
    Ok((ok, format!("means [{}]; {}", means.join(", "), parts.join("; "))))
}

fn criterion_3(runs: &HashMap<PolicyTag, StandardRuns>, config: &SimConfig) -> Outcome {
    let l = config.l;
    let mut ok = true;
    let mut parts = Vec::new();
    for tag in [PolicyTag::Oracle, PolicyTag::OptimalOracle, PolicyTag::ThompsonSampling, PolicyTag::Ucb] {
        let rates = &runs[&tag].rates;
        let concentrated = rates
            .iter()
            .filter(|r| {
                let mut sorted = (*r).clone();
                sorted.sort_by(|a, b| b.total_cmp(a));
                sorted.iter().take(l).sum::<f64>() >= 4.95
            })
            .count();
        let fraction = concentrated as f64 / rates.len() as f64;
        ok &= fraction >= 0.9;
        parts.push(format!("{tag} {concentrated}/{}", rates.len()));
    }
    let p = l as f64 / config.m0 as f64;
    let n = config.report_interval as f64;
    let sigma = (p * (1.0 - p) / n).sqrt();
    let random = &runs[&PolicyTag::Random].rates;
    let total = random.iter().map(Vec::len).sum::<usize>();
    let outside = random.iter().flatten().filter(|&&r| (r - p).abs() > 3.0 * sigma).count();
    ok &= outside == 0;
    parts.push(format!(
        "random rates outside 3 sigma ({sigma:.4}): {outside}/{total} (about {:.1} expected by chance)",
        total as f64 * binomial_outside_3sigma(config.report_interval, p)
    ));
    Ok((ok, parts.join("; ")))
}

/// `P(|X/n − p| > 3σ)` for `X ~ Bin(n, p)`.
fn binomial_outside_3sigma(n: u64, p: f64) -> f64 {
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    let mean = n as f64 * p;
    let mut ln_pmf = n as f64 * (1.0 - p).ln();
    let mut outside = 0.0;
    for k in 0..=n {
        if k > 0 {
            ln_pmf += ((n - k + 1) as f64 / k as f64).ln() + (p / (1.0 - p)).ln();
        }
        if (k as f64 - mean).abs() > 3.0 * sigma {
            outside += ln_pmf.exp();
        }
    }
    outside
}

fn criterion_4() -> Outcome {
    let (emp, pred) = speed_ratio(PolicyTag::Random, SEED)?;
    let (emp_o, pred_o) = speed_ratio(PolicyTag::OptimalOracle, SEED)?;
    let dev = (emp / pred - 1.0).abs();
    let dev_o = (emp_o / pred_o - 1.0).abs();
    let ok = dev <= RANDOM_SPEED_TOL && dev_o <= FIXED_SET_SPEED_TOL;
    Ok((
        ok,
        format!(
            "random empirical {emp:.4e} predicted {pred:.4e} deviation {dev:.3} (<= {RANDOM_SPEED_TOL}); \
             optimal_oracle empirical {emp_o:.4e} predicted {pred_o:.4e} deviation {dev_o:.3} (<= {FIXED_SET_SPEED_TOL})"
        ),
    ))
}

fn by_name(outputs: &[SeriesOutput]) -> BTreeMap<&str, &SeriesOutput> {
    outputs.iter().map(|o| (o.spec.name.as_str(), o)).collect()
}

fn final_speed(o: &SeriesOutput) -> (MeanStd, usize) {
    let point = o.batch.final_point().expect("non-empty batch");
    (point.l2_speed.expect("speed at t >= 1"), o.batch.runs.len())
}

fn criterion_5() -> Outcome {
    let opts = PresetOptions::default();
    let outputs = run_all(Preset::Fig5.series(&opts), false)?;
    let series = by_name(&outputs);
    let speed = |eps: f64| final_speed(series[noise_series_name(PolicyTag::Oracle, eps).as_str()]);
    let (base, _) = speed(0.0);
    let (s05, _) = speed(0.5);
    let (s1, _) = speed(1.0);
    let peak = s05.mean.max(s1.mean);
    let mut ok = peak > base.mean;
    let mut parts = vec![format!("eps0 {:.4e}, max(eps0.5, eps1) {peak:.4e}", base.mean)];
    let grid = [1.0, 2.0, 5.0, 10.0];
    for w in grid.windows(2) {
        let (a, n) = speed(w[0]);
        let (b, _) = speed(w[1]);
        let se = pooled_se(&a, &b, n);
        ok &= b.mean <= a.mean + se;
        parts.push(format!("eps{}->{} {:.4e}->{:.4e} se {se:.2e}", w[0], w[1], a.mean, b.mean));
    }
    Ok((ok, parts.join("; ")))
}

fn criterion_6() -> Outcome {
    let opts = PresetOptions::default();
    let outputs = run_all(Preset::Fig6.series(&opts), false)?;
    let series = by_name(&outputs);
    let max_delta = SimConfig::standard(PolicyKind::new(PolicyTag::Oracle)).delta_range.1.abs();
    let slope = |tag: PolicyTag, eta: f64| -> Result<f64, CliError> {
        let o = series[growth_series_name(tag, eta).as_str()];
        let points: Vec<(f64, f64)> = o.batch.aggregate.iter().map(|p| (p.t as f64, p.sup.mean)).collect();
        Ok(tail_slope(&points, DEFAULT_WINDOW)?)
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for tag in [PolicyTag::Oracle, PolicyTag::OptimalOracle] {
        for eta in GROWTH_RATES {
            let s = slope(tag, eta)?;
            ok &= s > 0.5 * max_delta;
            parts.push(format!("{tag} eta{eta} {s:.3e}"));
        }
    }
    for tag in [PolicyTag::Random, PolicyTag::Ucb] {
        let (s0, s05) = (slope(tag, 0.0)?, slope(tag, 0.5)?);
        ok &= s05 < 0.1 * s0;
        parts.push(format!("{tag} eta0.5/eta0 {:.3}", s05 / s0));
    }
    let tag = PolicyTag::ThompsonSampling;
    let (s0, s05, s1) = (slope(tag, 0.0)?, slope(tag, 0.5)?, slope(tag, 1.0)?);
    ok &= s1 < 0.1 * s0 && s05 > 0.25 * s0;
    parts.push(format!("{tag} eta1/eta0 {:.3} eta0.5/eta0 {:.3}", s1 / s0, s05 / s0));
    Ok((ok, format!("threshold {:.3e}; {}", 0.5 * max_delta, parts.join("; "))))
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for check in [Check::Strong, Check::Threshold, Check::Scale] {
        let report = run_check(check, SEED)?;
        ok &= report.passed;
        let failed: Vec<&str> = report.failures().map(|a| a.name.as_str()).collect();
        let measured: Vec<String> = report
            .assertions
            .iter()
            .filter(|a| a.name.contains("fraction"))
            .map(|a| format!("{} {}", a.name, a.measured))
            .collect();
        parts.push(format!("{} failed {failed:?} {}", check.name(), measured.join(" ")).trim_end().to_string());
    }
    Ok((ok, parts.join("; ")))
}

fn run_preset(preset: Preset, dir: &Path, threads: usize) -> Result<Vec<u8>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    pool.install(|| commands::figure(preset, dir, &PresetOptions::default()))?;
    let path = dir.join("trajectory.csv");
    fs::read(&path).map_err(|e| CliError::io(path, e))
}

fn criterion_8() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| CliError::io(std::env::temp_dir(), e))?;
    let mut ok = true;
    let mut parts = Vec::new();
    for preset in Preset::ALL {
        let a = run_preset(preset, &tmp.path().join(format!("{}_j1", preset.name())), 1)?;
        let b = run_preset(preset, &tmp.path().join(format!("{}_j4", preset.name())), 4)?;
        let same = !a.is_empty() && a == b;
        ok &= same;
        parts.push(format!("{} {}", preset.name(), if same { "identical" } else { "differs" }));
    }
    Ok((ok, format!("jobs 1 vs 4: {}", parts.join(", "))))
}

/// `m*` values probed for the bandit speed prediction.
pub const M_STAR_PROBE: [usize; 6] = [1, 2, 5, 10, 20, 50];

/// Compares UCB and TS speeds at the Appendix C scale with
/// `predicted_speed_bandit` over [`M_STAR_PROBE`], reporting the `m*` each
/// empirical speed implies. Informational only.
pub fn bandit_probe() -> Result<String, CliError> {
    let mut parts = Vec::new();
    for tag in [PolicyTag::Ucb, PolicyTag::ThompsonSampling] {
        let mut config = SimConfig::standard(PolicyKind::new(tag));
        config.horizon = ORACLE_HORIZON;
        config.report_interval = 1_000;
        config.master_seed = SEED;
        let per_run = run_batch_map(&config, |_, traj| {
            let empirical = traj.last().l2_speed.unwrap_or(0.0);
            let predicted: Result<Vec<f64>, _> =
                M_STAR_PROBE.iter().map(|&m| predicted_speed_bandit(&traj.deltas, m)).collect();
            predicted.map(|p| (empirical, p))
        })?;
        let per_run: Vec<(f64, Vec<f64>)> = per_run.into_iter().collect::<Result<_, _>>()?;
        let n = per_run.len() as f64;
        let empirical = per_run.iter().map(|r| r.0).sum::<f64>() / n;
        let at_one = per_run.iter().map(|r| r.1[0]).sum::<f64>() / n;
        let ratios: Vec<String> = M_STAR_PROBE
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let predicted = per_run.iter().map(|r| r.1[i]).sum::<f64>() / n;
                format!("m*={m} {:.2}", empirical / predicted)
            })
            .collect();
        let implied = (at_one / empirical).powi(2);
        parts.push(format!("{tag} empirical/predicted [{}] implied m* {implied:.1}", ratios.join(", ")));
    }
    Ok(parts.join("; "))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub criterion: u32,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn from_outcome(criterion: u32, outcome: Outcome) -> Self {
        match outcome {
            Ok((passed, detail)) => Verdict { criterion, passed, detail },
            Err(e) => Verdict { criterion, passed: false, detail: format!("error: {e}") },
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "criterion {}: {verdict} {}", self.criterion, self.detail)
    }
}

/// Evaluates every criterion; returns whether all passed.
pub fn evaluate(mut emit: impl FnMut(&Verdict)) -> bool {
    let mut all_ok = true;
    let mut report = |n: u32, outcome: Outcome| {
        let verdict = Verdict::from_outcome(n, outcome);
        all_ok &= verdict.passed;
        emit(&verdict);
    };
    report(1, criterion_1());

    let standard = SimConfig::standard(PolicyKind::new(PolicyTag::Random));
    let runs: Result<HashMap<PolicyTag, StandardRuns>, CliError> =
        PolicyTag::ALL.iter().map(|&tag| Ok((tag, standard_runs(tag)?))).collect();
    match &runs {
        Ok(runs) => {
            report(2, criterion_2(runs));
            report(3, criterion_3(runs, &standard));
        }
        Err(e) => {
            report(2, Err(CliError::Runtime(e.to_string())));
            report(3, Err(CliError::Runtime(e.to_string())));
        }
    }
    report(4, criterion_4());
    report(5, criterion_5());
    report(6, criterion_6());
    report(7, criterion_7());
    report(8, criterion_8());
    all_ok
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_tail_matches_enumeration() {
        let (n, p) = (20u64, 0.3);
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        let choose = |k: u64| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
        let expected: f64 = (0..=n)
            .filter(|&k| (k as f64 - n as f64 * p).abs() > 3.0 * sigma)
            .map(|k| choose(k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32))
            .sum();
        assert!((binomial_outside_3sigma(n, p) - expected).abs() < 1e-12);
        assert!(binomial_outside_3sigma(500, 0.05) > 0.001 && binomial_outside_3sigma(500, 0.05) < 0.006);
    }

    #[test]
    fn pooled_error_adds_in_quadrature() {
        let a = MeanStd { mean: 0.0, std: 3.0 };
        let b = MeanStd { mean: 0.0, std: 4.0 };
        assert!((pooled_se(&a, &b, 1) - 5.0).abs() < 1e-12);
        assert!((pooled_se(&a, &b, 25) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn verdict_lines() {
        let v = Verdict::from_outcome(3, Ok((false, "x".into())));
        assert_eq!(v.to_string(), "criterion 3: FAIL x");
        let v = Verdict::from_outcome(1, Err(CliError::Runtime("boom".into())));
        assert_eq!(v.to_string(), "criterion 1: FAIL error: boom");
    }
}
