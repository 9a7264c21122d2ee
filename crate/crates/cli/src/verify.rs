//! Named verification checks producing JSON pass/fail reports.

use clap::ValueEnum;
use degenloop_core::dynamics::{
    classify_linear, iterate_linear, linear_closed_form, linear_step, BernoulliFeedback, Frozen, LinearDrift,
    RegimeKind, ThresholdDynamics,
};
use degenloop_core::metrics::{predicted_speed_fixed_set, predicted_speed_random};
use degenloop_core::theorycheck::{
    verify_scale_invariance, verify_strong, verify_threshold, verify_weak, ScaleFixture, ESCAPE_PASS,
};
use degenloop_core::{run_batch_map, Error, PolicyKind, PolicyTag, SimConfig};
use rand::Rng;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Weak,
    Strong,
    Threshold,
    Scale,
    #[value(name = "linear_regimes")]
    LinearRegimes,
    #[value(name = "speed_oracles")]
    SpeedOracles,
}

impl Check {
    pub const ALL: [Check; 6] =
        [Check::Weak, Check::Strong, Check::Threshold, Check::Scale, Check::LinearRegimes, Check::SpeedOracles];

    pub fn name(self) -> &'static str {
        match self {
            Check::Weak => "weak",
            Check::Strong => "strong",
            Check::Threshold => "threshold",
            Check::Scale => "scale",
            Check::LinearRegimes => "linear_regimes",
            Check::SpeedOracles => "speed_oracles",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Assertion {
    pub fn at_least(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Assertion { name: name.into(), measured, threshold, passed: measured >= threshold }
    }

    pub fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Assertion { name: name.into(), measured, threshold, passed: measured <= threshold }
    }

    /// A yes/no outcome recorded as 1 or 0 against a threshold of 1.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Assertion { name: name.into(), measured: f64::from(u8::from(ok)), threshold: 1.0, passed: ok }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub check: String,
    pub seed: u64,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
}

impl Report {
    fn new(check: Check, seed: u64, assertions: Vec<Assertion>) -> Self {
        Report { check: check.name().into(), seed, passed: assertions.iter().all(|a| a.passed), assertions }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }
}

pub const EQ3_DELTA: f64 = 0.01;
pub const ESCAPE_B: f64 = 5.0;
pub const THEOREM_RUNS: usize = 200;
pub const THEOREM_HORIZON: u64 = 100_000;

pub fn run_check(check: Check, seed: u64) -> Result<Report, CliError> {
    let assertions = match check {
        Check::Weak => weak(seed)?,
        Check::Strong => strong(seed)?,
        Check::Threshold => threshold()?,
        Check::Scale => scale(seed)?,
        Check::LinearRegimes => linear_regimes(seed)?,
        Check::SpeedOracles => speed_oracles(seed)?,
    };
    Ok(Report::new(check, seed, assertions))
}

fn weak(seed: u64) -> Result<Vec<Assertion>, CliError> {
    let eq3 = BernoulliFeedback { delta: EQ3_DELTA };
    let mut out = Vec::new();
    let mut prev = 0.0;
    let mut monotone = true;
    for horizon in [1_000, 10_000, THEOREM_HORIZON] {
        let v = verify_weak(&eq3, 0.0, ESCAPE_B, horizon, THEOREM_RUNS, seed)?;
        monotone &= v.escape_fraction >= prev;
        prev = v.escape_fraction;
        if horizon == THEOREM_HORIZON {
            out.push(Assertion::at_least(format!("escape_fraction_b{ESCAPE_B}_h{horizon}"), v.escape_fraction, 1.0));
        }
    }
    out.push(Assertion::holds("escape_fraction_non_decreasing_in_horizon", monotone));
    let v = verify_weak(&eq3, 0.0, 0.0, 1_000, THEOREM_RUNS, seed)?;
    out.push(Assertion::at_least("escape_fraction_b0", v.escape_fraction, 1.0));
    let v = verify_weak(&Frozen, 0.0, 1.0, THEOREM_HORIZON, THEOREM_RUNS, seed)?;
    out.push(Assertion::at_most("control_zero_drift_escape_fraction", v.escape_fraction, 0.0));
    out.push(reverting_control(seed)?);
    Ok(out)
}

fn reverting_control(seed: u64) -> Result<Assertion, CliError> {
    let v = verify_weak(&LinearDrift { k: -0.5, b: 0.0 }, 0.5, 2.0, THEOREM_HORIZON, THEOREM_RUNS, seed)?;
    Ok(Assertion::at_most("control_mean_reverting_escape_fraction", v.escape_fraction, 0.0))
}

fn strong(seed: u64) -> Result<Vec<Assertion>, CliError> {
    let eq3 = BernoulliFeedback { delta: EQ3_DELTA };
    let v = verify_strong(&eq3, 0.0, ESCAPE_B, THEOREM_HORIZON, THEOREM_RUNS, seed)?;
    let scale = EQ3_DELTA * THEOREM_HORIZON as f64;
    let tol = 4.0 * f64::EPSILON * scale.max(1.0);
    Ok(vec![
        Assertion::at_least("escape_fraction", v.escape_fraction, 1.0),
        Assertion::at_least("stay_escaped_fraction", v.stay_escaped_fraction, ESCAPE_PASS),
        Assertion::at_most("returned_fraction", v.returned_fraction, 0.0),
        Assertion::at_least("mean_terminal_abs_lower", v.mean_terminal_abs, 0.5 * scale),
        Assertion::at_most("mean_terminal_abs_upper", v.mean_terminal_abs, scale),
        Assertion::at_most("max_increment_minus_delta", (v.max_abs_increment - EQ3_DELTA).abs(), tol),
        Assertion::at_most("min_increment_minus_delta", (v.min_abs_increment - EQ3_DELTA).abs(), tol),
        reverting_control(seed)?,
    ])
}

fn threshold() -> Result<Vec<Assertion>, CliError> {
    let mut out = Vec::new();
    let cases: [(&str, ThresholdDynamics, f64, u64, f64); 3] = [
        ("constant_up", ThresholdDynamics::new(|_| 0.0, |_| 0.5), 1.0, 100, 51.0),
        ("constant_down", ThresholdDynamics::new(|_| 0.0, |_| 0.5), 0.0, 100, -50.0),
        ("chasing_threshold", ThresholdDynamics::new(|t| 0.125 * t as f64, |_| 0.25), 0.5, 400, 100.5),
    ];
    for (name, dynamics, mu0, horizon, expected) in cases {
        let r = verify_threshold(&dynamics, mu0, 0, horizon)?;
        out.push(Assertion::holds(format!("{name}_monotone"), r.holds));
        out.push(Assertion::at_most(format!("{name}_sum_error"), r.sum_error, 0.0));
        out.push(Assertion::at_most(
            format!("{name}_final_value_error"),
            (r.trace[horizon as usize] - expected).abs(),
            0.0,
        ));
    }
    let jumpy = ThresholdDynamics::new(|t| t as f64, |_| 0.5);
    let rejected = matches!(verify_threshold(&jumpy, 0.0, 0, 10), Err(Error::InvalidFixture(_)));
    out.push(Assertion::holds("violating_fixture_rejected", rejected));
    Ok(out)
}

const SCALE_HORIZON: u64 = 2_000;

fn spread(n: usize) -> Vec<f64> {
    (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect()
}

fn scale(seed: u64) -> Result<Vec<Assertion>, CliError> {
    let eq3 = BernoulliFeedback { delta: EQ3_DELTA };
    let mut out = Vec::new();
    let fixtures = [
        ("identity", ScaleFixture::identity(eq3, spread(20))),
        ("affine", ScaleFixture::affine(eq3, spread(20), 2.0, 3.0)),
        ("logit_conjugate", ScaleFixture::logistic(EQ3_DELTA, spread(20))),
    ];
    for (name, fixture) in &fixtures {
        let r = verify_scale_invariance(fixture, SCALE_HORIZON, seed)?;
        out.push(Assertion::holds(format!("{name}_verdicts_match"), r.matches));
        out.push(Assertion::holds(format!("{name}_diverging"), r.psi_diverging));
        if *name == "affine" {
            let ratio = r.final_psi_norm / r.final_reference_norm;
            out.push(Assertion::at_most("affine_norm_ratio_error", (ratio - 2.0).abs(), 1e-9));
        }
    }
    let control = ScaleFixture::affine(Frozen, spread(5), 2.0, 3.0);
    let r = verify_scale_invariance(&control, SCALE_HORIZON, seed)?;
    out.push(Assertion::holds("frozen_control_matches_and_stays_bounded", r.matches && !r.psi_diverging));
    Ok(out)
}

pub const LINEAR_SAMPLES: usize = 1_000;
pub const LINEAR_MAX_T: u32 = 100;
pub const LINEAR_REL_TOL: f64 = 1e-9;
const REGIME_STEPS: u32 = 10_000;
const DIVERGENCE_LEVEL: f64 = 1e6;

/// Largest `|closed − iterated| / |iterated|` over random parameters and
/// every `t ≤ 100`.
pub fn closed_form_max_relative_error(seed: u64) -> f64 {
    let mut rng = degenloop_core::rng::seeded(seed);
    let mut worst = 0.0f64;
    for _ in 0..LINEAR_SAMPLES {
        let mu0 = rng.random_range(-10.0..10.0);
        let k = rng.random_range(-3.0..1.0);
        let b = rng.random_range(-5.0..5.0);
        let orbit = iterate_linear(mu0, k, b, LINEAR_MAX_T).expect("bounded orbit");
        for (t, &it) in orbit.iter().enumerate() {
            let closed = linear_closed_form(mu0, k, b, t as u32);
            let err = if it == closed { 0.0 } else { (it - closed).abs() / it.abs() };
            worst = worst.max(err);
        }
    }
    worst
}

/// Simulates `REGIME_STEPS` steps and checks the behaviour the regime implies.
fn regime_behaviour(kind: RegimeKind, k: f64, b: f64, mu0: f64) -> (bool, f64, f64) {
    let eq = if k == 0.0 { f64::NAN } else { -b / k };
    let mut orbit = vec![mu0];
    let mut mu = mu0;
    for _ in 0..REGIME_STEPS {
        mu = linear_step(mu, k, b);
        orbit.push(mu);
        if !mu.is_finite() {
            break;
        }
    }
    let peak = orbit.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    match kind {
        RegimeKind::ConvergesToEquilibrium => {
            let gap = (mu - eq).abs();
            (gap <= 1e-6, gap, 1e-6)
        }
        RegimeKind::FixedAtEquilibrium => {
            let drift = orbit.iter().map(|x| (x - mu0).abs()).fold(0.0, f64::max);
            (drift == 0.0, drift, 0.0)
        }
        RegimeKind::Alternating => {
            let exact = orbit.windows(3).all(|w| w[2] == w[0]) && orbit[1] != orbit[0];
            let err = orbit.windows(3).map(|w| (w[2] - w[0]).abs()).fold(0.0, f64::max);
            (exact, err, 0.0)
        }
        RegimeKind::StrongDivergence | RegimeKind::WeakDivergence | RegimeKind::ConstantDrift => {
            (peak > DIVERGENCE_LEVEL, peak, DIVERGENCE_LEVEL)
        }
    }
}

pub const REGIME_FIXTURES: [(&str, RegimeKind, f64, f64, f64); 6] = [
    ("converges", RegimeKind::ConvergesToEquilibrium, -0.5, 1.0, 5.0),
    ("fixed_point", RegimeKind::FixedAtEquilibrium, -0.5, 1.0, 2.0),
    ("alternating", RegimeKind::Alternating, -2.0, 1.0, 3.0),
    ("strong_divergence", RegimeKind::StrongDivergence, 0.5, 0.0, 1.0),
    ("weak_divergence", RegimeKind::WeakDivergence, -2.5, 0.0, 1.0),
    ("constant_drift", RegimeKind::ConstantDrift, 0.0, 200.0, 0.0),
];

fn linear_regimes(seed: u64) -> Result<Vec<Assertion>, CliError> {
    let mut out = Vec::new();
    for (name, kind, k, b, mu0) in REGIME_FIXTURES {
        let classified = classify_linear(k, b, mu0).kind == kind;
        out.push(Assertion::holds(format!("{name}_classified"), classified));
        let (passed, measured, threshold) = regime_behaviour(kind, k, b, mu0);
        out.push(Assertion { name: format!("{name}_simulated"), measured, threshold, passed });
    }
    out.push(Assertion::at_most(
        "closed_form_max_relative_error",
        closed_form_max_relative_error(seed),
        LINEAR_REL_TOL,
    ));
    Ok(out)
}

pub const ORACLE_HORIZON: u64 = 20_000;
pub const RANDOM_SPEED_TOL: f64 = 0.25;
pub const FIXED_SET_SPEED_TOL: f64 = 0.15;

/// Mean empirical final L² speed and mean predicted speed over the runs.
pub fn speed_ratio(tag: PolicyTag, seed: u64) -> Result<(f64, f64), CliError> {
    let mut config = SimConfig::standard(PolicyKind::new(tag));
    config.horizon = ORACLE_HORIZON;
    config.report_interval = 1_000;
    config.n_runs = 30;
    config.master_seed = seed;
    let pairs = run_batch_map(&config, |_, traj| {
        let empirical = traj.last().l2_speed.unwrap_or(0.0);
        let predicted = match tag {
            PolicyTag::OptimalOracle => {
                let served: Vec<f64> =
                    traj.final_serve_counts.iter().zip(&traj.deltas).filter(|(&n, _)| n > 0).map(|(_, &d)| d).collect();
                predicted_speed_fixed_set(&served)
            }
            _ => predicted_speed_random(&traj.deltas, config.l, config.m0),
        };
        predicted.map(|p| (empirical, p))
    })?;
    let pairs: Vec<(f64, f64)> = pairs.into_iter().collect::<Result<_, _>>()?;
    let n = pairs.len() as f64;
    Ok((pairs.iter().map(|p| p.0).sum::<f64>() / n, pairs.iter().map(|p| p.1).sum::<f64>() / n))
}

fn speed_oracles(seed: u64) -> Result<Vec<Assertion>, CliError> {
    let (emp, pred) = speed_ratio(PolicyTag::Random, seed)?;
    let (emp_o, pred_o) = speed_ratio(PolicyTag::OptimalOracle, seed)?;
    Ok(vec![
        Assertion::at_most("random_relative_deviation", (emp / pred - 1.0).abs(), RANDOM_SPEED_TOL),
        Assertion::at_most("optimal_oracle_relative_deviation", (emp_o / pred_o - 1.0).abs(), FIXED_SET_SPEED_TOL),
    ])
}
