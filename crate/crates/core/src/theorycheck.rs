//! Verification harnesses for the degeneracy results.
//!
//! Almost-sure statements can only be sampled, so weak and strong degeneracy
//! are reported as escape fractions over many seeded runs of a single-item
//! process. The threshold result is traced exactly, and scale invariance is
//! checked by comparing growth verdicts of rescaled and raw distance series.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{check_strictly_monotonic, logit, BernoulliFeedback, InterestStepper, ThresholdDynamics};
use crate::engine::sigmoid;
use crate::error::{Error, Result};
use crate::metrics::{self, tail_slope};
use crate::rng;

/// Pass level for escape fractions.
pub const ESCAPE_PASS: f64 = 0.95;

/// A series counts as diverging when its tail elasticity exceeds this.
pub const DIVERGENCE_ELASTICITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyVerdict {
    pub n_runs: usize,
    pub horizon: u64,
    pub threshold: f64,
    /// Runs with `max_t |μ_t| ≥ B`.
    pub escape_fraction: f64,
    /// Runs with `|μ_t| ≥ B` throughout the last half of the steps.
    pub stay_escaped_fraction: f64,
    /// Runs that reached `B` before the last half and later fell below it.
    pub returned_fraction: f64,
    pub mean_terminal_abs: f64,
    pub min_abs_increment: f64,
    pub max_abs_increment: f64,
}

#[derive(Debug, Clone, Copy)]
struct RunSummary {
    escaped: bool,
    stayed: bool,
    returned: bool,
    terminal_abs: f64,
    min_inc: f64,
    max_inc: f64,
}

fn simulate_run(stepper: &dyn InterestStepper, mu0: f64, b: f64, horizon: u64, seed: u64) -> RunSummary {
    let mut rng = rng::seeded(seed);
    let half = horizon / 2;
    let mut mu = mu0;
    let mut escaped_early = mu.abs() >= b && half > 0;
    let mut escaped = mu.abs() >= b;
    let mut stayed = true;
    let mut returned = false;
    let (mut min_inc, mut max_inc) = (f64::INFINITY, 0.0f64);
    if half == 0 {
        stayed = mu.abs() >= b;
    }
    for t in 1..=horizon {
        let next = stepper.step(mu, &mut rng as &mut dyn RngCore);
        let inc = (next - mu).abs();
        min_inc = min_inc.min(inc);
        max_inc = max_inc.max(inc);
        mu = next;
        let out = mu.abs() >= b;
        escaped |= out;
        if t < half {
            escaped_early |= out;
        } else if !out {
            stayed = false;
            returned |= escaped_early;
        }
    }
    RunSummary { escaped, stayed, returned, terminal_abs: mu.abs(), min_inc, max_inc }
}

fn verdict(
    stepper: &dyn InterestStepper,
    mu0: f64,
    b: f64,
    horizon: u64,
    n_runs: usize,
    master_seed: u64,
) -> Result<DegeneracyVerdict> {
    if b.is_nan() || b < 0.0 {
        return Err(Error::invalid(format!("threshold B = {b} must be non-negative")));
    }
    if n_runs == 0 {
        return Err(Error::invalid("n_runs must be positive"));
    }
    let runs: Vec<RunSummary> = (0..n_runs)
        .into_par_iter()
        .map(|i| simulate_run(stepper, mu0, b, horizon, rng::run_seed(master_seed, i as u64)))
        .collect();
    let n = n_runs as f64;
    let frac = |f: fn(&RunSummary) -> bool| runs.iter().filter(|r| f(r)).count() as f64 / n;
    Ok(DegeneracyVerdict {
        n_runs,
        horizon,
        threshold: b,
        escape_fraction: frac(|r| r.escaped),
        stay_escaped_fraction: frac(|r| r.stayed),
        returned_fraction: frac(|r| r.returned),
        mean_terminal_abs: runs.iter().map(|r| r.terminal_abs).sum::<f64>() / n,
        min_abs_increment: runs.iter().map(|r| r.min_inc).fold(f64::INFINITY, f64::min),
        max_abs_increment: runs.iter().map(|r| r.max_inc).fold(0.0, f64::max),
    })
}

/// Escape statistics for weak degeneracy: does `|μ_t|` ever reach `B`?
///
/// Run `i` uses `run_seed(master_seed, i)` whatever the horizon, so the
/// escape fraction is non-decreasing in the horizon.
pub fn verify_weak(
    stepper: &dyn InterestStepper,
    mu0: f64,
    b: f64,
    horizon: u64,
    n_runs: usize,
    master_seed: u64,
) -> Result<DegeneracyVerdict> {
    verdict(stepper, mu0, b, horizon, n_runs, master_seed)
}

/// Escape statistics for strong degeneracy; the relevant field is
/// `stay_escaped_fraction`.
pub fn verify_strong(
    stepper: &dyn InterestStepper,
    mu0: f64,
    b: f64,
    horizon: u64,
    n_runs: usize,
    master_seed: u64,
) -> Result<DegeneracyVerdict> {
    verdict(stepper, mu0, b, horizon, n_runs, master_seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub holds: bool,
    /// `μ_0, …, μ_horizon`.
    pub trace: Vec<f64>,
    /// `+1` or `-1` after `t0`; 0 when nothing was stepped.
    pub direction: i8,
    pub monotone: bool,
    /// First step at or after `t0` where the move direction changed.
    pub first_reversal: Option<u64>,
    pub displacement: f64,
    pub magnitude_sum: f64,
    pub sum_error: f64,
}

/// Traces threshold dynamics from `mu0` and checks that after `t0` the
/// process moves monotonically with `|μ_horizon − μ_t0| = Σ m_t`.
///
/// Fails with an invalid-fixture error when some `m_t ≤ 0` or
/// `|d_{t+1} − d_t| > m_t` for `t0 ≤ t < horizon`.
pub fn verify_threshold(dynamics: &ThresholdDynamics, mu0: f64, t0: u64, horizon: u64) -> Result<ThresholdReport> {
    if t0 > horizon {
        return Err(Error::InvalidFixture(format!("t0 = {t0} is past the horizon {horizon}")));
    }
    for t in t0..horizon {
        let m = dynamics.magnitude(t);
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidFixture(format!("magnitude m_{t} = {m} is not positive")));
        }
        let jump = (dynamics.threshold(t + 1) - dynamics.threshold(t)).abs();
        if jump > m {
            return Err(Error::InvalidFixture(format!("threshold moves by {jump} at step {t}, more than m_{t} = {m}")));
        }
    }
    let mut trace = Vec::with_capacity(horizon as usize + 1);
    trace.push(mu0);
    let mut mu = mu0;
    for t in 0..horizon {
        mu = dynamics.step(mu, t).map_err(|e| match e {
            Error::InvalidInput(msg) => Error::InvalidFixture(msg),
            other => other,
        })?;
        trace.push(mu);
    }
    let start = t0 as usize;
    let mut direction = 0i8;
    let mut first_reversal = None;
    for (i, w) in trace[start..].windows(2).enumerate() {
        let d = if w[1] > w[0] { 1 } else { -1 };
        if direction == 0 {
            direction = d;
        } else if d != direction && first_reversal.is_none() {
            first_reversal = Some(t0 + i as u64);
        }
    }
    let monotone = first_reversal.is_none();
    let displacement = (trace[horizon as usize] - trace[start]).abs();
    let magnitude_sum: f64 = (t0..horizon).map(|t| dynamics.magnitude(t)).sum();
    let sum_error = (displacement - magnitude_sum).abs();
    let scale = trace[horizon as usize].abs().max(trace[start].abs()).max(magnitude_sum);
    let tolerance = (horizon - t0) as f64 * f64::EPSILON * scale;
    Ok(ThresholdReport {
        holds: monotone && sum_error <= tolerance,
        trace,
        direction,
        monotone,
        first_reversal,
        displacement,
        magnitude_sum,
        sum_error,
    })
}

type Psi = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A multi-item process, a monotone map applied to its states, and the
/// process whose raw distances the rescaled distances are compared with.
pub struct ScaleFixture {
    pub stepper: Box<dyn InterestStepper + Send>,
    pub mu0: Vec<f64>,
    pub psi: Psi,
    /// Reference process; `None` compares against the raw distances of the
    /// simulated process itself.
    pub twin: Option<(Box<dyn InterestStepper + Send>, Vec<f64>)>,
}

impl ScaleFixture {
    pub fn identity(stepper: impl InterestStepper + Send + 'static, mu0: Vec<f64>) -> Self {
        ScaleFixture { stepper: Box::new(stepper), mu0, psi: Box::new(|x| x), twin: None }
    }

    pub fn affine(stepper: impl InterestStepper + Send + 'static, mu0: Vec<f64>, slope: f64, intercept: f64) -> Self {
        ScaleFixture { stepper: Box::new(stepper), mu0, psi: Box::new(move |x| slope * x + intercept), twin: None }
    }

    /// Bernoulli feedback simulated on `(0,1)` through the logistic map and
    /// read back with `logit`, compared with the unbounded process.
    pub fn logistic(delta: f64, mu0: Vec<f64>) -> Self {
        ScaleFixture {
            stepper: Box::new(crate::dynamics::LogisticConjugate { delta }),
            mu0: mu0.iter().map(|&x| sigmoid(x)).collect(),
            psi: Box::new(logit),
            twin: Some((Box::new(BernoulliFeedback { delta }), mu0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleReport {
    pub matches: bool,
    pub psi_diverging: bool,
    pub reference_diverging: bool,
    pub psi_elasticity: f64,
    pub reference_elasticity: f64,
    pub final_psi_norm: f64,
    pub final_reference_norm: f64,
}

const SCALE_SAMPLES: u64 = 50;

/// Steps every item once per step, drawing from one stream in item order,
/// and samples `‖ψ∘μ_t − ψ∘μ_0‖₂` on a regular grid.
fn sampled_norms(
    stepper: &dyn InterestStepper,
    mu0: &[f64],
    psi: &dyn Fn(f64) -> f64,
    horizon: u64,
    seed: u64,
    visited: &mut Vec<f64>,
) -> Vec<(f64, f64)> {
    let mut rng = rng::seeded(seed);
    let every = (horizon / SCALE_SAMPLES).max(1);
    let base: Vec<f64> = mu0.iter().map(|&x| psi(x)).collect();
    let mut mu = mu0.to_vec();
    let mut series = Vec::new();
    visited.extend_from_slice(mu0);
    for t in 1..=horizon {
        for x in mu.iter_mut() {
            *x = stepper.step(*x, &mut rng as &mut dyn RngCore);
        }
        if t % every == 0 || t == horizon {
            visited.extend_from_slice(&mu);
            let mapped: Vec<f64> = mu.iter().map(|&x| psi(x)).collect();
            series.push((t as f64, metrics::l2_distance(&mapped, &base)));
        }
    }
    series
}

fn elasticity(series: &[(f64, f64)]) -> Result<f64> {
    let &(t_last, v_last) = series.last().ok_or_else(|| Error::invalid("empty series"))?;
    if v_last <= 0.0 {
        return Ok(0.0);
    }
    Ok(tail_slope(series, metrics::DEFAULT_WINDOW)? * t_last / v_last)
}

/// Compares the growth verdict of rescaled distances with that of the
/// reference distances on the same seed.
pub fn verify_scale_invariance(fixture: &ScaleFixture, horizon: u64, seed: u64) -> Result<ScaleReport> {
    if horizon < 2 {
        return Err(Error::invalid("scale check needs a horizon of at least 2"));
    }
    if fixture.mu0.is_empty() {
        return Err(Error::invalid("scale fixture has no items"));
    }
    let mut visited = Vec::new();
    let rescaled = sampled_norms(fixture.stepper.as_ref(), &fixture.mu0, &fixture.psi, horizon, seed, &mut visited);
    check_strictly_monotonic(&visited, &fixture.psi)?;
    let identity = |x: f64| x;
    let reference = match &fixture.twin {
        Some((twin, mu0)) => sampled_norms(twin.as_ref(), mu0, &identity, horizon, seed, &mut Vec::new()),
        None => sampled_norms(fixture.stepper.as_ref(), &fixture.mu0, &identity, horizon, seed, &mut Vec::new()),
    };
    let psi_elasticity = elasticity(&rescaled)?;
    let reference_elasticity = elasticity(&reference)?;
    let psi_diverging = psi_elasticity > DIVERGENCE_ELASTICITY;
    let reference_diverging = reference_elasticity > DIVERGENCE_ELASTICITY;
    Ok(ScaleReport {
        matches: psi_diverging == reference_diverging,
        psi_diverging,
        reference_diverging,
        psi_elasticity,
        reference_elasticity,
        final_psi_norm: rescaled.last().map_or(0.0, |p| p.1),
        final_reference_norm: reference.last().map_or(0.0, |p| p.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Frozen, LinearDrift};

    const EQ3: BernoulliFeedback = BernoulliFeedback { delta: 0.01 };

    #[test]
    fn bernoulli_feedback_escapes_and_stays_out() {
        let v = verify_strong(&EQ3, 0.0, 5.0, 100_000, 200, 1).unwrap();
        assert_eq!(v.escape_fraction, 1.0);
        assert!(v.stay_escaped_fraction >= ESCAPE_PASS, "{v:?}");
        assert_eq!(v.returned_fraction, 0.0);
        assert!(v.stay_escaped_fraction <= v.escape_fraction);
        assert!(v.mean_terminal_abs >= 0.5 * 0.01 * 100_000.0);
        assert!(v.mean_terminal_abs <= 0.01 * 100_000.0);
        let tol = 4.0 * f64::EPSILON * 1000.0;
        assert!((v.max_abs_increment - 0.01).abs() <= tol);
        assert!((v.min_abs_increment - 0.01).abs() <= tol);
    }

    #[test]
    fn escape_fraction_grows_with_horizon() {
        let mut prev = 0.0;
        for horizon in [500, 5_000, 50_000] {
            let v = verify_weak(&EQ3, 0.0, 5.0, horizon, 200, 3).unwrap();
            assert!(v.escape_fraction >= prev);
            prev = v.escape_fraction;
        }
        assert_eq!(prev, 1.0);
    }

    #[test]
    fn zero_threshold_always_escapes() {
        assert_eq!(verify_weak(&Frozen, 0.0, 0.0, 10, 5, 0).unwrap().escape_fraction, 1.0);
        assert_eq!(verify_weak(&EQ3, 0.3, 0.0, 10, 5, 0).unwrap().escape_fraction, 1.0);
    }

    #[test]
    fn control_fixtures_do_not_escape() {
        let v = verify_weak(&Frozen, 0.0, 1.0, 10_000, 50, 0).unwrap();
        assert_eq!(v.escape_fraction, 0.0);
        let reverting = LinearDrift { k: -0.5, b: 0.0 };
        let v = verify_weak(&reverting, 2.0, 3.0, 10_000, 50, 0).unwrap();
        assert_eq!(v.escape_fraction, 0.0);
        assert!(v.mean_terminal_abs < 1e-12);
    }

    #[test]
    fn verdicts_replay() {
        let a = verify_weak(&EQ3, 0.0, 2.0, 3000, 40, 11).unwrap();
        assert_eq!(a, verify_weak(&EQ3, 0.0, 2.0, 3000, 40, 11).unwrap());
        assert!(verify_weak(&EQ3, 0.0, -1.0, 10, 5, 0).is_err());
    }

    #[test]
    fn threshold_examples() {
        let up = ThresholdDynamics::new(|_| 0.0, |_| 0.5);
        let r = verify_threshold(&up, 1.0, 0, 100).unwrap();
        assert!(r.holds);
        assert_eq!(r.direction, 1);
        assert_eq!(r.trace[100], 51.0);
        assert_eq!(r.sum_error, 0.0);

        let r = verify_threshold(&up, 0.0, 0, 100).unwrap();
        assert!(r.holds);
        assert_eq!(r.direction, -1);
        assert_eq!(r.trace[100], -50.0);

        // Threshold chasing upward by half a step each time.
        let chase = ThresholdDynamics::new(|t| 0.125 * t as f64, |_| 0.25);
        let r = verify_threshold(&chase, 0.5, 0, 400).unwrap();
        assert!(r.holds && r.direction == 1);
        assert_eq!(r.sum_error, 0.0);
        assert!(r.trace.iter().enumerate().all(|(t, &mu)| mu > 0.125 * t as f64));
    }

    #[test]
    fn threshold_monotone_only_after_t0() {
        // Threshold sweeps past the start point, then stays within reach.
        let d = ThresholdDynamics::new(|t| if t < 3 { 10.0 - 5.0 * t as f64 } else { 0.0 }, |_| 1.0);
        assert!(matches!(verify_threshold(&d, 1.0, 0, 20), Err(Error::InvalidFixture(_))));
        let r = verify_threshold(&d, 1.0, 3, 20).unwrap();
        assert!(r.holds);
        assert_eq!(r.magnitude_sum, 17.0);
    }

    #[test]
    fn threshold_fixture_violations() {
        let jumpy = ThresholdDynamics::new(|t| t as f64, |_| 0.5);
        assert!(matches!(verify_threshold(&jumpy, 0.0, 0, 10), Err(Error::InvalidFixture(_))));
        let dead = ThresholdDynamics::new(|_| 0.0, |t| if t == 4 { 0.0 } else { 1.0 });
        assert!(matches!(verify_threshold(&dead, 0.0, 0, 10), Err(Error::InvalidFixture(_))));
        // The trace still has to step through the dead magnitude before t0.
        assert!(verify_threshold(&dead, 0.0, 5, 10).is_err());
        let late = ThresholdDynamics::new(|_| 0.0, |t| if t == 12 { 0.0 } else { 1.0 });
        assert!(verify_threshold(&late, 0.0, 0, 10).unwrap().holds);
    }

    fn spread(n: usize) -> Vec<f64> {
        (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn identity_and_affine_rescaling_keep_the_verdict() {
        let r = verify_scale_invariance(&ScaleFixture::identity(EQ3, spread(20)), 2000, 4).unwrap();
        assert!(r.matches && r.psi_diverging);
        assert_eq!(r.final_psi_norm, r.final_reference_norm);

        let r = verify_scale_invariance(&ScaleFixture::affine(EQ3, spread(20), 2.0, 3.0), 2000, 4).unwrap();
        assert!(r.matches && r.psi_diverging);
        assert!((r.final_psi_norm / r.final_reference_norm - 2.0).abs() < 1e-9);

        let r = verify_scale_invariance(&ScaleFixture::affine(EQ3, spread(20), -0.5, 1.0), 2000, 4).unwrap();
        assert!(r.matches);
    }

    #[test]
    fn logistic_conjugate_diverges_through_logit() {
        let r = verify_scale_invariance(&ScaleFixture::logistic(0.01, spread(20)), 2000, 4).unwrap();
        assert!(r.matches && r.psi_diverging && r.reference_diverging, "{r:?}");
        assert!((r.final_psi_norm / r.final_reference_norm - 1.0).abs() < 1e-4);
    }

    #[test]
    fn non_diverging_controls_match_too() {
        let r = verify_scale_invariance(&ScaleFixture::affine(Frozen, spread(5), 3.0, 0.0), 1000, 0).unwrap();
        assert!(r.matches && !r.psi_diverging);
        let reverting = LinearDrift { k: -0.5, b: 0.0 };
        let r = verify_scale_invariance(&ScaleFixture::identity(reverting, spread(5)), 1000, 0).unwrap();
        assert!(r.matches && !r.psi_diverging);
    }

    #[test]
    fn non_monotone_psi_is_rejected() {
        let mut fixture = ScaleFixture::identity(EQ3, spread(10));
        fixture.psi = Box::new(|x| x * x);
        assert!(verify_scale_invariance(&fixture, 200, 0).is_err());
    }
}
