//! User-interest state and the laws that move it.
//!
//! Three families are housed here:
//!
//! * Bernoulli feedback: a served item's interest moves up by `δ(a)` when it
//!   is clicked and down by `δ(a)` otherwise.
//! * Linear deterministic: `μ_{t+1} = (1+k) μ_t + b`, with its closed form and
//!   a classification of the long-run behaviour.
//! * Threshold: interest rises whenever it sits strictly above a moving
//!   threshold `d_t` and falls otherwise.
//!
//! [`InterestStepper`] is the single-item stochastic plugin point used by the
//! theorem harnesses.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::engine::sigmoid;
use crate::error::{Error, Result};
use crate::policies::ItemId;

/// Per-item interest. Item ids are dense, so the id is the index.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InterestVector(Vec<f64>);

impl InterestVector {
    pub fn new(values: Vec<f64>) -> Self {
        InterestVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, item: ItemId) -> Option<f64> {
        self.0.get(item.index()).copied()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn push(&mut self, value: f64) -> ItemId {
        self.0.push(value);
        ItemId(self.0.len() - 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ItemId, f64)> + '_ {
        self.0.iter().enumerate().map(|(i, &v)| (ItemId(i), v))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for InterestVector {
    fn from(values: Vec<f64>) -> Self {
        InterestVector(values)
    }
}

impl std::ops::Index<ItemId> for InterestVector {
    type Output = f64;

    fn index(&self, item: ItemId) -> &f64 {
        &self.0[item.index()]
    }
}

/// A real sequence indexed by step, evaluated lazily.
pub type Sequence = Arc<dyn Fn(u64) -> f64 + Send + Sync>;

/// How a served item's interest responds to the user's feedback.
#[derive(Clone)]
pub enum DriftSpec {
    /// `μ ± δ(a)` on click / no click.
    BernoulliSymmetric { delta: Vec<f64> },
    /// `μ_{t+1} = (1+k) μ_t + b`.
    LinearDeterministic { k: f64, b: f64 },
    /// `μ_{t+1} = μ_t + m_t` if `μ_t > d_t`, else `μ_t - m_t`.
    Threshold(ThresholdDynamics),
}

impl fmt::Debug for DriftSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftSpec::BernoulliSymmetric { delta } => {
                f.debug_struct("BernoulliSymmetric").field("items", &delta.len()).finish()
            }
            DriftSpec::LinearDeterministic { k, b } => {
                f.debug_struct("LinearDeterministic").field("k", k).field("b", b).finish()
            }
            DriftSpec::Threshold(_) => f.write_str("Threshold(..)"),
        }
    }
}

impl DriftSpec {
    /// The drift map of a Bernoulli-feedback spec.
    pub fn deltas(&self) -> Option<&[f64]> {
        match self {
            DriftSpec::BernoulliSymmetric { delta } => Some(delta),
            _ => None,
        }
    }
}

/// Threshold dynamics with lazily evaluated `d_t` and `m_t`.
#[derive(Clone)]
pub struct ThresholdDynamics {
    thresholds: Sequence,
    magnitudes: Sequence,
}

impl ThresholdDynamics {
    pub fn new(
        thresholds: impl Fn(u64) -> f64 + Send + Sync + 'static,
        magnitudes: impl Fn(u64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ThresholdDynamics { thresholds: Arc::new(thresholds), magnitudes: Arc::new(magnitudes) }
    }

    pub fn threshold(&self, t: u64) -> f64 {
        (self.thresholds)(t)
    }

    pub fn magnitude(&self, t: u64) -> f64 {
        (self.magnitudes)(t)
    }

    /// One step at time `t`; rejects non-positive magnitudes.
    pub fn step(&self, mu: f64, t: u64) -> Result<f64> {
        let m = self.magnitude(t);
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::invalid(format!("threshold magnitude at step {t} is {m}, must be > 0")));
        }
        let next = threshold_step(mu, self.threshold(t), m);
        if !next.is_finite() {
            return Err(Error::NumericOverflow { step: t });
        }
        Ok(next)
    }
}

/// Bernoulli-feedback update of one served item.
pub fn step_bernoulli(mu: f64, delta: f64, clicked: bool) -> f64 {
    if clicked {
        mu + delta
    } else {
        mu - delta
    }
}

pub fn linear_step(mu: f64, k: f64, b: f64) -> f64 {
    (1.0 + k) * mu + b
}

/// `μ_t` of the linear model without iterating.
pub fn linear_closed_form(mu0: f64, k: f64, b: f64, t: u32) -> f64 {
    if k == 0.0 {
        return mu0 + b * f64::from(t);
    }
    let shift = b / k;
    let growth = match i32::try_from(t) {
        Ok(t) => (1.0 + k).powi(t),
        Err(_) => (1.0 + k).powf(f64::from(t)),
    };
    (mu0 + shift) * growth - shift
}

/// `[μ_0, μ_1, …, μ_steps]` by repeated [`linear_step`].
pub fn iterate_linear(mu0: f64, k: f64, b: f64, steps: u32) -> Result<Vec<f64>> {
    let mut orbit = Vec::with_capacity(steps as usize + 1);
    let mut mu = mu0;
    orbit.push(mu);
    for t in 0..steps {
        mu = linear_step(mu, k, b);
        if !mu.is_finite() {
            return Err(Error::NumericOverflow { step: u64::from(t) + 1 });
        }
        orbit.push(mu);
    }
    Ok(orbit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    /// `k = 0, b ≠ 0`: interest drifts by `b` every step.
    ConstantDrift,
    /// `|1+k| < 1`: converges to the equilibrium.
    ConvergesToEquilibrium,
    /// Starts at the equilibrium (or `k = b = 0`) and never moves.
    FixedAtEquilibrium,
    /// `k = -2`: two-cycle `{μ0, 2μ̄ - μ0}`.
    Alternating,
    /// `1+k > 1`: monotone exponential divergence.
    StrongDivergence,
    /// `1+k < -1`: oscillating divergence, `limsup |μ_t| = ∞`.
    WeakDivergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearRegime {
    pub kind: RegimeKind,
    /// `-b/k`, present iff `k ≠ 0`.
    pub equilibrium: Option<f64>,
}

/// Long-run behaviour of the linear model for exact parameters.
///
/// Boundaries (`k == 0`, `k == -2`, `μ0 == μ̄`) are compared exactly; a
/// perturbed parameter may land in a different regime.
pub fn classify_linear(k: f64, b: f64, mu0: f64) -> LinearRegime {
    if k == 0.0 {
        let kind = if b == 0.0 { RegimeKind::FixedAtEquilibrium } else { RegimeKind::ConstantDrift };
        return LinearRegime { kind, equilibrium: None };
    }
    let eq = -b / k;
    let rate = 1.0 + k;
    let kind = if mu0 == eq {
        RegimeKind::FixedAtEquilibrium
    } else if rate.abs() < 1.0 {
        RegimeKind::ConvergesToEquilibrium
    } else if k == -2.0 {
        RegimeKind::Alternating
    } else if rate > 1.0 {
        RegimeKind::StrongDivergence
    } else {
        RegimeKind::WeakDivergence
    };
    LinearRegime { kind, equilibrium: Some(eq) }
}

/// Interest rises by `magnitude` when strictly above the threshold `d`, and
/// falls by `magnitude` otherwise.
pub fn threshold_step(mu: f64, d: f64, magnitude: f64) -> f64 {
    debug_assert!(magnitude > 0.0);
    if mu > d {
        mu + magnitude
    } else {
        mu - magnitude
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionEstimate {
    pub is_contraction: bool,
    /// Largest `|g(x) - g(y)| / |x - y|` over all distinct sample pairs.
    pub ratio: f64,
}

/// Sampled Lipschitz estimate of `step_fn`; a contraction verdict needs the
/// ratio to stay below `1 - tolerance`. This is evidence on the supplied grid,
/// not a proof.
pub fn is_contraction_estimate(
    step_fn: impl Fn(f64) -> f64,
    sample_points: &[f64],
    tolerance: f64,
) -> Result<ContractionEstimate> {
    let mut points: Vec<f64> = sample_points.to_vec();
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("sample points must be finite"));
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    if points.len() < 2 {
        return Err(Error::invalid("need at least 2 distinct sample points"));
    }
    let images: Vec<f64> = points.iter().map(|&x| step_fn(x)).collect();
    if images.iter().any(|y| !y.is_finite()) {
        return Err(Error::invalid("step function produced a non-finite value"));
    }
    let mut ratio = 0.0_f64;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let r = (images[i] - images[j]).abs() / (points[i] - points[j]).abs();
            ratio = ratio.max(r);
        }
    }
    Ok(ContractionEstimate { is_contraction: ratio < 1.0 - tolerance, ratio })
}

/// Applies `psi` entrywise after checking it is strictly monotonic on the
/// values present in `mu`.
pub fn rescale(mu: &InterestVector, psi: impl Fn(f64) -> f64) -> Result<InterestVector> {
    let mapped: Vec<f64> = mu.as_slice().iter().map(|&x| psi(x)).collect();
    if mapped.iter().any(|y| !y.is_finite()) {
        return Err(Error::invalid("rescaling produced a non-finite value"));
    }
    check_strictly_monotonic(mu.as_slice(), &psi)?;
    Ok(InterestVector(mapped))
}

/// Relative gap below which two sampled values count as the same point.
const MONOTONE_MERGE_GAP: f64 = 1e-9;

/// Checks that `psi` is strictly monotonic over the distinct values of `xs`.
/// Values within rounding distance of each other are merged first.
pub(crate) fn check_strictly_monotonic(xs: &[f64], psi: impl Fn(f64) -> f64) -> Result<()> {
    let mut all: Vec<f64> = xs.to_vec();
    all.sort_by(f64::total_cmp);
    let mut sorted: Vec<f64> = Vec::with_capacity(all.len());
    for x in all {
        match sorted.last() {
            Some(&last) if x - last <= MONOTONE_MERGE_GAP * x.abs().max(last.abs()) => {}
            _ => sorted.push(x),
        }
    }
    let images: Vec<f64> = sorted.iter().map(|&x| psi(x)).collect();
    let increasing = images.windows(2).all(|w| w[1] > w[0]);
    let decreasing = images.windows(2).all(|w| w[1] < w[0]);
    if increasing || decreasing {
        Ok(())
    } else {
        Err(Error::invalid("psi is not strictly monotonic on the sampled values"))
    }
}

/// A single-item interest process `μ_{t+1} = μ_t + f(μ_t, ξ_t)`.
pub trait InterestStepper: Sync {
    fn step(&self, mu: f64, rng: &mut dyn RngCore) -> f64;
}

/// One item served every step under Bernoulli feedback with click
/// probability `sigmoid(μ)`.
#[derive(Debug, Clone, Copy)]
pub struct BernoulliFeedback {
    pub delta: f64,
}

impl InterestStepper for BernoulliFeedback {
    fn step(&self, mu: f64, rng: &mut dyn RngCore) -> f64 {
        let clicked = rng.random::<f64>() < sigmoid(mu);
        step_bernoulli(mu, self.delta, clicked)
    }
}

/// Deterministic linear model; consumes no randomness.
#[derive(Debug, Clone, Copy)]
pub struct LinearDrift {
    pub k: f64,
    pub b: f64,
}

impl InterestStepper for LinearDrift {
    fn step(&self, mu: f64, _rng: &mut dyn RngCore) -> f64 {
        linear_step(mu, self.k, self.b)
    }
}

/// `f ≡ 0`.
#[derive(Debug, Clone, Copy)]
pub struct Frozen;

impl InterestStepper for Frozen {
    fn step(&self, mu: f64, _rng: &mut dyn RngCore) -> f64 {
        mu
    }
}

/// Bernoulli feedback expressed on the bounded state `ν = sigmoid(μ) ∈ (0,1)`.
///
/// The click probability is `ν` itself and the update is
/// `ν' = sigmoid(logit(ν) ± δ)`, so `logit` of this process tracks the
/// unbounded [`BernoulliFeedback`] process draw for draw.
#[derive(Debug, Clone, Copy)]
pub struct LogisticConjugate {
    pub delta: f64,
}

impl InterestStepper for LogisticConjugate {
    fn step(&self, nu: f64, rng: &mut dyn RngCore) -> f64 {
        let clicked = rng.random::<f64>() < nu;
        sigmoid(step_bernoulli(logit(nu), self.delta, clicked))
    }
}

/// Closure-backed stepper for user-supplied `f(μ, ξ)`.
pub struct FnStepper<F>(pub F);

impl<F> InterestStepper for FnStepper<F>
where
    F: Fn(f64, &mut dyn RngCore) -> f64 + Sync,
{
    fn step(&self, mu: f64, rng: &mut dyn RngCore) -> f64 {
        (self.0)(mu, rng)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}
