//! Recommender models and action selection.
//!
//! Every policy ranks the candidate pool with an internal score `θ_t` and
//! serves the top `l` items; Random ignores scores and samples uniformly.
//! Ties are always broken towards the lowest item id.

mod recommender;
pub mod thompson;
pub mod ucb;

use std::cmp::Ordering;
use std::fmt;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::dynamics::{DriftSpec, InterestVector};
use crate::error::{Error, Result};

pub(crate) use recommender::{ItemView, Recommender};
pub use thompson::{ts_scores, ts_update, TsSelector, TsState};
pub use ucb::{ucb_index, ucb_select, ucb_update, UcbState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub usize);

impl ItemId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyTag {
    Random,
    Oracle,
    OptimalOracle,
    Ucb,
    #[serde(rename = "ts")]
    ThompsonSampling,
}

impl PolicyTag {
    pub const ALL: [PolicyTag; 5] =
        [PolicyTag::OptimalOracle, PolicyTag::Oracle, PolicyTag::ThompsonSampling, PolicyTag::Ucb, PolicyTag::Random];

    pub fn name(self) -> &'static str {
        match self {
            PolicyTag::Random => "random",
            PolicyTag::Oracle => "oracle",
            PolicyTag::OptimalOracle => "optimal_oracle",
            PolicyTag::Ucb => "ucb",
            PolicyTag::ThompsonSampling => "ts",
        }
    }
}

impl fmt::Display for PolicyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PolicyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyTag::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown policy `{s}`")))
    }
}

/// A policy plus the half-width of uniform noise added to its scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyKind {
    pub tag: PolicyTag,
    #[serde(default)]
    pub noise_epsilon: f64,
}

impl PolicyKind {
    pub fn new(tag: PolicyTag) -> Self {
        PolicyKind { tag, noise_epsilon: 0.0 }
    }

    pub fn with_noise(tag: PolicyTag, noise_epsilon: f64) -> Self {
        PolicyKind { tag, noise_epsilon }
    }
}

/// The ordered items served at one step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action(Vec<ItemId>);

impl Action {
    /// Rejects duplicates and ids outside `0..pool`.
    pub fn new(items: Vec<ItemId>, pool: usize) -> Result<Self> {
        let mut seen = items.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != items.len() {
            return Err(Error::invalid("action contains duplicate items"));
        }
        if let Some(bad) = items.iter().find(|a| a.index() >= pool) {
            return Err(Error::invalid(format!("item {bad} is outside the pool of {pool}")));
        }
        Ok(Action(items))
    }

    pub(crate) fn from_unchecked(items: Vec<ItemId>) -> Self {
        Action(items)
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Clicks aligned with an [`Action`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickVector(pub Vec<bool>);

impl ClickVector {
    pub fn check_aligned(&self, action: &Action) -> Result<()> {
        if self.0.len() == action.len() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "click vector of length {} does not match action of length {}",
                self.0.len(),
                action.len()
            )))
        }
    }
}

/// The oracle knows the interest exactly: `θ_t = μ_t` for every item.
pub fn oracle_scores(mu: &InterestVector) -> Result<Vec<f64>> {
    if mu.is_empty() {
        return Err(Error::invalid("empty candidate pool"));
    }
    Ok(mu.as_slice().to_vec())
}

/// The optimal oracle scores by signed drift `δ(a)`.
pub fn optimal_oracle_scores(drift: &DriftSpec) -> Result<Vec<f64>> {
    match drift {
        DriftSpec::BernoulliSymmetric { delta } if delta.is_empty() => Err(Error::invalid("empty candidate pool")),
        DriftSpec::BernoulliSymmetric { delta } => Ok(delta.clone()),
        other => Err(Error::invalid(format!("optimal oracle needs Bernoulli-symmetric drift, got {other:?}"))),
    }
}

/// `θ' = θ + U([-ε, ε])`, independently per item. `ε = 0` draws nothing.
pub fn add_noise(scores: &mut [f64], epsilon: f64, rng: &mut dyn RngCore) {
    if epsilon == 0.0 {
        return;
    }
    for s in scores.iter_mut() {
        *s += epsilon * (2.0 * rng.random::<f64>() - 1.0);
    }
}

/// Descending score, then ascending id.
pub(crate) fn rank_order(a: (f64, usize), b: (f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// The `l` best `(score, id)` pairs in rank order.
pub(crate) fn top_l_of(mut candidates: Vec<(f64, usize)>, l: usize) -> Vec<ItemId> {
    if candidates.len() > l && l > 0 {
        candidates.select_nth_unstable_by(l - 1, |&a, &b| rank_order(a, b));
        candidates.truncate(l);
    }
    candidates.sort_unstable_by(|&a, &b| rank_order(a, b));
    candidates.into_iter().take(l).map(|(_, id)| ItemId(id)).collect()
}

pub(crate) fn check_pool(pool: usize, l: usize) -> Result<()> {
    if l == 0 {
        return Err(Error::invalid("l must be positive"));
    }
    if pool < l {
        return Err(Error::invalid(format!("pool of {pool} items is smaller than l = {l}")));
    }
    Ok(())
}

/// Uniform `l`-subset of `0..pool`.
pub(crate) fn random_subset(pool: usize, l: usize, rng: &mut dyn RngCore) -> Action {
    let items = rand::seq::index::sample(rng, pool, l).into_iter().map(ItemId).collect();
    Action::from_unchecked(items)
}

/// Top-`l` selection over items `0..pool` of `scores`.
///
/// Random draws `l` distinct items uniformly and ignores `scores`; every other
/// policy takes the `l` largest scores, lowest id first on ties.
pub fn select_top_l(scores: &[f64], pool: usize, l: usize, rng: &mut dyn RngCore, kind: PolicyTag) -> Result<Action> {
    check_pool(pool, l)?;
    if kind == PolicyTag::Random {
        return Ok(random_subset(pool, l, rng));
    }
    if scores.len() < pool {
        return Err(Error::invalid(format!("{} scores for a pool of {pool}", scores.len())));
    }
    if scores[..pool].iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN score"));
    }
    let candidates = scores[..pool].iter().copied().zip(0..).collect();
    Ok(Action::from_unchecked(top_l_of(candidates, l)))
}
