//! Beta-Bernoulli Thompson sampling.
//!
//! Every item starts at `Beta(1, 1)`; a served item gets `α += c`,
//! `β += 1 - c`. At each step one score is drawn per item and the top `l`
//! are served.
//!
//! [`TsSelector`] produces the same selection distribution without drawing a
//! score for every item. Items sharing `(α, β)` are exchangeable, so for each
//! group only its top `min(l, n)` order statistics are drawn (through the
//! Beta quantile function) and handed to a uniformly random subset of the
//! group's members. No other member of the group can reach the overall top
//! `l`. This keeps steps cheap when tens of thousands of never-served items
//! sit in the pool.

use std::collections::BTreeMap;

use rand::{Rng, RngCore};
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::{check_pool, Action, ClickVector, ItemId};
use crate::error::{Error, Result};

/// Posterior parameters per item.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TsState {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl TsState {
    pub fn new(pool: usize) -> Self {
        TsState { alpha: vec![1.0; pool], beta: vec![1.0; pool] }
    }

    pub fn grow(&mut self, pool: usize) {
        if pool > self.alpha.len() {
            self.alpha.resize(pool, 1.0);
            self.beta.resize(pool, 1.0);
        }
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn alpha(&self, item: ItemId) -> f64 {
        self.alpha[item.index()]
    }

    pub fn beta(&self, item: ItemId) -> f64 {
        self.beta[item.index()]
    }

    pub fn observe(&mut self, action: &Action, clicks: &ClickVector) -> Result<()> {
        clicks.check_aligned(action)?;
        for (&item, &clicked) in action.items().iter().zip(&clicks.0) {
            let a = item.index();
            let (alpha, beta) = ts_update(self.alpha[a], self.beta[a], clicked);
            self.alpha[a] = alpha;
            self.beta[a] = beta;
        }
        Ok(())
    }
}

pub fn ts_update(alpha: f64, beta: f64, click: bool) -> (f64, f64) {
    if click {
        (alpha + 1.0, beta)
    } else {
        (alpha, beta + 1.0)
    }
}

/// One independent `Beta(α[a], β[a])` draw for every item in `0..pool`.
pub fn ts_scores(state: &TsState, pool: usize, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
    if pool > state.len() {
        return Err(Error::invalid(format!("TS state covers {} items, pool has {pool}", state.len())));
    }
    (0..pool)
        .map(|a| {
            let dist = Beta::new(state.alpha[a], state.beta[a])
                .map_err(|e| Error::invalid(format!("bad Beta parameters for item {a}: {e}")))?;
            Ok(dist.sample(rng))
        })
        .collect()
}

/// `x` with `P(X > x) = q` for `X ~ Beta(a, b)`, integer `a, b ≥ 1`.
///
/// Uses `P(X > x) = P(Bin(a+b-1, x) ≤ a-1)` and solves for `y = 1 - x`, which
/// keeps precision in the upper tail where order statistics of large groups
/// live.
pub fn beta_upper_quantile(a: u32, b: u32, q: f64) -> f64 {
    debug_assert!(a >= 1 && b >= 1);
    if q <= 0.0 {
        return 1.0;
    }
    if q >= 1.0 {
        return 0.0;
    }
    if a == 1 {
        // P(X > x) = (1-x)^b
        return 1.0 - q.powf(1.0 / f64::from(b));
    }
    if b == 1 {
        // P(X > x) = 1 - x^a
        return ((-q).ln_1p() / f64::from(a)).exp();
    }
    // Newton on ln P(X > 1 - y), falling back to bisection off the bracket.
    let ln_q = q.ln();
    let ln_norm = ln_factorial(a + b - 1) - ln_factorial(a - 1) - ln_factorial(b - 1);
    let (fa, fb) = (f64::from(a), f64::from(b));
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut y = fb / (fa + fb);
    for _ in 0..200 {
        let tail = upper_tail_in_y(a, b, y);
        if tail < q {
            lo = y;
        } else {
            hi = y;
        }
        let density = (ln_norm + (fb - 1.0) * y.ln() + (fa - 1.0) * (-y).ln_1p()).exp();
        let mut next = y - (tail.ln() - ln_q) * tail / density;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - y).abs() <= 4.0 * f64::EPSILON * y || next == lo || next == hi;
        y = next;
        if done {
            break;
        }
    }
    1.0 - y
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| f64::from(k).ln()).sum()
}

/// `P(X > 1 - y)` for `X ~ Beta(a, b)`; increasing in `y`.
fn upper_tail_in_y(a: u32, b: u32, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y >= 1.0 {
        return 1.0;
    }
    let n = f64::from(a + b - 1);
    let ln_y = y.ln();
    let ln_x = (-y).ln_1p();
    let mut ln_choose = 0.0_f64;
    let mut total = 0.0;
    for j in 0..a {
        let j = f64::from(j);
        total += (ln_choose + j * ln_x + (n - j) * ln_y).exp();
        ln_choose += ((n - j) / (j + 1.0)).ln();
    }
    total.min(1.0)
}

/// Quantile cost grows with `α`; beyond this, draw members individually.
const ORDER_STAT_MAX_ALPHA: u32 = 64;

/// Thompson sampling state organised by `(α, β)` groups.
#[derive(Debug, Clone, Default)]
pub struct TsSelector {
    successes: Vec<u32>,
    failures: Vec<u32>,
    groups: BTreeMap<(u32, u32), Vec<usize>>,
    /// Position of each item inside its group.
    slot: Vec<usize>,
}

impl TsSelector {
    pub fn new(pool: usize) -> Self {
        let mut sel = TsSelector::default();
        sel.grow(pool);
        sel
    }

    pub fn len(&self) -> usize {
        self.successes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.successes.is_empty()
    }

    pub fn grow(&mut self, pool: usize) {
        let old = self.len();
        if pool <= old {
            return;
        }
        self.successes.resize(pool, 0);
        self.failures.resize(pool, 0);
        self.slot.resize(pool, 0);
        for a in old..pool {
            self.insert(a);
        }
    }

    fn key(&self, a: usize) -> (u32, u32) {
        (self.successes[a] + 1, self.failures[a] + 1)
    }

    fn insert(&mut self, a: usize) {
        let members = self.groups.entry(self.key(a)).or_default();
        self.slot[a] = members.len();
        members.push(a);
    }

    fn remove(&mut self, a: usize) {
        let key = self.key(a);
        let members = self.groups.get_mut(&key).expect("item is grouped");
        let pos = self.slot[a];
        members.swap_remove(pos);
        if let Some(&moved) = members.get(pos) {
            self.slot[moved] = pos;
        }
        if members.is_empty() {
            self.groups.remove(&key);
        }
    }

    pub fn observe(&mut self, action: &Action, clicks: &ClickVector) -> Result<()> {
        clicks.check_aligned(action)?;
        for (&item, &clicked) in action.items().iter().zip(&clicks.0) {
            let a = item.index();
            if a >= self.len() {
                return Err(Error::invalid(format!("item {item} is not tracked by the TS state")));
            }
            self.remove(a);
            if clicked {
                self.successes[a] += 1;
            } else {
                self.failures[a] += 1;
            }
            self.insert(a);
        }
        Ok(())
    }

    pub fn state(&self) -> TsState {
        TsState {
            alpha: self.successes.iter().map(|&s| f64::from(s) + 1.0).collect(),
            beta: self.failures.iter().map(|&f| f64::from(f) + 1.0).collect(),
        }
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    /// Top-`l` items under one Thompson draw of every item's score.
    ///
    /// Groups with a closed-form quantile (`α = 1` or `β = 1`) go first, then
    /// the rest from the highest `α` down, while a running top-`l` is kept.
    /// An order statistic whose upper-tail probability exceeds that of the
    /// current `l`-th best score cannot enter the top `l`, and neither can the
    /// smaller ones after it, so their quantiles are never computed.
    pub fn select(&self, pool: usize, l: usize, rng: &mut dyn RngCore) -> Result<Action> {
        check_pool(pool, l)?;
        if pool != self.len() {
            return Err(Error::invalid(format!("TS state covers {} items, pool has {pool}", self.len())));
        }
        let mut top = RunningTop::new(l);
        let closed_form = |&(&(alpha, beta), _): &(&(u32, u32), &Vec<usize>)| alpha == 1 || beta == 1;
        let ordered =
            self.groups.iter().filter(closed_form).chain(self.groups.iter().rev().filter(|g| !closed_form(g)));
        for (&(alpha, beta), members) in ordered {
            let n = members.len();
            if alpha <= ORDER_STAT_MAX_ALPHA || beta == 1 {
                let k = l.min(n);
                let mut owners: Vec<usize> = Vec::new();
                let mut cutoff: Option<f64> = None;
                let mut ln_u = 0.0_f64;
                for i in 0..k {
                    // i-th largest of n uniforms: U_(n-i) = U_(n-i+1) * V^(1/(n-i)).
                    let v = 1.0 - rng.random::<f64>();
                    ln_u += v.ln() / (n - i) as f64;
                    let q = -ln_u.exp_m1();
                    if let Some(x) = top.threshold() {
                        if cutoff.is_none() {
                            if q > beta_upper_tail_bound(alpha, beta, x) {
                                break;
                            }
                            cutoff = Some(beta_upper_tail(alpha, beta, x));
                        }
                        if cutoff.is_some_and(|c| q > c) {
                            break;
                        }
                    }
                    let owner = loop {
                        let j = rng.random_range(0..n);
                        if !owners.contains(&j) {
                            break j;
                        }
                    };
                    owners.push(owner);
                    if top.offer(beta_upper_quantile(alpha, beta, q), members[owner]) {
                        cutoff = None;
                    }
                }
            } else {
                let dist = Beta::new(f64::from(alpha), f64::from(beta))
                    .map_err(|e| Error::invalid(format!("bad Beta parameters: {e}")))?;
                for &a in members {
                    top.offer(dist.sample(rng), a);
                }
            }
        }
        Ok(Action::from_unchecked(top.into_items()))
    }
}

/// The best `l` scores seen so far, by descending score then ascending id.
struct RunningTop {
    l: usize,
    best: Vec<(f64, usize)>,
}

impl RunningTop {
    fn new(l: usize) -> Self {
        RunningTop { l, best: Vec::with_capacity(l + 1) }
    }

    /// Score of the `l`-th best once `l` scores are held.
    fn threshold(&self) -> Option<f64> {
        (self.best.len() == self.l).then(|| self.best[self.l - 1].0)
    }

    /// Returns whether the candidate was kept.
    fn offer(&mut self, score: f64, item: usize) -> bool {
        let pos = self.best.partition_point(|&(s, b)| s > score || (s == score && b < item));
        if pos >= self.l {
            return false;
        }
        self.best.insert(pos, (score, item));
        self.best.truncate(self.l);
        true
    }

    fn into_items(self) -> Vec<ItemId> {
        self.best.into_iter().map(|(_, a)| ItemId(a)).collect()
    }
}

/// `P(X > x)` for `X ~ Beta(a, b)`.
fn beta_upper_tail(a: u32, b: u32, x: f64) -> f64 {
    upper_tail_in_y(a, b, 1.0 - x)
}

/// Chernoff upper bound on [`beta_upper_tail`]; 1 where it does not apply.
fn beta_upper_tail_bound(a: u32, b: u32, x: f64) -> f64 {
    let n = f64::from(a + b - 1);
    let p = f64::from(a - 1) / n;
    if x <= p || x >= 1.0 {
        return 1.0;
    }
    let kl = if p > 0.0 { p * (p / x).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - x)).ln() } else { -(-x).ln_1p() };
    (-n * kl).exp() * (1.0 + 1e-9)
}
