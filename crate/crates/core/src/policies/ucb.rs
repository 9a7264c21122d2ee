//! UCB with forced exploration of never-served items.
//!
//! Index: `ĉ(a) + sqrt(2 ln f(t) / T_a(t))` with `f(t) = 1 + t ln²t` and
//! natural logarithms. Items with `T_a(t) = 0` are always served first, lowest
//! id first, so an index is never evaluated for them.

use std::collections::BTreeSet;

use rand::RngCore;
use serde::Serialize;

use super::{add_noise, check_pool, top_l_of, Action, ClickVector, ItemId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct UcbState {
    click_sum: Vec<u64>,
    serve_count: Vec<u64>,
    step: u64,
    #[serde(skip)]
    unserved: BTreeSet<usize>,
}

impl UcbState {
    pub fn new(pool: usize) -> Self {
        let mut state = UcbState::default();
        state.grow(pool);
        state
    }

    /// Extends the state to cover items `0..pool`.
    pub fn grow(&mut self, pool: usize) {
        let old = self.serve_count.len();
        if pool <= old {
            return;
        }
        self.click_sum.resize(pool, 0);
        self.serve_count.resize(pool, 0);
        self.unserved.extend(old..pool);
    }

    pub fn len(&self) -> usize {
        self.serve_count.len()
    }

    pub fn is_empty(&self) -> bool {
        self.serve_count.is_empty()
    }

    pub fn click_sum(&self, item: ItemId) -> u64 {
        self.click_sum[item.index()]
    }

    pub fn serve_count(&self, item: ItemId) -> u64 {
        self.serve_count[item.index()]
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn unserved_count(&self) -> usize {
        self.unserved.len()
    }

    /// Current index of a served item.
    pub fn index_of(&self, item: ItemId) -> Result<f64> {
        ucb_index(self.click_sum(item), self.serve_count(item), self.step.max(1))
    }
}

pub fn ucb_index(click_sum: u64, serve_count: u64, t: u64) -> Result<f64> {
    if serve_count == 0 {
        return Err(Error::invalid("UCB index of a never-served item; use forced exploration"));
    }
    if t == 0 {
        return Err(Error::invalid("UCB index needs t >= 1"));
    }
    let n = serve_count as f64;
    let t = t as f64;
    let log_t = t.ln();
    let f = 1.0 + t * log_t * log_t;
    Ok(click_sum as f64 / n + (2.0 * f.ln() / n).sqrt())
}

/// Never-served items first (lowest ids), then the highest indices.
///
/// When `noise` is given, uniform noise of that half-width perturbs the
/// indices of served items before ranking.
pub fn ucb_select(state: &UcbState, pool: usize, l: usize, noise: Option<(f64, &mut dyn RngCore)>) -> Result<Action> {
    check_pool(pool, l)?;
    if pool > state.len() {
        return Err(Error::invalid(format!("UCB state covers {} items, pool has {pool}", state.len())));
    }
    let mut items: Vec<ItemId> = state.unserved.iter().take_while(|&&a| a < pool).take(l).map(|&a| ItemId(a)).collect();
    let remaining = l - items.len();
    if remaining > 0 {
        let t = state.step.max(1) as f64;
        let log_t = t.ln();
        let bonus = 2.0 * (1.0 + t * log_t * log_t).ln();
        let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(pool);
        for a in 0..pool {
            let n = state.serve_count[a];
            if n == 0 {
                continue;
            }
            let n = n as f64;
            candidates.push((state.click_sum[a] as f64 / n + (bonus / n).sqrt(), a));
        }
        if let Some((eps, rng)) = noise {
            let mut scores: Vec<f64> = candidates.iter().map(|c| c.0).collect();
            add_noise(&mut scores, eps, rng);
            for (c, s) in candidates.iter_mut().zip(scores) {
                c.0 = s;
            }
        }
        items.extend(top_l_of(candidates, remaining));
    }
    Ok(Action::from_unchecked(items))
}

/// Records one step of feedback.
pub fn ucb_update(state: &mut UcbState, action: &Action, clicks: &ClickVector) -> Result<()> {
    clicks.check_aligned(action)?;
    if let Some(bad) = action.items().iter().find(|a| a.index() >= state.len()) {
        return Err(Error::invalid(format!("item {bad} is not tracked by the UCB state")));
    }
    for (&item, &clicked) in action.items().iter().zip(&clicks.0) {
        let a = item.index();
        if state.serve_count[a] == 0 {
            state.unserved.remove(&a);
        }
        state.serve_count[a] += 1;
        state.click_sum[a] += u64::from(clicked);
    }
    state.step += 1;
    Ok(())
}
