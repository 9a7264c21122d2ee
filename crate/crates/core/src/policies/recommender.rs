use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::RngCore;

use super::{
    add_noise, check_pool, random_subset, top_l_of, ts_scores, ucb_select, ucb_update, Action, ClickVector, ItemId,
    PolicyKind, PolicyTag, TsSelector, UcbState,
};
use crate::error::Result;

/// What a recommender may read about the items.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ItemView<'a> {
    pub mu: &'a [f64],
    pub delta: &'a [f64],
}

/// Score in descending total order.
#[derive(Debug, Clone, Copy)]
struct Desc(f64);

impl PartialEq for Desc {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Desc {}

impl PartialOrd for Desc {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Desc {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0)
    }
}

/// Items kept sorted by score, then id; the first `l` are the top-`l` action.
#[derive(Debug, Default)]
struct Ranked {
    order: BTreeSet<(Desc, usize)>,
    score: Vec<f64>,
}

impl Ranked {
    fn push(&mut self, score: f64) {
        let a = self.score.len();
        self.score.push(score);
        self.order.insert((Desc(score), a));
    }

    fn set(&mut self, a: usize, score: f64) {
        self.order.remove(&(Desc(self.score[a]), a));
        self.score[a] = score;
        self.order.insert((Desc(score), a));
    }

    fn top(&self, l: usize) -> Action {
        Action::from_unchecked(self.order.iter().take(l).map(|&(_, a)| ItemId(a)).collect())
    }
}

#[derive(Debug)]
enum Model {
    Random,
    /// `θ = μ` for every item.
    Oracle(Ranked),
    /// `θ = δ` for every item.
    OptimalOracle(Ranked),
    Ucb(UcbState),
    Thompson(TsSelector),
}

/// Runtime state of one policy inside an episode.
#[derive(Debug)]
pub(crate) struct Recommender {
    kind: PolicyKind,
    model: Model,
}

impl Recommender {
    pub fn new(kind: PolicyKind) -> Self {
        let model = match kind.tag {
            PolicyTag::Random => Model::Random,
            PolicyTag::Oracle => Model::Oracle(Ranked::default()),
            PolicyTag::OptimalOracle => Model::OptimalOracle(Ranked::default()),
            PolicyTag::Ucb => Model::Ucb(UcbState::default()),
            PolicyTag::ThompsonSampling => Model::Thompson(TsSelector::default()),
        };
        Recommender { kind, model }
    }

    /// Registers items up to `view.mu.len()`.
    pub fn grow(&mut self, view: ItemView<'_>) {
        let pool = view.mu.len();
        match &mut self.model {
            Model::Random => {}
            Model::Oracle(ranked) => {
                for a in ranked.score.len()..pool {
                    ranked.push(view.mu[a]);
                }
            }
            Model::OptimalOracle(ranked) => {
                for a in ranked.score.len()..pool {
                    ranked.push(view.delta[a]);
                }
            }
            Model::Ucb(state) => state.grow(pool),
            Model::Thompson(sel) => sel.grow(pool),
        }
    }

    pub fn select(
        &mut self,
        view: ItemView<'_>,
        l: usize,
        noise_rng: &mut dyn RngCore,
        policy_rng: &mut dyn RngCore,
    ) -> Result<Action> {
        let pool = view.mu.len();
        check_pool(pool, l)?;
        let eps = self.kind.noise_epsilon;
        let noisy = |mut scores: Vec<f64>, rng: &mut dyn RngCore| {
            add_noise(&mut scores, eps, rng);
            Action::from_unchecked(top_l_of(scores.into_iter().zip(0..).collect(), l))
        };
        Ok(match &self.model {
            Model::Random => random_subset(pool, l, policy_rng),
            Model::Oracle(ranked) | Model::OptimalOracle(ranked) if eps > 0.0 => noisy(ranked.score.clone(), noise_rng),
            Model::Oracle(ranked) | Model::OptimalOracle(ranked) => ranked.top(l),
            Model::Ucb(state) if eps > 0.0 => ucb_select(state, pool, l, Some((eps, noise_rng)))?,
            Model::Ucb(state) => ucb_select(state, pool, l, None)?,
            Model::Thompson(sel) if eps > 0.0 => noisy(ts_scores(&sel.state(), pool, policy_rng)?, noise_rng),
            Model::Thompson(sel) => sel.select(pool, l, policy_rng)?,
        })
    }

    /// Feedback for the last action; `view` holds the interest after the update.
    pub fn observe(&mut self, action: &Action, clicks: &ClickVector, view: ItemView<'_>) -> Result<()> {
        match &mut self.model {
            Model::Random | Model::OptimalOracle(_) => Ok(()),
            Model::Oracle(ranked) => {
                for item in action.items() {
                    ranked.set(item.index(), view.mu[item.index()]);
                }
                Ok(())
            }
            Model::Ucb(state) => ucb_update(state, action, clicks),
            Model::Thompson(sel) => sel.observe(action, clicks),
        }
    }
}
