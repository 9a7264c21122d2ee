//! The recommender/user interaction loop.
//!
//! Each step: grow the pool, score and select `l` items, draw Bernoulli
//! clicks with probability `sigmoid(μ)`, move the served items' interest by
//! `±δ`, and feed the clicks back to the policy. Episodes are deterministic in
//! `(config, run_seed)`; batches derive run seeds from the master seed and run
//! episodes in parallel with an order-preserving fold.

use std::fmt;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{step_bernoulli, InterestVector};
use crate::error::{Error, Result};
use crate::metrics;
use crate::policies::{Action, ClickVector, ItemId, ItemView, PolicyKind, Recommender};
use crate::rng::{self, Stream};

/// Master seed used when a config does not set one.
pub const DEFAULT_MASTER_SEED: u64 = 20_190_127;

/// Episodes abort once any interest exceeds this magnitude.
pub const OVERFLOW_LIMIT: f64 = 1e12;

/// Snapshots keep the full interest vector up to this pool size.
pub const FULL_SNAPSHOT_LIMIT: usize = 10_000;

/// Items kept at each end when a snapshot is truncated.
pub const EXTREMES_KEPT: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub policy: PolicyKind,
    /// Initial pool size.
    pub m0: usize,
    /// Items served per step.
    pub l: usize,
    /// Number of steps `T`.
    pub horizon: u64,
    /// Pool growth exponent; `0` keeps the pool fixed at `m0`.
    #[serde(default)]
    pub eta: f64,
    pub delta_range: (f64, f64),
    pub mu0_range: (f64, f64),
    pub report_interval: u64,
    pub n_runs: usize,
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
}

fn default_master_seed() -> u64 {
    DEFAULT_MASTER_SEED
}

impl SimConfig {
    /// Fixed pool of 100, `l = 5`, `δ ~ U[-0.01, 0.01]`, `μ0 ~ U[-1, 1]`.
    pub fn standard(policy: PolicyKind) -> Self {
        SimConfig {
            policy,
            m0: 100,
            l: 5,
            horizon: 5000,
            eta: 0.0,
            delta_range: (-0.01, 0.01),
            mu0_range: (-1.0, 1.0),
            report_interval: 500,
            n_runs: 30,
            master_seed: DEFAULT_MASTER_SEED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m0 == 0 {
            return Err(Error::config("m0", "must be positive"));
        }
        if self.l == 0 {
            return Err(Error::config("l", "must be positive"));
        }
        if self.l > self.m0 {
            return Err(Error::config("l", format!("l = {} exceeds m0 = {}", self.l, self.m0)));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::config("eta", "must be a finite non-negative number"));
        }
        for (field, (lo, hi)) in [("delta_range", self.delta_range), ("mu0_range", self.mu0_range)] {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::config(field, "bounds must be finite"));
            }
            if lo > hi {
                return Err(Error::config(field, format!("lower bound {lo} exceeds upper bound {hi}")));
            }
        }
        if self.report_interval == 0 {
            return Err(Error::config("report_interval", "must be positive"));
        }
        if self.n_runs == 0 {
            return Err(Error::config("n_runs", "must be positive"));
        }
        let eps = self.policy.noise_epsilon;
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::config("policy.noise_epsilon", "must be a finite non-negative number"));
        }
        Ok(())
    }

    /// Number of report snapshots, `⌈T / report_interval⌉`.
    pub fn snapshot_count(&self) -> usize {
        self.horizon.div_ceil(self.report_interval) as usize
    }
}

/// Interest values kept in a snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterestRecord {
    Full(InterestVector),
    /// Highest and lowest [`EXTREMES_KEPT`] items, each sorted by descending interest.
    Extremes {
        top: Vec<(ItemId, f64)>,
        bottom: Vec<(ItemId, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: u64,
    pub pool_size: usize,
    /// `‖μ_t − μ_0‖₂` with arrival-time baselines.
    pub l2: f64,
    /// `sup_a |μ_t(a) − μ_0(a)|`.
    pub sup: f64,
    /// `l2 / t`; absent at `t = 0`.
    pub l2_speed: Option<f64>,
    pub sup_speed: Option<f64>,
    /// Steps covered by `serve_counts`.
    pub interval_length: u64,
    /// True when the interval is shorter than `report_interval`.
    pub partial: bool,
    /// Items served in the interval and how often, by ascending id.
    pub serve_counts: Vec<(ItemId, u32)>,
    pub interest: InterestRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: Snapshot,
    pub snapshots: Vec<Snapshot>,
    /// Total serves per item over the episode.
    pub final_serve_counts: Vec<u64>,
    pub deltas: Vec<f64>,
    /// Interest of each item when it joined the pool.
    pub baseline: InterestVector,
    pub final_interest: InterestVector,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().unwrap_or(&self.initial)
    }
}

/// A failed episode, with the run index when it came from a batch and the
/// trajectory recorded up to the failure.
#[derive(Debug)]
pub struct EpisodeError {
    pub run_index: Option<usize>,
    pub error: Error,
    pub partial: Option<Box<Trajectory>>,
}

impl fmt::Display for EpisodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(run) = self.run_index {
            write!(f, "run {run}: ")?;
        }
        self.error.fmt(f)
    }
}

impl std::error::Error for EpisodeError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<Error> for EpisodeError {
    fn from(error: Error) -> Self {
        EpisodeError { run_index: None, error, partial: None }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `⌊m0 + l·t^η⌋`, with `η = 0` meaning a fixed pool of `m0`.
pub fn pool_size(m0: usize, l: usize, eta: f64, t: u64) -> usize {
    if eta == 0.0 {
        return m0;
    }
    let grown = m0 as f64 + l as f64 * (t as f64).powf(eta);
    grown.floor() as usize
}

/// Independent `Bernoulli(sigmoid(μ(a)))` clicks for the served items.
pub fn draw_clicks(mu: &InterestVector, action: &Action, rng: &mut dyn RngCore) -> ClickVector {
    ClickVector(action.items().iter().map(|&a| rng.random::<f64>() < sigmoid(mu[a])).collect())
}

fn uniform_in(range: (f64, f64), rng: &mut dyn RngCore) -> f64 {
    range.0 + (range.1 - range.0) * rng.random::<f64>()
}

struct Episode<'a> {
    config: &'a SimConfig,
    mu: Vec<f64>,
    baseline: Vec<f64>,
    delta: Vec<f64>,
    serve_total: Vec<u64>,
    interval_counts: Vec<u32>,
    touched: Vec<usize>,
    interval_start: u64,
    items_rng: rng::SimRng,
    preset: (&'a [f64], &'a [f64]),
}

impl<'a> Episode<'a> {
    fn view(&self) -> ItemView<'_> {
        ItemView { mu: &self.mu, delta: &self.delta }
    }

    fn grow_to(&mut self, pool: usize) {
        while self.mu.len() < pool {
            let a = self.mu.len();
            let (mu0, delta) = match (self.preset.0.get(a), self.preset.1.get(a)) {
                (Some(&mu0), Some(&delta)) => (mu0, delta),
                _ => (
                    uniform_in(self.config.mu0_range, &mut self.items_rng),
                    uniform_in(self.config.delta_range, &mut self.items_rng),
                ),
            };
            self.mu.push(mu0);
            self.baseline.push(mu0);
            self.delta.push(delta);
            self.serve_total.push(0);
            self.interval_counts.push(0);
        }
    }

    fn snapshot(&mut self, t: u64) -> Snapshot {
        let l2 = metrics::l2_distance(&self.mu, &self.baseline);
        let sup = metrics::sup_distance(&self.mu, &self.baseline);
        let speed = |x: f64| (t > 0).then(|| x / t as f64);
        self.touched.sort_unstable();
        let serve_counts = self
            .touched
            .drain(..)
            .map(|a| {
                let n = std::mem::take(&mut self.interval_counts[a]);
                (ItemId(a), n)
            })
            .collect();
        let interval_length = t - self.interval_start;
        self.interval_start = t;
        Snapshot {
            t,
            pool_size: self.mu.len(),
            l2,
            sup,
            l2_speed: speed(l2),
            sup_speed: speed(sup),
            interval_length,
            partial: t > 0 && interval_length < self.config.report_interval,
            serve_counts,
            interest: self.interest_record(),
        }
    }

    fn interest_record(&self) -> InterestRecord {
        if self.mu.len() <= FULL_SNAPSHOT_LIMIT {
            return InterestRecord::Full(InterestVector::new(self.mu.clone()));
        }
        let mut order: Vec<usize> = (0..self.mu.len()).collect();
        order.sort_unstable_by(|&a, &b| self.mu[b].total_cmp(&self.mu[a]).then(a.cmp(&b)));
        let pick = |ids: &[usize]| ids.iter().map(|&a| (ItemId(a), self.mu[a])).collect();
        InterestRecord::Extremes {
            top: pick(&order[..EXTREMES_KEPT]),
            bottom: pick(&order[order.len() - EXTREMES_KEPT..]),
        }
    }

    fn trajectory(self, initial: Snapshot, snapshots: Vec<Snapshot>) -> Trajectory {
        Trajectory {
            initial,
            snapshots,
            final_serve_counts: self.serve_total,
            deltas: self.delta,
            baseline: InterestVector::new(self.baseline),
            final_interest: InterestVector::new(self.mu),
        }
    }
}

/// Runs one episode of `config.horizon` steps.
pub fn run_episode(config: &SimConfig, run_seed: u64) -> Result<Trajectory, EpisodeError> {
    run_episode_with_items(config, run_seed, &[], &[])
}

/// Like [`run_episode`], but items `0..mu0.len()` start from the given
/// interest and drift instead of drawing them.
pub fn run_episode_with_items(
    config: &SimConfig,
    run_seed: u64,
    mu0: &[f64],
    delta: &[f64],
) -> Result<Trajectory, EpisodeError> {
    config.validate()?;
    if mu0.len() != delta.len() {
        return Err(Error::invalid(format!("{} initial interests but {} drifts", mu0.len(), delta.len())).into());
    }
    if mu0.iter().chain(delta).any(|x| !x.is_finite()) {
        return Err(Error::invalid("initial items must be finite").into());
    }
    let mut episode = Episode {
        config,
        mu: Vec::new(),
        baseline: Vec::new(),
        delta: Vec::new(),
        serve_total: Vec::new(),
        interval_counts: Vec::new(),
        touched: Vec::new(),
        interval_start: 0,
        items_rng: rng::stream(run_seed, Stream::Items),
        preset: (mu0, delta),
    };
    let mut clicks_rng = rng::stream(run_seed, Stream::Clicks);
    let mut noise_rng = rng::stream(run_seed, Stream::Noise);
    let mut policy_rng = rng::stream(run_seed, Stream::Policy);
    let mut recommender = Recommender::new(config.policy);

    episode.grow_to(pool_size(config.m0, config.l, config.eta, 0));
    recommender.grow(episode.view());
    let initial = episode.snapshot(0);
    let mut snapshots = Vec::with_capacity(config.snapshot_count());

    for t in 0..config.horizon {
        let pool = pool_size(config.m0, config.l, config.eta, t);
        if pool > episode.mu.len() {
            episode.grow_to(pool);
            recommender.grow(episode.view());
        }
        let action = recommender.select(episode.view(), config.l, &mut noise_rng, &mut policy_rng)?;
        let clicks = ClickVector(
            action.items().iter().map(|&a| clicks_rng.random::<f64>() < sigmoid(episode.mu[a.index()])).collect(),
        );
        let mut overflow = false;
        for (&item, &clicked) in action.items().iter().zip(&clicks.0) {
            let a = item.index();
            let next = step_bernoulli(episode.mu[a], episode.delta[a], clicked);
            overflow |= next.is_nan() || next.abs() > OVERFLOW_LIMIT;
            episode.mu[a] = next;
            episode.serve_total[a] += 1;
            if episode.interval_counts[a] == 0 {
                episode.touched.push(a);
            }
            episode.interval_counts[a] += 1;
        }
        if overflow {
            let last = episode.snapshot(t + 1);
            snapshots.push(last);
            return Err(EpisodeError {
                run_index: None,
                error: Error::NumericOverflow { step: t + 1 },
                partial: Some(Box::new(episode.trajectory(initial, snapshots))),
            });
        }
        recommender.observe(&action, &clicks, episode.view())?;
        let done = t + 1;
        if done % config.report_interval == 0 || done == config.horizon {
            let snap = episode.snapshot(done);
            snapshots.push(snap);
        }
    }
    Ok(episode.trajectory(initial, snapshots))
}

/// Runs all episodes of a batch and maps each trajectory through `f`.
///
/// Results come back in run-index order regardless of scheduling. On failure
/// the error of the lowest failing run index is returned.
pub fn run_batch_map<R, F>(config: &SimConfig, f: F) -> Result<Vec<R>, EpisodeError>
where
    R: Send,
    F: Fn(usize, Trajectory) -> R + Sync,
{
    config.validate()?;
    let results: Vec<Result<R, EpisodeError>> = (0..config.n_runs)
        .into_par_iter()
        .map(|run| {
            run_episode(config, rng::run_seed(config.master_seed, run as u64)).map(|traj| f(run, traj)).map_err(
                |mut e| {
                    e.run_index = Some(run);
                    e
                },
            )
        })
        .collect();
    results.into_iter().collect()
}

/// Scalar metrics of one report snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub t: u64,
    pub pool_size: usize,
    pub l2: f64,
    pub sup: f64,
    pub l2_speed: Option<f64>,
    pub sup_speed: Option<f64>,
    pub partial: bool,
}

impl From<&Snapshot> for MetricPoint {
    fn from(s: &Snapshot) -> Self {
        MetricPoint {
            t: s.t,
            pool_size: s.pool_size,
            l2: s.l2,
            sup: s.sup,
            l2_speed: s.l2_speed,
            sup_speed: s.sup_speed,
            partial: s.partial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSeries {
    pub run_index: usize,
    pub seed: u64,
    pub points: Vec<MetricPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanStd { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std =
            if n > 1 { (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
        MeanStd { mean, std }
    }

    /// Standard error of the mean over `n` runs.
    pub fn sem(&self, n: usize) -> f64 {
        self.std / (n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub t: u64,
    pub pool_size: MeanStd,
    pub l2: MeanStd,
    pub sup: MeanStd,
    pub l2_speed: Option<MeanStd>,
    pub sup_speed: Option<MeanStd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub runs: Vec<RunSeries>,
    pub aggregate: Vec<AggregatePoint>,
}

impl BatchResult {
    pub fn from_runs(runs: Vec<RunSeries>) -> Self {
        let aggregate = aggregate(&runs);
        BatchResult { runs, aggregate }
    }

    pub fn final_point(&self) -> Option<&AggregatePoint> {
        self.aggregate.last()
    }
}

/// Per-snapshot mean and sample standard deviation, folded in run order.
pub fn aggregate(runs: &[RunSeries]) -> Vec<AggregatePoint> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    (0..first.points.len())
        .map(|i| {
            let column =
                |f: &dyn Fn(&MetricPoint) -> f64| -> Vec<f64> { runs.iter().map(|r| f(&r.points[i])).collect() };
            let speed = |f: &dyn Fn(&MetricPoint) -> Option<f64>| -> Option<MeanStd> {
                let values: Option<Vec<f64>> = runs.iter().map(|r| f(&r.points[i])).collect();
                values.map(|v| MeanStd::of(&v))
            };
            AggregatePoint {
                t: first.points[i].t,
                pool_size: MeanStd::of(&column(&|p| p.pool_size as f64)),
                l2: MeanStd::of(&column(&|p| p.l2)),
                sup: MeanStd::of(&column(&|p| p.sup)),
                l2_speed: speed(&|p| p.l2_speed),
                sup_speed: speed(&|p| p.sup_speed),
            }
        })
        .collect()
}

/// Runs a batch and reduces it to per-run scalar series plus aggregates.
pub fn run_batch(config: &SimConfig) -> Result<BatchResult, EpisodeError> {
    let runs = run_batch_map(config, |run, traj| RunSeries {
        run_index: run,
        seed: rng::run_seed(config.master_seed, run as u64),
        points: traj.snapshots.iter().map(MetricPoint::from).collect(),
    })?;
    Ok(BatchResult::from_runs(runs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::PolicyTag;

    fn small(policy: PolicyTag) -> SimConfig {
        SimConfig {
            policy: PolicyKind::new(policy),
            m0: 10,
            l: 2,
            horizon: 100,
            eta: 0.0,
            delta_range: (-0.01, 0.01),
            mu0_range: (-1.0, 1.0),
            report_interval: 30,
            n_runs: 3,
            master_seed: 9,
        }
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid(0.0), 0.5);
        for x in [0.5, 1.0, 3.0] {
            assert!((sigmoid(-x) - (1.0 - sigmoid(x))).abs() < 1e-15);
        }
        assert!((sigmoid(2.0) - 0.880_797).abs() < 1e-6);
        assert_eq!(sigmoid(1000.0), 1.0);
    }

    #[test]
    fn pool_size_examples() {
        for t in [0, 1, 17, 10_000] {
            assert_eq!(pool_size(100, 5, 0.0, t), 100);
        }
        assert_eq!(pool_size(100, 5, 0.5, 4), 110);
        assert_eq!(pool_size(100, 5, 1.0, 10), 150);
        assert_eq!(pool_size(100, 5, 0.5, 0), 100);
        let mut prev = 0;
        for t in 0..5000 {
            let m = pool_size(100, 5, 0.5, t);
            assert!(m >= prev);
            prev = m;
        }
    }

    #[test]
    fn saturated_interest_always_clicks() {
        let mu = InterestVector::new(vec![1000.0, -1000.0]);
        let action = Action::new(vec![ItemId(0), ItemId(1)], 2).unwrap();
        let mut rng = rng::seeded(4);
        for _ in 0..100 {
            assert_eq!(draw_clicks(&mu, &action, &mut rng).0, vec![true, false]);
        }
    }

    #[test]
    fn neutral_interest_clicks_half_the_time() {
        let mu = InterestVector::new(vec![0.0]);
        let action = Action::new(vec![ItemId(0)], 1).unwrap();
        let mut rng = rng::seeded(5);
        let n = 100_000;
        let clicks = (0..n).filter(|_| draw_clicks(&mu, &action, &mut rng).0[0]).count();
        let rate = clicks as f64 / n as f64;
        assert!((rate - 0.5).abs() < 0.005, "{rate}");
        let a = draw_clicks(&mu, &action, &mut rng::seeded(6));
        let b = draw_clicks(&mu, &action, &mut rng::seeded(6));
        assert_eq!(a, b);
    }

    #[test]
    fn zero_horizon_keeps_initial_interest() {
        let mut config = small(PolicyTag::Oracle);
        config.horizon = 0;
        let traj = run_episode(&config, 1).unwrap();
        assert!(traj.snapshots.is_empty());
        assert_eq!(traj.initial.t, 0);
        assert_eq!(traj.initial.l2, 0.0);
        assert_eq!(traj.final_interest, traj.baseline);
    }

    #[test]
    fn snapshot_schedule_and_partial_flag() {
        let config = small(PolicyTag::Ucb);
        let traj = run_episode(&config, 2).unwrap();
        let ts: Vec<u64> = traj.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![30, 60, 90, 100]);
        assert_eq!(traj.snapshots.len(), config.snapshot_count());
        assert!(traj.snapshots[3].partial);
        assert!(!traj.snapshots[2].partial);
        for s in &traj.snapshots {
            let served: u64 = s.serve_counts.iter().map(|&(_, n)| u64::from(n)).sum();
            assert_eq!(served, config.l as u64 * s.interval_length);
            assert!(s.sup <= s.l2 + 1e-12);
            assert!(s.l2 <= s.sup * (s.pool_size as f64).sqrt() + 1e-12);
        }
    }

    #[test]
    fn per_step_drift_is_exactly_delta_for_served_items() {
        let config = small(PolicyTag::ThompsonSampling);
        let traj = run_episode(&config, 3).unwrap();
        for a in 0..config.m0 {
            let moved = traj.final_interest.as_slice()[a] - traj.baseline.as_slice()[a];
            let steps = moved / traj.deltas[a];
            let n = traj.final_serve_counts[a] as f64;
            // net displacement is δ times (clicks - misses), same parity as the serve count
            assert!((steps.round() - steps).abs() < 1e-6);
            assert!(steps.abs() <= n + 1e-6);
            assert_eq!((steps.round() as i64 - n as i64).rem_euclid(2), 0);
        }
    }

    #[test]
    fn episodes_replay_bit_for_bit() {
        for policy in PolicyTag::ALL {
            let config = small(policy);
            assert_eq!(run_episode(&config, 77).unwrap(), run_episode(&config, 77).unwrap());
        }
    }

    #[test]
    fn item_streams_are_shared_across_policies() {
        let a = run_episode(&small(PolicyTag::Random), 5).unwrap();
        let b = run_episode(&small(PolicyTag::OptimalOracle), 5).unwrap();
        assert_eq!(a.deltas, b.deltas);
        assert_eq!(a.baseline, b.baseline);
    }

    #[test]
    fn growing_pool_keeps_ids_and_baselines() {
        let mut config = small(PolicyTag::Ucb);
        config.eta = 1.0;
        config.horizon = 40;
        let traj = run_episode(&config, 8).unwrap();
        assert_eq!(traj.final_interest.len(), pool_size(10, 2, 1.0, 39));
        let mut prev = traj.initial.pool_size;
        for s in &traj.snapshots {
            assert!(s.pool_size >= prev);
            prev = s.pool_size;
        }
        // UCB explores every new item: all items but the last arrivals are served.
        let unserved = traj.final_serve_counts.iter().filter(|&&n| n == 0).count();
        assert!(unserved <= 10 + 2);
    }

    #[test]
    fn overflow_aborts_with_partial_trajectory() {
        let mut config = small(PolicyTag::OptimalOracle);
        config.delta_range = (1e11, 1e11);
        config.mu0_range = (5.0, 5.0);
        config.horizon = 1000;
        let err = run_episode(&config, 1).unwrap_err();
        match err.error {
            Error::NumericOverflow { step } => assert!(step <= 20, "{step}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.partial.is_some());
    }

    #[test]
    fn single_run_batch_has_zero_spread() {
        let mut config = small(PolicyTag::Oracle);
        config.n_runs = 1;
        let batch = run_batch(&config).unwrap();
        for p in &batch.aggregate {
            assert_eq!(p.l2.std, 0.0);
        }
        let traj = run_episode(&config, rng::run_seed(config.master_seed, 0)).unwrap();
        assert_eq!(batch.aggregate.last().unwrap().l2.mean, traj.last().l2);
    }

    #[test]
    fn aggregate_mean_ignores_run_order() {
        let batch = run_batch(&small(PolicyTag::Random)).unwrap();
        let mut reversed = batch.runs.clone();
        reversed.reverse();
        let again = aggregate(&reversed);
        for (a, b) in batch.aggregate.iter().zip(&again) {
            assert!((a.l2.mean - b.l2.mean).abs() < 1e-12);
        }
    }

    #[test]
    fn config_validation_names_fields() {
        let mut config = small(PolicyTag::Random);
        config.l = 11;
        assert!(matches!(config.validate(), Err(Error::InvalidConfig { field: "l", .. })));
        let mut config = small(PolicyTag::Random);
        config.mu0_range = (1.0, -1.0);
        assert!(matches!(config.validate(), Err(Error::InvalidConfig { field: "mu0_range", .. })));
        let mut config = small(PolicyTag::Random);
        config.report_interval = 0;
        assert!(config.validate().is_err());
    }
}
