//! Simulation of degenerate feedback loops between a recommender and a user
//! whose per-item interest evolves as a stochastic dynamical system.
//!
//! The crate is organised bottom-up:
//!
//! * [`dynamics`]: interest state and its update laws (Bernoulli-feedback drift,
//!   linear deterministic model with closed form and regime taxonomy, threshold
//!   dynamics, monotone rescaling).
//! * [`policies`]: the five recommenders (Random, Oracle, Optimal Oracle, UCB,
//!   Thompson sampling) plus uniform score noise and top-`l` selection.
//! * [`engine`]: the interaction loop with a possibly growing candidate pool,
//!   and seeded batch execution.
//! * [`metrics`]: L² / sup degeneracy, serving rates, asymptotic speed
//!   predictors and tail slopes.
//! * [`theorycheck`]: statistical harnesses for the degeneracy results.

pub mod dynamics;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod policies;
pub mod rng;
pub mod theorycheck;

pub use dynamics::{DriftSpec, InterestVector, LinearRegime, RegimeKind};
pub use engine::{
    run_batch, run_batch_map, run_episode, run_episode_with_items, AggregatePoint, BatchResult, EpisodeError,
    RunSeries, SimConfig, Snapshot, Trajectory,
};
pub use error::{Error, Result};
pub use policies::{Action, ClickVector, ItemId, PolicyKind, PolicyTag};
