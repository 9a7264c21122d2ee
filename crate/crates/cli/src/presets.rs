//! Figure presets.
//!
//! Every series of a preset shares the master seed, so runs with the same
//! index see the same initial interests and drifts across series.

use clap::ValueEnum;
use degenloop_core::engine::DEFAULT_MASTER_SEED;
use degenloop_core::{PolicyKind, PolicyTag, SimConfig};

use crate::experiment::SeriesSpec;
use crate::format::fmt_num;

pub const DEFAULT_EPSILON_GRID: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0];
pub const POOL_SIZES: [usize; 4] = [10, 100, 1_000, 10_000];
pub const GROWTH_RATES: [f64; 3] = [0.0, 0.5, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Sorted interest and serving rates, five policies.
    Fig2,
    /// Degeneracy speed of five policies, 30 runs.
    Fig3,
    /// Pool sizes 10 to 10⁴ up to T = 5000.
    Fig4a,
    /// Pool sizes 10 to 10⁴ up to T = 20000.
    Fig4b,
    /// Oracle under uniform score noise.
    Fig5,
    /// Growing pools, η ∈ {0, 0.5, 1}.
    Fig6,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetOptions {
    pub master_seed: u64,
    pub epsilon_grid: Vec<f64>,
}

impl Default for PresetOptions {
    fn default() -> Self {
        PresetOptions { master_seed: DEFAULT_MASTER_SEED, epsilon_grid: DEFAULT_EPSILON_GRID.to_vec() }
    }
}

impl Preset {
    pub const ALL: [Preset; 6] = [Preset::Fig2, Preset::Fig3, Preset::Fig4a, Preset::Fig4b, Preset::Fig5, Preset::Fig6];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4a => "fig4a",
            Preset::Fig4b => "fig4b",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
        }
    }

    /// Whether the preset writes per-item snapshots.
    pub fn per_item(self) -> bool {
        self == Preset::Fig2
    }

    pub fn series(self, opts: &PresetOptions) -> Vec<SeriesSpec> {
        let base = |tag: PolicyTag| {
            let mut c = SimConfig::standard(PolicyKind::new(tag));
            c.master_seed = opts.master_seed;
            c
        };
        match self {
            Preset::Fig2 | Preset::Fig3 => {
                PolicyTag::ALL.iter().map(|&tag| SeriesSpec::new(tag.name(), base(tag))).collect()
            }
            Preset::Fig4a | Preset::Fig4b => {
                let horizon = if self == Preset::Fig4a { 5_000 } else { 20_000 };
                let mut out = Vec::new();
                for tag in PolicyTag::ALL {
                    for m in POOL_SIZES {
                        let mut c = base(tag);
                        c.m0 = m;
                        c.horizon = horizon;
                        c.n_runs = 10;
                        out.push(SeriesSpec::new(pool_series_name(tag, m), c));
                    }
                }
                out
            }
            Preset::Fig5 => opts
                .epsilon_grid
                .iter()
                .map(|&eps| {
                    let mut c = base(PolicyTag::Oracle);
                    c.policy.noise_epsilon = eps;
                    c.horizon = 20_000;
                    SeriesSpec::new(noise_series_name(PolicyTag::Oracle, eps), c)
                })
                .collect(),
            Preset::Fig6 => {
                let mut out = Vec::new();
                for tag in PolicyTag::ALL {
                    for eta in GROWTH_RATES {
                        let mut c = base(tag);
                        c.eta = eta;
                        c.horizon = 10_000;
                        c.n_runs = 10;
                        out.push(SeriesSpec::new(growth_series_name(tag, eta), c));
                    }
                }
                out
            }
        }
    }
}

pub fn pool_series_name(tag: PolicyTag, m: usize) -> String {
    format!("{tag}_m{m}")
}

pub fn noise_series_name(tag: PolicyTag, eps: f64) -> String {
    format!("{tag}_eps{}", fmt_num(eps))
}

pub fn growth_series_name(tag: PolicyTag, eta: f64) -> String {
    format!("{tag}_eta{}", fmt_num(eta))
}
