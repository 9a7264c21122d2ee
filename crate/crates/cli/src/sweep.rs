//! One-parameter sweeps over a base config.

use clap::ValueEnum;
use degenloop_core::SimConfig;

use crate::error::CliError;
use crate::experiment::SeriesSpec;
use crate::format::fmt_num;
use crate::presets::{growth_series_name, noise_series_name, pool_series_name};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    /// Initial pool size `m0`.
    #[value(name = "pool_size")]
    PoolSize,
    /// Noise half-width `ε`.
    Noise,
    /// Pool growth exponent `η`.
    Growth,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::PoolSize => "pool_size",
            SweepParam::Noise => "noise",
            SweepParam::Growth => "growth",
        }
    }
}

pub const SWEEP_HEADER: [&str; 11] = [
    "param",
    "value",
    "series",
    "t",
    "n_runs",
    "l2_speed_mean",
    "l2_speed_std",
    "sup_speed_mean",
    "sup_speed_std",
    "l2_mean",
    "sup_mean",
];

/// `(sub-directory, series)` per value. Series names match the figure
/// presets, so a sweep over a preset's base config reproduces its rows.
pub fn sweep_specs(param: SweepParam, values: &[f64], base: &SimConfig) -> Result<Vec<(String, SeriesSpec)>, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let tag = base.policy.tag;
    values
        .iter()
        .map(|&v| {
            let mut config = base.clone();
            let name = match param {
                SweepParam::PoolSize => {
                    if v.fract() != 0.0 || v < 1.0 {
                        return Err(CliError::Config(format!("pool_size value {v} is not a positive integer")));
                    }
                    let m = v as usize;
                    if m < base.l {
                        return Err(CliError::Config(format!("pool_size value {m} is smaller than l = {}", base.l)));
                    }
                    config.m0 = m;
                    pool_series_name(tag, m)
                }
                SweepParam::Noise => {
                    config.policy.noise_epsilon = v;
                    noise_series_name(tag, v)
                }
                SweepParam::Growth => {
                    config.eta = v;
                    growth_series_name(tag, v)
                }
            };
            config.validate()?;
            Ok((format!("{}_{}", param.name(), fmt_num(v)), SeriesSpec::new(name, config)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use degenloop_core::{PolicyKind, PolicyTag};

    #[test]
    fn pool_sizes_below_l_are_rejected() {
        let base = SimConfig::standard(PolicyKind::new(PolicyTag::Ucb));
        let err = sweep_specs(SweepParam::PoolSize, &[100.0, 3.0], &base).unwrap_err();
        assert!(matches!(err, CliError::Config(ref m) if m.contains("smaller than l")));
        assert!(sweep_specs(SweepParam::PoolSize, &[10.5], &base).is_err());
        assert!(sweep_specs(SweepParam::Noise, &[-1.0], &base).is_err());
        assert!(sweep_specs(SweepParam::Growth, &[], &base).is_err());
    }

    #[test]
    fn names_follow_presets() {
        let base = SimConfig::standard(PolicyKind::new(PolicyTag::Oracle));
        let specs = sweep_specs(SweepParam::Noise, &[0.0, 1.0], &base).unwrap();
        assert_eq!(specs[0].0, "noise_0");
        assert_eq!(specs[1].1.name, "oracle_eps1");
        assert_eq!(specs[1].1.config.policy.noise_epsilon, 1.0);
    }
}
