//! Degeneracy norms, speeds, serving rates and the asymptotic speed predictors.

use serde::{Deserialize, Serialize};

use crate::dynamics::InterestVector;
use crate::error::{Error, Result};
use crate::policies::ItemId;

pub const L2: &str = "l2";
pub const SUP: &str = "sup";
pub const L2_SPEED: &str = "l2_speed";
pub const SUP_SPEED: &str = "sup_speed";
pub const SERVING_RATE: &str = "serving_rate";

/// Default trailing window for [`tail_slope`].
pub const DEFAULT_WINDOW: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReading {
    pub t: u64,
    pub l2: f64,
    pub sup: f64,
    pub l2_speed: Option<f64>,
    pub sup_speed: Option<f64>,
}

impl DegeneracyReading {
    pub fn new(t: u64, mu_t: &InterestVector, mu_0: &InterestVector) -> Result<Self> {
        let l2 = l2_degeneracy(mu_t, mu_0)?;
        let sup = sup_degeneracy(mu_t, mu_0)?;
        let speed = |x: f64| (t > 0).then(|| x / t as f64);
        Ok(DegeneracyReading { t, l2, sup, l2_speed: speed(l2), sup_speed: speed(sup) })
    }
}

fn check_keys(mu_t: &InterestVector, mu_0: &InterestVector) -> Result<()> {
    if mu_t.len() != mu_0.len() {
        return Err(Error::invalid(format!("interest vectors cover {} and {} items", mu_t.len(), mu_0.len())));
    }
    Ok(())
}

/// `‖a − b‖₂` over the common prefix.
pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `max |a − b|` over the common prefix; 0 when empty.
pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn l2_degeneracy(mu_t: &InterestVector, mu_0: &InterestVector) -> Result<f64> {
    check_keys(mu_t, mu_0)?;
    Ok(l2_distance(mu_t.as_slice(), mu_0.as_slice()))
}

pub fn sup_degeneracy(mu_t: &InterestVector, mu_0: &InterestVector) -> Result<f64> {
    check_keys(mu_t, mu_0)?;
    Ok(sup_distance(mu_t.as_slice(), mu_0.as_slice()))
}

/// Fraction of the interval each listed item was served.
pub fn serving_rates(serve_counts: &[(ItemId, u32)], interval_length: u64, l: usize) -> Result<Vec<(ItemId, f64)>> {
    if interval_length == 0 {
        return Err(Error::invalid("interval length must be positive"));
    }
    if l == 0 {
        return Err(Error::invalid("l must be positive"));
    }
    serve_counts
        .iter()
        .map(|&(item, n)| {
            if u64::from(n) > interval_length {
                Err(Error::invalid(format!("item {item} served {n} times in an interval of {interval_length}")))
            } else {
                Ok((item, f64::from(n) / interval_length as f64))
            }
        })
        .collect()
}

fn root_sum_squares(deltas: &[f64]) -> f64 {
    deltas.iter().map(|d| d * d).sum::<f64>().sqrt()
}

/// Asymptotic L² speed of uniform random serving: `√(Σδ²)·l/m`.
pub fn predicted_speed_random(deltas: &[f64], l: usize, m: usize) -> Result<f64> {
    if l == 0 || m < l {
        return Err(Error::invalid(format!("need 1 <= l <= m, got l = {l}, m = {m}")));
    }
    Ok(root_sum_squares(deltas) * l as f64 / m as f64)
}

/// Asymptotic L² speed when the same set of items is served every step.
pub fn predicted_speed_fixed_set(deltas_of_served_set: &[f64]) -> Result<f64> {
    if deltas_of_served_set.is_empty() {
        return Err(Error::invalid("served set is empty"));
    }
    Ok(root_sum_squares(deltas_of_served_set))
}

/// Asymptotic L² speed of a bandit spreading over `m_star` near-optimal arms.
pub fn predicted_speed_bandit(deltas: &[f64], m_star: usize) -> Result<f64> {
    if m_star == 0 {
        return Err(Error::invalid("m_star must be at least 1"));
    }
    Ok(root_sum_squares(deltas) / (m_star as f64).sqrt())
}

/// Least-squares slope over the points with
/// `t ≥ t_last − window_fraction·(t_last − t_first)`.
pub fn tail_slope(series: &[(f64, f64)], window_fraction: f64) -> Result<f64> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::invalid(format!("window fraction {window_fraction} not in (0, 1]")));
    }
    let (Some(first), Some(last)) = (series.first(), series.last()) else {
        return Err(Error::invalid("empty series"));
    };
    let start = last.0 - window_fraction * (last.0 - first.0);
    let window: Vec<(f64, f64)> = series.iter().copied().filter(|p| p.0 >= start).collect();
    if window.len() < 2 {
        return Err(Error::invalid(format!("{} point(s) in the slope window", window.len())));
    }
    let n = window.len() as f64;
    let mean_t = window.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_v = window.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, v) in &window {
        sxy += (t - mean_t) * (v - mean_v);
        sxx += (t - mean_t) * (t - mean_t);
    }
    if sxx == 0.0 {
        return Err(Error::invalid("slope window has a single distinct t"));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(v: &[f64]) -> InterestVector {
        InterestVector::new(v.to_vec())
    }

    #[test]
    fn norm_examples() {
        assert_eq!(l2_degeneracy(&iv(&[3.0, 4.0]), &iv(&[0.0, 0.0])).unwrap(), 5.0);
        assert_eq!(l2_degeneracy(&iv(&[1.5, -2.0]), &iv(&[1.5, -2.0])).unwrap(), 0.0);
        assert_eq!(l2_degeneracy(&iv(&[1.0; 4]), &iv(&[0.0; 4])).unwrap(), 2.0);
        assert_eq!(sup_degeneracy(&iv(&[3.0, -4.0]), &iv(&[0.0, 0.0])).unwrap(), 4.0);
        let (a, b) = (iv(&[-0.7]), iv(&[0.2]));
        assert_eq!(sup_degeneracy(&a, &b).unwrap(), l2_degeneracy(&a, &b).unwrap());
        let served = [900.0, 12.0, 0.0, 450.0];
        let moved: Vec<f64> = served.iter().map(|n| 0.01 * n).collect();
        assert!((sup_degeneracy(&iv(&moved), &iv(&[0.0; 4])).unwrap() - 9.0).abs() < 1e-12);
        assert!(l2_degeneracy(&iv(&[1.0]), &iv(&[1.0, 2.0])).is_err());
        assert!(sup_degeneracy(&iv(&[]), &iv(&[1.0])).is_err());
    }

    #[test]
    fn reading_speeds_start_at_one() {
        let r = DegeneracyReading::new(0, &iv(&[0.0]), &iv(&[0.0])).unwrap();
        assert_eq!(r.l2_speed, None);
        let r = DegeneracyReading::new(10, &iv(&[3.0, 4.0]), &iv(&[0.0, 0.0])).unwrap();
        assert_eq!(r.l2_speed, Some(0.5));
        assert_eq!(r.sup_speed, Some(0.4));
    }

    #[test]
    fn serving_rate_examples() {
        let rates = serving_rates(&[(ItemId(3), 250)], 500, 1).unwrap();
        assert_eq!(rates, vec![(ItemId(3), 0.5)]);
        let endgame: Vec<(ItemId, u32)> = (0..5).map(|a| (ItemId(a), 500)).collect();
        let rates = serving_rates(&endgame, 500, 5).unwrap();
        assert!(rates.iter().all(|&(_, r)| r == 1.0));
        assert_eq!(rates.iter().map(|r| r.1).sum::<f64>(), 5.0);
        // Random over 100 items: every item served 25 of 500 steps on average.
        let uniform: Vec<(ItemId, u32)> = (0..100).map(|a| (ItemId(a), 25)).collect();
        let rates = serving_rates(&uniform, 500, 5).unwrap();
        let mean = rates.iter().map(|r| r.1).sum::<f64>() / 100.0;
        assert!((mean - 0.05).abs() < 1e-12);
        assert!(serving_rates(&[(ItemId(0), 501)], 500, 5).is_err());
    }

    #[test]
    fn predictor_examples() {
        let d = vec![0.01; 100];
        assert!((predicted_speed_random(&d, 5, 100).unwrap() - 0.005).abs() < 1e-15);
        assert_eq!(predicted_speed_random(&[0.0; 10], 5, 10).unwrap(), 0.0);
        let d200 = vec![0.01; 200];
        let one = predicted_speed_random(&d200, 5, 100).unwrap();
        let two = predicted_speed_random(&d200, 5, 200).unwrap();
        assert!((one - 2.0 * two).abs() < 1e-15);
        assert!(predicted_speed_random(&d, 5, 4).is_err());

        assert!((predicted_speed_fixed_set(&[0.01; 5]).unwrap() - 0.022_360_68).abs() < 1e-8);
        assert!((predicted_speed_fixed_set(&[-0.01]).unwrap() - 0.01).abs() < 1e-15);
        let base = predicted_speed_fixed_set(&[0.01, -0.004]).unwrap();
        assert_eq!(predicted_speed_fixed_set(&[0.01, -0.004, 0.0]).unwrap(), base);
        assert!(predicted_speed_fixed_set(&[]).is_err());

        let d = [0.003, -0.009, 0.004];
        assert_eq!(predicted_speed_bandit(&d, 1).unwrap(), root_sum_squares(&d));
        let ratio = predicted_speed_bandit(&d, 4).unwrap() / predicted_speed_bandit(&d, 1).unwrap();
        assert!((ratio - 0.5).abs() < 1e-15);
        assert!((predicted_speed_bandit(&[0.01; 100], 25).unwrap() - 0.02).abs() < 1e-15);
        assert!(predicted_speed_bandit(&d, 0).is_err());
    }

    /// Closed-form least squares on an explicit grid, computed with sums of
    /// powers rather than centered moments.
    fn normal_equation_slope(points: &[(f64, f64)]) -> f64 {
        let n = points.len() as f64;
        let st: f64 = points.iter().map(|p| p.0).sum();
        let sv: f64 = points.iter().map(|p| p.1).sum();
        let stt: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let stv: f64 = points.iter().map(|p| p.0 * p.1).sum();
        (n * stv - st * sv) / (n * stt - st * st)
    }

    #[test]
    fn tail_slope_examples() {
        let flat: Vec<(f64, f64)> = (0..20).map(|t| (t as f64, 3.25)).collect();
        assert_eq!(tail_slope(&flat, 0.5).unwrap(), 0.0);
        let line: Vec<(f64, f64)> = (0..=20).map(|t| (t as f64 * 500.0, 0.005 * t as f64 * 500.0)).collect();
        assert!((tail_slope(&line, 0.5).unwrap() - 0.005).abs() < 1e-15);

        let sqrt: Vec<(f64, f64)> = (0..=20).map(|i| i as f64 * 500.0).map(|t| (t, t.sqrt())).collect();
        let slope = tail_slope(&sqrt, 0.5).unwrap();
        let target = 1.0 / (2.0 * 7500f64.sqrt());
        assert!((slope / target - 1.0).abs() < 0.05, "{slope} vs {target}");
        let window: Vec<(f64, f64)> = sqrt.iter().copied().filter(|p| p.0 >= 5000.0).collect();
        assert!((slope - normal_equation_slope(&window)).abs() < 1e-12);

        assert!(tail_slope(&[(1.0, 1.0)], 0.5).is_err());
        assert!(tail_slope(&[], 0.5).is_err());
        assert!(tail_slope(&line, 0.0).is_err());
        assert!(tail_slope(&[(0.0, 0.0), (10.0, 1.0)], 0.01).is_err());
    }

    proptest! {
        #[test]
        fn norm_inequality(pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..64)) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let l2 = l2_distance(&a, &b);
            let sup = sup_distance(&a, &b);
            prop_assert!(sup >= 0.0);
            prop_assert!(sup <= l2 * (1.0 + 1e-12));
            prop_assert!(l2 <= sup * (a.len() as f64).sqrt() * (1.0 + 1e-12));
        }

        #[test]
        fn slope_is_shift_invariant(k in -5.0f64..5.0, c in -100.0f64..100.0) {
            let pts: Vec<(f64, f64)> = (0..30).map(|t| (t as f64, k * t as f64 + c)).collect();
            prop_assert!((tail_slope(&pts, 0.5).unwrap() - k).abs() < 1e-9);
        }
    }
}
