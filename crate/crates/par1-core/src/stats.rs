//! Descriptive statistics used by the replication tables.
//!
//! The conventions are fixed so that ports of the table pipeline agree on
//! sorted inputs: Tukey hinges (median of each half, halves sharing the
//! middle element when the count is odd), whiskers at the most extreme data
//! within 1.5·(hinge spread) beyond the hinges, and linear-interpolation
//! quantiles with plotting position h = (n−1)p + 1.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("quantile level must lie strictly inside (0, 1) (got {0})")]
    BadQuantile(f64),
}

pub fn mean(xs: &[f64]) -> Result<f64, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample standard deviation (n−1 divisor); 0 for a single value.
pub fn sample_sd(xs: &[f64]) -> Result<f64, StatsError> {
    let m = mean(xs)?;
    if xs.len() == 1 {
        return Ok(0.0);
    }
    let ss = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    Ok((ss / (xs.len() - 1) as f64).sqrt())
}

/// Plain sample kurtosis m₄/m₂² (Gaussian → 3).
pub fn sample_kurtosis(xs: &[f64]) -> Result<f64, StatsError> {
    let m = mean(xs)?;
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    Ok(m4 / (m2 * m2))
}

/// Linear-interpolation quantile of an already sorted slice,
/// h = (n−1)p (0-based).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Result<f64, StatsError> {
    if sorted.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(StatsError::BadQuantile(p));
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < sorted.len() {
        Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
    } else {
        Ok(sorted[lo])
    }
}

pub fn median(xs: &[f64]) -> Result<f64, StatsError> {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_of_sorted_median(&s)
}

fn quantile_of_sorted_median(sorted: &[f64]) -> Result<f64, StatsError> {
    if sorted.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let n = sorted.len();
    if n % 2 == 1 {
        Ok(sorted[n / 2])
    } else {
        Ok(0.5 * (sorted[n / 2 - 1] + sorted[n / 2]))
    }
}

/// p-quantile of the absolute values.
pub fn quantile_abs(xs: &[f64], p: f64) -> Result<f64, StatsError> {
    let mut s: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, p)
}

/// Five-number boxplot summary under Tukey's rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxplotStats {
    pub lower_whisker: f64,
    pub lower_hinge: f64,
    pub median: f64,
    pub upper_hinge: f64,
    pub upper_whisker: f64,
}

pub fn boxplot_stats(xs: &[f64]) -> Result<BoxplotStats, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let med = quantile_of_sorted_median(&s)?;
    // halves share the middle element when n is odd
    let (lower_half, upper_half) = if n % 2 == 1 {
        (&s[..=n / 2], &s[n / 2..])
    } else {
        (&s[..n / 2], &s[n / 2..])
    };
    let lower_hinge = quantile_of_sorted_median(lower_half)?;
    let upper_hinge = quantile_of_sorted_median(upper_half)?;
    let reach = 1.5 * (upper_hinge - lower_hinge);
    let lower_fence = lower_hinge - reach;
    let upper_fence = upper_hinge + reach;
    // the hinges themselves lie inside the fences, so these always exist
    let lower_whisker = *s.iter().find(|x| **x >= lower_fence).unwrap();
    let upper_whisker = *s.iter().rev().find(|x| **x <= upper_fence).unwrap();
    Ok(BoxplotStats {
        lower_whisker,
        lower_hinge,
        median: med,
        upper_hinge,
        upper_whisker,
    })
}

/// Two-sample Kolmogorov–Smirnov comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    /// Sup distance between the two empirical CDFs.
    pub statistic: f64,
    /// Asymptotic 1% critical value 1.628·√((m+n)/(m·n)).
    pub critical_1pct: f64,
}

impl KsResult {
    pub fn passes(&self) -> bool {
        self.statistic < self.critical_1pct
    }
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut stat = 0.0f64;
    while i < n && j < m {
        let t = xs[i].min(ys[j]);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        let d = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        if d > stat {
            stat = d;
        }
    }
    let critical_1pct = 1.628 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt();
    Ok(KsResult {
        statistic: stat,
        critical_1pct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn boxplot_hand_example() {
        let b = boxplot_stats(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(b.lower_hinge, 2.0);
        assert_eq!(b.median, 3.0);
        assert_eq!(b.upper_hinge, 4.0);
        assert_eq!(b.lower_whisker, 1.0);
        assert_eq!(b.upper_whisker, 5.0);
    }

    #[test]
    fn boxplot_constant_vector() {
        let b = boxplot_stats(&[2.5; 9]).unwrap();
        assert_eq!(
            (
                b.lower_whisker,
                b.lower_hinge,
                b.median,
                b.upper_hinge,
                b.upper_whisker
            ),
            (2.5, 2.5, 2.5, 2.5, 2.5)
        );
    }

    #[test]
    fn boxplot_excludes_outliers_from_whiskers() {
        let b = boxplot_stats(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        // hinges 2 and 4, fence at 4 + 3 = 7, so 100 is left out
        assert_eq!(b.upper_whisker, 4.0);
    }

    #[test]
    fn boxplot_gaussian_hinges_near_the_quartiles() {
        let mut rng = crate::seed::rng_from(5);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let b = boxplot_stats(&xs).unwrap();
        assert!((b.lower_hinge + 0.6745).abs() < 0.05, "{}", b.lower_hinge);
        assert!((b.upper_hinge - 0.6745).abs() < 0.05, "{}", b.upper_hinge);
    }

    #[test]
    fn quantile_hand_examples() {
        let xs: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(quantile_abs(&xs, 0.95).unwrap(), 95.05);
        assert_eq!(quantile_abs(&[0.0; 10], 0.95).unwrap(), 0.0);
        assert!(matches!(
            quantile_abs(&xs, 1.0),
            Err(StatsError::BadQuantile(_))
        ));
        assert!(matches!(
            quantile_abs(&[], 0.5),
            Err(StatsError::EmptySample)
        ));
    }

    #[test]
    fn abs_quantile_of_gaussian_sample() {
        let mut rng = crate::seed::rng_from(6);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let q = quantile_abs(&xs, 0.95).unwrap();
        assert!((q - 1.96).abs() < 0.03, "{q}");
    }

    #[test]
    fn ks_degenerate_cases() {
        let xs = vec![1.0, 2.0, 3.0];
        let r = ks_two_sample(&xs, &xs).unwrap();
        assert_eq!(r.statistic, 0.0);
        let r = ks_two_sample(&[0.0], &[1.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!((r.critical_1pct - 1.628 * 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ks_detects_a_shift() {
        let mut rng = crate::seed::rng_from(7);
        let a: Vec<f64> = (0..2000)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let b: Vec<f64> = (0..2000)
            .map(|_| rng.sample::<f64, _>(StandardNormal) + 0.5)
            .collect();
        let r = ks_two_sample(&a, &b).unwrap();
        assert!(!r.passes(), "{r:?}");
        // same law passes comfortably at this size
        let c: Vec<f64> = (0..2000)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let d: Vec<f64> = (0..2000)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        assert!(ks_two_sample(&c, &d).unwrap().passes());
    }

    #[test]
    fn kurtosis_of_gaussian_is_near_three() {
        let mut rng = crate::seed::rng_from(8);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let k = sample_kurtosis(&xs).unwrap();
        assert!((k - 3.0).abs() < 0.15, "{k}");
    }

    proptest! {
        #[test]
        fn boxplot_is_ordered(xs in proptest::collection::vec(-1e6f64..1e6, 1..200)) {
            let b = boxplot_stats(&xs).unwrap();
            prop_assert!(b.lower_whisker <= b.lower_hinge);
            prop_assert!(b.lower_hinge <= b.median);
            prop_assert!(b.median <= b.upper_hinge);
            prop_assert!(b.upper_hinge <= b.upper_whisker);
        }

        #[test]
        fn ks_statistic_is_a_symmetric_distance(
            a in proptest::collection::vec(-1e3f64..1e3, 1..80),
            b in proptest::collection::vec(-1e3f64..1e3, 1..80),
        ) {
            let ab = ks_two_sample(&a, &b).unwrap();
            let ba = ks_two_sample(&b, &a).unwrap();
            prop_assert!((ab.statistic - ba.statistic).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab.statistic));
        }
    }
}
