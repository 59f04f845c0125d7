//! Small statistical helpers shared across modules.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal parameters are valid")
}

/// Two-sided normal critical value `z_{(1+level)/2}`.
pub fn normal_critical(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Parameter(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    Ok(standard_normal().inverse_cdf(0.5 * (1.0 + level)))
}

/// Two-sided p-value for a standard normal statistic.
pub fn two_sided_normal_p(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    2.0 * standard_normal().cdf(-z.abs())
}

/// Empirical quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let a = sorted[lo];
    let b = sorted[hi];
    if a == b {
        a
    } else {
        a + (h - lo as f64) * (b - a)
    }
}

/// Mean computed as `reference + mean(x - reference)`.
///
/// When every value equals `reference` the result is exactly that value,
/// so identical inputs never produce spurious rounding dispersion.
pub fn shifted_mean(values: impl Iterator<Item = f64>, reference: f64) -> (f64, usize) {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v - reference;
        n += 1;
    }
    if n == 0 {
        (f64::NAN, 0)
    } else {
        (reference + sum / n as f64, n)
    }
}

/// Sample standard deviation with the `n - 1` divisor.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let (mean, _) = shifted_mean(values.iter().copied(), values[0]);
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (n - 1) as f64).sqrt()
}
