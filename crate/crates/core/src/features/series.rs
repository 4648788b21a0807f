//! Scalar summaries of a single count series.

use crate::datamodel::TimeSeries;
use crate::error::{Error, Result};

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

fn is_constant(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}

fn too_short(op: &str, need: usize, got: usize) -> Error {
    Error::data(format!("{op}: series of length {got} is too short (need at least {need})"))
}

/// Sample autocorrelation at `lag`, with the full-series denominator.
pub fn acf_at(xs: &[f64], lag: usize) -> f64 {
    let m = mean(xs);
    let denom: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    if denom == 0.0 || lag >= xs.len() {
        return 0.0;
    }
    let num: f64 = xs
        .iter()
        .zip(&xs[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum();
    num / denom
}

/// Largest sample autocorrelation over lags `1..=max_lag`.
pub fn autocorrelation(ts: &TimeSeries, max_lag: usize) -> Result<f64> {
    let n = ts.len();
    if n < 2 {
        return Err(too_short("autocorrelation", 2, n));
    }
    if max_lag == 0 || max_lag >= n {
        return Err(Error::data(format!(
            "autocorrelation: max_lag {max_lag} must be in 1..{n}"
        )));
    }
    let xs = ts.values();
    if is_constant(&xs) {
        return Ok(0.0);
    }
    let best = (1..=max_lag)
        .map(|k| acf_at(&xs, k))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best.clamp(-1.0, 1.0))
}

/// Centered moving average of width `period`; `None` where the window
/// does not fit. Even periods use the usual 2×period weighting.
pub(crate) fn centered_moving_average(xs: &[f64], period: usize) -> Vec<Option<f64>> {
    let n = xs.len();
    let half = period / 2;
    let mut out = vec![None; n];
    for t in half..n.saturating_sub(half) {
        let v = if period % 2 == 1 {
            xs[t - half..=t + half].iter().sum::<f64>() / period as f64
        } else {
            let inner: f64 = xs[t - half + 1..t + half].iter().sum();
            (0.5 * xs[t - half] + inner + 0.5 * xs[t + half]) / period as f64
        };
        out[t] = Some(v);
    }
    out
}

/// Strength of the periodic component, in `[0, 1]`.
///
/// Classical additive decomposition: moving-average trend, per-position
/// seasonal means of the detrended values (re-centered to sum zero), and a
/// remainder. Returns `1 - Var(remainder) / Var(detrended)`, clamped.
pub fn seasonal_strength(ts: &TimeSeries, period: usize) -> Result<f64> {
    let n = ts.len();
    if period < 2 {
        return Err(Error::data(format!("seasonal_strength: period {period} must be at least 2")));
    }
    if n < 2 * period {
        return Err(too_short("seasonal_strength", 2 * period, n));
    }
    let xs = ts.values();
    if is_constant(&xs) {
        return Ok(0.0);
    }
    let trend = centered_moving_average(&xs, period);
    let detrended: Vec<(usize, f64)> = trend
        .iter()
        .enumerate()
        .filter_map(|(t, tr)| tr.map(|v| (t, xs[t] - v)))
        .collect();

    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for &(t, d) in &detrended {
        sums[t % period] += d;
        counts[t % period] += 1;
    }
    let mut seasonal: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let centre = mean(&seasonal);
    seasonal.iter_mut().for_each(|s| *s -= centre);

    let d: Vec<f64> = detrended.iter().map(|&(_, d)| d).collect();
    let r: Vec<f64> = detrended
        .iter()
        .map(|&(t, d)| d - seasonal[t % period])
        .collect();
    let var_d = variance(&d);
    if var_d == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - variance(&r) / var_d).clamp(0.0, 1.0))
}

/// Sample excess kurtosis `m4 / m2^2 - 3`; zero for a constant series.
pub fn kurtosis(ts: &TimeSeries) -> Result<f64> {
    let n = ts.len();
    if n < 4 {
        return Err(too_short("kurtosis", 4, n));
    }
    let xs = ts.values();
    if is_constant(&xs) {
        return Ok(0.0);
    }
    Ok(excess_kurtosis(&xs))
}

pub(crate) fn excess_kurtosis(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let (m2, m4) = xs.iter().fold((0.0, 0.0), |(m2, m4), x| {
        let d2 = (x - m) * (x - m);
        (m2 + d2, m4 + d2 * d2)
    });
    let n = xs.len() as f64;
    let (m2, m4) = (m2 / n, m4 / n);
    if m2 == 0.0 {
        return 0.0;
    }
    m4 / (m2 * m2) - 3.0
}

/// Add-count smoothing applied to both distributions before normalizing.
pub const KL_SMOOTHING: f64 = 0.5;

/// KL(p ‖ q) between the temporal distributions of two equal-length series,
/// each smoothed by [`KL_SMOOTHING`] per bucket.
pub fn kl_divergence(p_series: &TimeSeries, q_series: &TimeSeries) -> Result<f64> {
    kl_divergence_smoothed(p_series, q_series, KL_SMOOTHING)
}

/// As [`kl_divergence`] with an explicit smoothing count. With `lambda = 0`
/// the result is infinite whenever `q` has an empty bucket that `p` does not.
pub fn kl_divergence_smoothed(p_series: &TimeSeries, q_series: &TimeSeries, lambda: f64) -> Result<f64> {
    if p_series.len() != q_series.len() {
        return Err(Error::data(format!(
            "kl_divergence: length mismatch ({} vs {})",
            p_series.len(),
            q_series.len()
        )));
    }
    let normalize = |ts: &TimeSeries| -> Vec<f64> {
        let smoothed: Vec<f64> = ts.counts().iter().map(|&c| c as f64 + lambda).collect();
        let total: f64 = smoothed.iter().sum();
        if total == 0.0 {
            vec![1.0 / ts.len() as f64; ts.len()]
        } else {
            smoothed.iter().map(|v| v / total).collect()
        }
    };
    let p = normalize(p_series);
    let q = normalize(q_series);
    let kl: f64 = p
        .iter()
        .zip(&q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi).ln())
        .sum();
    Ok(kl.max(0.0))
}

/// Smoothing constants of the Holt linear forecaster.
pub const HOLT_ALPHA: f64 = 0.3;
pub const HOLT_BETA: f64 = 0.3;

/// Sum of squared one-step-ahead errors of Holt's linear method.
///
/// Initialized with level `x0` and trend `x1 - x0`; errors are summed from
/// the third point on.
pub fn prediction_sse(ts: &TimeSeries) -> Result<f64> {
    let n = ts.len();
    if n < 4 {
        return Err(too_short("prediction_sse", 4, n));
    }
    let xs = ts.values();
    let mut level = xs[0];
    let mut trend = xs[1] - xs[0];
    let mut sse = 0.0;
    for (t, &x) in xs.iter().enumerate().skip(1) {
        let forecast = level + trend;
        if t >= 2 {
            sse += (x - forecast) * (x - forecast);
        }
        let next_level = HOLT_ALPHA * x + (1.0 - HOLT_ALPHA) * forecast;
        trend = HOLT_BETA * (next_level - level) + (1.0 - HOLT_BETA) * trend;
        level = next_level;
    }
    Ok(sse)
}

/// `(t_scope, t_level)` for the window of `window` buckets ending at `hit_index`.
///
/// `t_scope` is the fraction of the window covered by the longest suffix whose
/// trailing 3-bucket moving average never decreases. `t_level` is the window
/// mean relative to the whole-series mean. Windows longer than the available
/// history shrink to it.
pub fn trend_features(ts: &TimeSeries, hit_index: usize, window: usize) -> Result<(f64, f64)> {
    let n = ts.len();
    if hit_index >= n {
        return Err(Error::data(format!("trend_features: hit index {hit_index} outside series of length {n}")));
    }
    if window < 2 {
        return Err(Error::data(format!("trend_features: window {window} must be at least 2")));
    }
    let xs = ts.values();
    let width = window.min(hit_index + 1);
    let start = hit_index + 1 - width;

    let ma = |j: usize| {
        let lo = j.saturating_sub(2);
        xs[lo..=j].iter().sum::<f64>() / (j - lo + 1) as f64
    };
    let mut suffix = 1;
    let mut j = hit_index;
    while j > start && ma(j) >= ma(j - 1) {
        suffix += 1;
        j -= 1;
    }
    let t_scope = suffix as f64 / width as f64;

    let overall = mean(&xs);
    let t_level = if overall == 0.0 {
        0.0
    } else {
        mean(&xs[start..=hit_index]) / overall
    };
    Ok((t_scope, t_level))
}

/// `(avgFreq, maxFreq)`.
pub fn frequency_stats(ts: &TimeSeries) -> (f64, f64) {
    let total: u64 = ts.total();
    let max = ts.counts().iter().copied().max().unwrap_or(0);
    (total as f64 / ts.len() as f64, max as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn ts(counts: &[u64]) -> TimeSeries {
        TimeSeries::daily(NaiveDate::from_ymd_opt(2006, 3, 1).unwrap(), counts.to_vec()).unwrap()
    }

    /// Non-negative integer encoding of a shifted sinusoid.
    fn sinusoid(n: usize, period: f64) -> TimeSeries {
        let counts = (0..n)
            .map(|t| (1000.0 + 500.0 * (2.0 * std::f64::consts::PI * t as f64 / period).sin()).round() as u64)
            .collect::<Vec<_>>();
        ts(&counts)
    }

    fn direct_acf(xs: &[f64], k: usize) -> f64 {
        let n = xs.len();
        let m = xs.iter().sum::<f64>() / n as f64;
        let mut num = 0.0;
        for t in 0..n - k {
            num += (xs[t] - m) * (xs[t + k] - m);
        }
        let mut den = 0.0;
        for x in xs {
            den += (x - m) * (x - m);
        }
        num / den
    }

    #[test]
    fn acf_constant_is_zero() {
        assert_eq!(autocorrelation(&ts(&[5, 5, 5, 5]), 2).unwrap(), 0.0);
    }

    #[test]
    fn acf_alternating_prefers_even_lag() {
        let s = ts(&[1, 0, 1, 0, 1, 0]);
        let xs = s.values();
        // hand computation: mean 1/2, deviations ±1/2, denominator 6/4
        // r(1) = 5·(−1/4) / (6/4) = −5/6, r(2) = 4·(1/4) / (6/4) = 2/3
        assert!((direct_acf(&xs, 1) + 5.0 / 6.0).abs() < 1e-15);
        assert!((direct_acf(&xs, 2) - 2.0 / 3.0).abs() < 1e-15);
        assert!((autocorrelation(&s, 2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn acf_sinusoid_peaks_at_period() {
        let s = sinusoid(92, 7.0);
        let xs = s.values();
        let oracle: Vec<f64> = (1..=30).map(|k| direct_acf(&xs, k)).collect();
        let argmax = oracle
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0
            + 1;
        assert_eq!(argmax, 7);
        let got = autocorrelation(&s, 30).unwrap();
        assert!((got - oracle[6]).abs() < 1e-12);
    }

    #[test]
    fn acf_rejects_short_or_bad_lag() {
        assert!(autocorrelation(&ts(&[1]), 1).is_err());
        assert!(autocorrelation(&ts(&[1, 2, 3]), 3).is_err());
    }

    #[test]
    fn seasonal_constant_and_sinusoid() {
        assert_eq!(seasonal_strength(&ts(&[4; 30]), 7).unwrap(), 0.0);
        assert!(seasonal_strength(&sinusoid(92, 7.0), 7).unwrap() >= 0.99);
        assert!(seasonal_strength(&ts(&[1; 13]), 7).is_err());
    }

    #[test]
    fn seasonal_white_noise_is_weak() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(100.0, 10.0).unwrap();
        let counts: Vec<u64> = (0..92).map(|_| { let v: f64 = normal.sample(&mut rng); v.round() as u64 }).collect();
        let s = seasonal_strength(&ts(&counts), 7).unwrap();
        // recorded for this seed: 0.06248
        assert!((s - 0.062483187387180505).abs() < 1e-12);
        assert!(s <= 0.3);
    }

    #[test]
    fn even_period_moving_average_weights() {
        let xs: Vec<f64> = (0..24).map(|v| v as f64).collect();
        let ma = centered_moving_average(&xs, 12);
        assert_eq!(ma[5], None);
        assert_eq!(ma[6], Some(6.0));
        assert_eq!(ma[17], Some(17.0));
        assert_eq!(ma[18], None);
    }

    #[test]
    fn kurtosis_cases() {
        assert_eq!(kurtosis(&ts(&[7, 7, 7, 7])).unwrap(), 0.0);
        // single spike among n = 8: m4/m2² = (n² − 3n + 3)/(n − 1) = 43/7
        let k = kurtosis(&ts(&[0, 0, 0, 100, 0, 0, 0, 0])).unwrap();
        assert!((k - 22.0 / 7.0).abs() < 1e-12, "{k}");
        assert!(kurtosis(&ts(&[1, 2, 3])).is_err());
    }

    #[test]
    fn kurtosis_of_normal_samples_is_near_zero() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(excess_kurtosis(&xs).abs() < 0.15);
    }

    #[test]
    fn kl_cases() {
        let a = ts(&[3, 1, 4, 1, 5]);
        assert_eq!(kl_divergence(&a, &a).unwrap(), 0.0);
        let p = ts(&[1, 0]);
        let q = ts(&[1, 1]);
        let raw = kl_divergence_smoothed(&p, &q, 0.0).unwrap();
        assert!((raw - std::f64::consts::LN_2).abs() < 1e-15);
        // smoothed: p = (0.75, 0.25), q = (0.5, 0.5)
        let expected = 0.75 * (1.5f64).ln() + 0.25 * (0.5f64).ln();
        assert!((kl_divergence(&p, &q).unwrap() - expected).abs() < 1e-15);
        assert!(kl_divergence(&p, &a).is_err());
    }

    #[test]
    fn holt_sse_cases() {
        assert!(prediction_sse(&ts(&[1, 2, 3, 4, 5, 6])).unwrap() < 1e-20);
        assert_eq!(prediction_sse(&ts(&[9, 9, 9, 9, 9])).unwrap(), 0.0);
        // recurrence by hand: errors at t = 2, 3, 4 are 1, 3.61, 9.1121
        let sse = prediction_sse(&ts(&[1, 2, 4, 8, 16])).unwrap();
        assert!((sse - 97.06246641).abs() < 1e-9, "{sse}");
        assert!(prediction_sse(&ts(&[1, 2, 3])).is_err());
    }

    #[test]
    fn trend_constant_and_zero() {
        assert_eq!(trend_features(&ts(&[4; 20]), 19, 14).unwrap(), (1.0, 1.0));
        assert_eq!(trend_features(&ts(&[0; 20]), 19, 14).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn trend_dip_then_rise() {
        // flat history, a dip, then a 7-bucket linear rise ending at the hit
        let mut counts = vec![10u64; 20];
        counts.extend([2, 2, 2, 2, 2, 2, 2]);
        counts.extend([3, 4, 5, 6, 7, 8, 9]);
        let s = ts(&counts);
        let hit = counts.len() - 1;
        let (scope, level) = trend_features(&s, hit, 14).unwrap();
        // 3-bucket trailing averages over the window (indices 20..=33):
        //   idx 20: 22/3, 21: 14/3, 22: 2, 23..26: 2, 27: 7/3, 28: 3, ... rising
        // the non-decreasing suffix starts at idx 22 → 12 of 14 buckets
        assert!((scope - 12.0 / 14.0).abs() < 1e-15);
        let window_mean = (7.0 * 2.0 + 42.0) / 14.0;
        let overall = (200.0 + 14.0 + 42.0) / 34.0;
        assert!((level - window_mean / overall).abs() < 1e-15);
    }

    #[test]
    fn trend_window_shrinks_to_history() {
        let (scope, level) = trend_features(&ts(&[1, 2, 3, 4]), 2, 14).unwrap();
        assert_eq!(scope, 1.0);
        assert!((level - 2.0 / 2.5).abs() < 1e-15);
        assert!(trend_features(&ts(&[1, 2]), 2, 14).is_err());
    }

    #[test]
    fn frequency_cases() {
        assert_eq!(frequency_stats(&ts(&[0, 0, 0])), (0.0, 0.0));
        assert_eq!(frequency_stats(&ts(&[2, 4, 6])), (4.0, 6.0));
    }
}
