//! The 28-feature representation of a query instance.
//!
//! Long-span statistics are computed on the monthly document series,
//! short-span statistics on the daily query-log series truncated at the
//! hitting time, so nothing after the moment the query is issued leaks into
//! the short-span features.

pub mod burst;
pub mod clicks;
pub mod series;
pub mod text;

pub use burst::{burst_states, burst_summary, detect_bursts, detect_bursts_with, Burst, BurstParams, BurstSet, BurstSummary};
pub use clicks::{ce_ratio, click_entropy, cluster_features};
pub use series::{
    autocorrelation, frequency_stats, kl_divergence, kl_divergence_smoothed, kurtosis, prediction_sse,
    seasonal_strength, trend_features,
};
pub use text::{entity_flags, Gazetteer};

use crate::config::KvConfig;
use crate::datamodel::{Feature, FeatureStats, FeatureVector, LabeledDataset, QueryInstance, TimeSeries, FEATURE_COUNT};
use crate::error::{Error, Result};

/// Which series the Holt forecasting error is computed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SseSource {
    ShortSpan,
    LongSpan,
}

impl std::str::FromStr for SseSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "short" => Ok(SseSource::ShortSpan),
            "long" => Ok(SseSource::LongSpan),
            other => Err(Error::config(format!("unknown series '{other}' (expected short or long)"))),
        }
    }
}

/// Window lengths and parameters used by [`extract_features_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractConfig {
    pub short_max_lag: usize,
    pub long_max_lag: usize,
    pub short_period: usize,
    pub long_period: usize,
    pub trend_window: usize,
    pub ce_long_days: u32,
    pub ce_short_days: u32,
    pub burst: BurstParams,
    pub sse_source: SseSource,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            short_max_lag: 30,
            long_max_lag: 24,
            short_period: 7,
            long_period: 12,
            trend_window: 14,
            ce_long_days: 14,
            ce_short_days: 3,
            burst: BurstParams::default(),
            sse_source: SseSource::ShortSpan,
        }
    }
}

impl ExtractConfig {
    /// Read the `features.*` and `burst.*` keys over the defaults.
    pub fn from_config(cfg: &mut KvConfig) -> Result<Self> {
        let mut c = ExtractConfig::default();
        cfg.take_into("features.short_max_lag", &mut c.short_max_lag)?;
        cfg.take_into("features.long_max_lag", &mut c.long_max_lag)?;
        cfg.take_into("features.short_period", &mut c.short_period)?;
        cfg.take_into("features.long_period", &mut c.long_period)?;
        cfg.take_into("features.trend_window", &mut c.trend_window)?;
        cfg.take_into("features.ce_long_days", &mut c.ce_long_days)?;
        cfg.take_into("features.ce_short_days", &mut c.ce_short_days)?;
        cfg.take_into("features.sse_series", &mut c.sse_source)?;
        cfg.take_into("burst.scale", &mut c.burst.scale)?;
        cfg.take_into("burst.gamma", &mut c.burst.gamma)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let windows = [
            ("features.short_max_lag", self.short_max_lag),
            ("features.long_max_lag", self.long_max_lag),
            ("features.short_period", self.short_period),
            ("features.long_period", self.long_period),
            ("features.trend_window", self.trend_window),
            ("features.ce_long_days", self.ce_long_days as usize),
            ("features.ce_short_days", self.ce_short_days as usize),
        ];
        if let Some((key, _)) = windows.iter().find(|(_, v)| *v == 0) {
            return Err(Error::config(format!("{key} must be positive")));
        }
        if !(self.burst.scale > 1.0 && self.burst.scale.is_finite()) {
            return Err(Error::config("burst.scale must be a finite value above 1"));
        }
        if !(self.burst.gamma >= 0.0 && self.burst.gamma.is_finite()) {
            return Err(Error::config("burst.gamma must be finite and non-negative"));
        }
        Ok(())
    }
}

fn named<T>(feature: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Data(msg) => Error::Data(format!("{feature}: {msg}")),
        other => other,
    })
}

pub fn extract_features(inst: &QueryInstance, gz: &Gazetteer) -> Result<FeatureVector> {
    extract_features_with(inst, gz, &ExtractConfig::default())
}

pub fn extract_features_with(inst: &QueryInstance, gz: &Gazetteer, cfg: &ExtractConfig) -> Result<FeatureVector> {
    use Feature as F;

    let hit = inst.short_series.index_of(inst.hitting_time).ok_or_else(|| {
        Error::data(format!(
            "hitting time {} outside short series starting {}",
            inst.hitting_time,
            inst.short_series.epoch()
        ))
    })?;
    let short: TimeSeries = inst.short_series.prefix(hit + 1)?;
    let long = &inst.long_series;
    let mut v = FeatureVector::zeros();

    let short_lag = cfg.short_max_lag.min(short.len().saturating_sub(1));
    let long_lag = cfg.long_max_lag.min(long.len().saturating_sub(1));
    v.set(F::LongSpanAcf, named("long_span_acf", autocorrelation(long, long_lag))?);
    v.set(F::ShortSpanAcf, named("short_span_acf", autocorrelation(&short, short_lag))?);
    v.set(
        F::LongSpanSeasonal,
        named("long_span_seasonal", seasonal_strength(long, cfg.long_period))?,
    );
    v.set(
        F::ShortSpanSeasonal,
        named("short_span_seasonal", seasonal_strength(&short, cfg.short_period))?,
    );
    v.set(F::LongSpanKurtosis, named("long_span_kurtosis", kurtosis(long))?);
    v.set(F::ShortSpanKurtosis, named("short_span_kurtosis", kurtosis(&short))?);
    v.set(
        F::LongSpanKlPt,
        named("long_span_KL_PT", kl_divergence(long, &inst.background_long_series))?,
    );
    let sse_series = match cfg.sse_source {
        SseSource::ShortSpan => &short,
        SseSource::LongSpan => long,
    };
    v.set(F::PredictionSse, named("prediction_sse", prediction_sse(sse_series))?);

    let bursts = burst_summary(&detect_bursts_with(&short, cfg.burst), hit);
    v.set(F::BurstLength, bursts.burst_length);
    v.set(F::BurstWeight, bursts.burst_weight);
    v.set(F::NoOfBursts, bursts.no_of_bursts);
    v.set(F::BurstDistM, bursts.burst_dist_m);
    v.set(F::BurstDistL, bursts.burst_dist_l);

    let (t_scope, t_level) = named("t_scope", trend_features(&short, hit, cfg.trend_window))?;
    v.set(F::TScope, t_scope);
    v.set(F::TLevel, t_level);

    let (avg, max) = frequency_stats(&short);
    v.set(F::AvgFreq, avg);
    v.set(F::MaxFreq, max);

    let (per, loc, org, tmp) = named("isPer", entity_flags(&inst.query, gz))?;
    v.set(F::IsPer, per);
    v.set(F::IsLoc, loc);
    v.set(F::IsOrg, org);
    v.set(F::IsTempEx, tmp);

    let ce_long = named("CElong", click_entropy(&inst.clicks, inst.hitting_time, cfg.ce_long_days))?;
    let ce_short = named("CEshort", click_entropy(&inst.clicks, inst.hitting_time, cfg.ce_short_days))?;
    v.set(F::CeLong, ce_long);
    v.set(F::CeShort, ce_short);
    v.set(F::CePer, ce_ratio(ce_short, ce_long));

    let (n, sum, avg_c, max_c) = named("noOfQueries", cluster_features(&inst.cluster))?;
    v.set(F::NoOfQueries, n);
    v.set(F::SumCFreq, sum);
    v.set(F::AvgCFreq, avg_c);
    v.set(F::MaxCFreq, max_c);

    if let Some(problem) = v.violations().into_iter().next() {
        return Err(Error::Data(format!("extracted vector invalid: {problem}")));
    }
    Ok(v)
}

/// Deviations below this are replaced by 1 so constant features map to 0.
const MIN_STD: f64 = 1e-12;

/// Per-feature mean and (population) standard deviation over `ds`.
pub fn fit_normalizer(ds: &LabeledDataset) -> Result<FeatureStats> {
    if ds.is_empty() {
        return Err(Error::data("cannot fit a normalizer on an empty dataset"));
    }
    let n = ds.len() as f64;
    let mut mean = [0.0; FEATURE_COUNT];
    for (x, _) in &ds.instances {
        for (m, v) in mean.iter_mut().zip(x.values()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut std = [0.0; FEATURE_COUNT];
    for (x, _) in &ds.instances {
        for ((s, v), m) in std.iter_mut().zip(x.values()).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut std {
        *s = (*s / n).sqrt();
        if *s < MIN_STD {
            *s = 1.0;
        }
    }
    Ok(FeatureStats { mean, std })
}

/// z-score `vec` with `stats`. The result is a model input, not a raw
/// feature vector, so raw-feature invariants no longer apply to it.
pub fn apply_normalizer(vec: &FeatureVector, stats: &FeatureStats) -> FeatureVector {
    let mut out = [0.0; FEATURE_COUNT];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (vec.values()[i] - stats.mean[i]) / stats.std[i];
    }
    FeatureVector::from_values(out)
}

pub fn invert_normalizer(vec: &FeatureVector, stats: &FeatureStats) -> FeatureVector {
    let mut out = [0.0; FEATURE_COUNT];
    for (i, o) in out.iter_mut().enumerate() {
        *o = vec.values()[i] * stats.std[i] + stats.mean[i];
    }
    FeatureVector::from_values(out)
}

/// Normalize every vector of `ds` with `stats`, recording the stats on the result.
pub fn normalize_dataset(ds: &LabeledDataset, stats: &FeatureStats) -> LabeledDataset {
    LabeledDataset {
        instances: ds
            .instances
            .iter()
            .map(|(x, y)| (apply_normalizer(x, stats), *y))
            .collect(),
        feature_stats: Some(stats.clone()),
        provenance: ds.provenance.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{ClusterMember, EventClass, QueryInstance};
    use chrono::NaiveDate;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn zero_instance() -> QueryInstance {
        QueryInstance {
            query: "quiet query".into(),
            event_date: d(2006, 4, 1),
            hitting_time: d(2006, 4, 10),
            short_series: TimeSeries::daily(d(2006, 3, 1), vec![0; 92]).unwrap(),
            long_series: TimeSeries::monthly(d(1987, 1, 1), vec![0; 246]).unwrap(),
            background_long_series: TimeSeries::monthly(d(1987, 1, 1), vec![0; 246]).unwrap(),
            clicks: vec![],
            cluster: vec![ClusterMember {
                query: "quiet query".into(),
                frequency: 0,
            }],
        }
    }

    #[test]
    fn all_zero_instance() {
        let v = extract_features(&zero_instance(), &Gazetteer::builtin()).unwrap();
        let prefix_len = 41.0;
        for (i, (name, value)) in crate::datamodel::FEATURE_NAMES.iter().zip(v.values()).enumerate() {
            let expected = match i {
                i if i == Feature::TScope as usize => 1.0,
                i if i == Feature::NoOfQueries as usize => 1.0,
                i if i == Feature::BurstDistM as usize || i == Feature::BurstDistL as usize => prefix_len,
                _ => 0.0,
            };
            assert_eq!(*value, expected, "{name}");
        }
    }

    #[test]
    fn identical_instances_give_identical_vectors() {
        let gz = Gazetteer::builtin();
        let mut inst = zero_instance();
        inst.short_series = TimeSeries::daily(d(2006, 3, 1), (0..92).map(|i| (i * 7 % 11) as u64).collect()).unwrap();
        let a = extract_features(&inst, &gz).unwrap();
        let b = extract_features(&inst.clone(), &gz).unwrap();
        assert_eq!(a.values().map(f64::to_bits), b.values().map(f64::to_bits));
    }

    #[test]
    fn short_prefix_errors_name_the_feature() {
        let mut inst = zero_instance();
        inst.hitting_time = d(2006, 3, 5);
        let err = extract_features(&inst, &Gazetteer::builtin()).unwrap_err().to_string();
        assert!(err.contains("short_span_seasonal"), "{err}");
    }

    #[test]
    fn config_overrides_and_rejects() {
        let mut kv = KvConfig::parse("features.sse_series = long\nburst.gamma = 0.5\nfeatures.short_period = 5").unwrap();
        let c = ExtractConfig::from_config(&mut kv).unwrap();
        kv.finish().unwrap();
        assert_eq!((c.sse_source, c.burst.gamma, c.short_period), (SseSource::LongSpan, 0.5, 5));
        for bad in ["burst.scale = 1", "features.long_period = 0", "features.sse_series = both"] {
            let err = ExtractConfig::from_config(&mut KvConfig::parse(bad).unwrap()).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}");
        }
    }

    #[test]
    fn sse_source_switch() {
        let gz = Gazetteer::builtin();
        let mut inst = zero_instance();
        inst.long_series = TimeSeries::monthly(d(1987, 1, 1), (0..246).map(|i| (i % 5) as u64).collect()).unwrap();
        let cfg = ExtractConfig {
            sse_source: SseSource::LongSpan,
            ..ExtractConfig::default()
        };
        let short = extract_features(&inst, &gz).unwrap();
        let long = extract_features_with(&inst, &gz, &cfg).unwrap();
        assert_eq!(short[Feature::PredictionSse], 0.0);
        assert!(long[Feature::PredictionSse] > 0.0);
    }

    fn ds_from_column(col: usize, values: &[f64]) -> LabeledDataset {
        let instances = values
            .iter()
            .map(|&v| {
                let mut x = [3.0; FEATURE_COUNT];
                x[col] = v;
                (FeatureVector::from_values(x), EventClass::Meme)
            })
            .collect();
        LabeledDataset::new(instances, "test")
    }

    #[test]
    fn constant_feature_normalizes_to_zero() {
        let ds = ds_from_column(0, &[1.0, 2.0, 3.0]);
        let stats = fit_normalizer(&ds).unwrap();
        assert_eq!(stats.std[5], 1.0);
        for (x, _) in normalize_dataset(&ds, &stats).instances {
            assert_eq!(x.values()[5], 0.0);
        }
    }

    #[test]
    fn two_point_feature() {
        let ds = ds_from_column(2, &[0.0, 2.0]);
        let stats = fit_normalizer(&ds).unwrap();
        let n = normalize_dataset(&ds, &stats);
        assert_eq!(n.instances[0].0.values()[2], -1.0);
        assert_eq!(n.instances[1].0.values()[2], 1.0);
    }

    #[test]
    fn empty_dataset_cannot_be_fit() {
        assert!(fit_normalizer(&LabeledDataset::default()).is_err());
    }
}
