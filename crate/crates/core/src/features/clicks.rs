//! Click-through and query-cluster features.

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};

use crate::datamodel::{ClickRecord, ClusterMember};
use crate::error::{Error, Result};

/// Shannon entropy (bits) of clicked URLs in the `window_days` days ending at `hit`.
pub fn click_entropy(clicks: &[ClickRecord], hit: NaiveDate, window_days: u32) -> Result<f64> {
    if window_days == 0 {
        return Err(Error::data("click_entropy: window must cover at least one day"));
    }
    let first = hit
        .checked_sub_days(Days::new(u64::from(window_days) - 1))
        .unwrap_or(NaiveDate::MIN);
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for c in clicks.iter().filter(|c| c.timestamp >= first && c.timestamp <= hit) {
        *counts.entry(c.url.as_str()).or_default() += 1;
    }
    if counts.len() <= 1 {
        return Ok(0.0);
    }
    let total: u64 = counts.values().sum();
    let h: f64 = counts
        .values()
        .map(|&n| {
            let p = n as f64 / total as f64;
            -p * p.log2()
        })
        .sum();
    Ok(h.max(0.0))
}

/// `ce_short / ce_long`, or 0 when the long-window entropy is 0.
pub fn ce_ratio(ce_short: f64, ce_long: f64) -> f64 {
    if ce_long > 0.0 {
        ce_short / ce_long
    } else {
        0.0
    }
}

/// `(noOfQueries, sumCFreq, avgCFreq, maxCFreq)` over the cluster members.
pub fn cluster_features(cluster: &[ClusterMember]) -> Result<(f64, f64, f64, f64)> {
    if cluster.is_empty() {
        return Err(Error::data("cluster_features: empty cluster"));
    }
    let n = cluster.len() as f64;
    let sum: u64 = cluster.iter().map(|m| m.frequency).sum();
    let max = cluster.iter().map(|m| m.frequency).max().unwrap_or(0);
    Ok((n, sum as f64, sum as f64 / n, max as f64))
}
