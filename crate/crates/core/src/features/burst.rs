//! Two-state burst detection over a bucketed count stream.
//!
//! Each bucket's count is scored under a Poisson rate for the base state
//! (the series mean) and for the elevated state (`scale` times the base).
//! Entering the elevated state costs `gamma * ln(n)`; leaving it is free.
//! The cheapest state sequence is found by dynamic programming, and maximal
//! runs of the elevated state are reported as bursts.

use crate::datamodel::TimeSeries;

/// Automaton parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BurstParams {
    /// Ratio of elevated to base rate.
    pub scale: f64,
    /// Multiplier of the `ln(n)` state-entry cost.
    pub gamma: f64,
}

impl Default for BurstParams {
    fn default() -> Self {
        BurstParams {
            scale: 2.0,
            gamma: 1.0,
        }
    }
}

/// Costs closer than this are treated as equal; ties go to the base state.
const TIE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Burst {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub weight: f64,
}

impl Burst {
    /// Number of buckets covered.
    pub fn duration(&self) -> usize {
        self.end - self.start + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BurstSet {
    pub bursts: Vec<Burst>,
    pub series_len: usize,
}

/// Per-bucket costs of the two states, or `None` for an all-zero series.
pub(crate) struct StateCosts {
    pub base: Vec<f64>,
    pub elevated: Vec<f64>,
    pub entry: f64,
}

pub(crate) fn state_costs(counts: &[u64], params: BurstParams) -> Option<StateCosts> {
    let n = counts.len();
    let total: u64 = counts.iter().sum();
    if n == 0 || total == 0 {
        return None;
    }
    let rate0 = total as f64 / n as f64;
    let rate1 = params.scale * rate0;
    let cost = |rate: f64, x: u64| rate - x as f64 * rate.ln();
    Some(StateCosts {
        base: counts.iter().map(|&x| cost(rate0, x)).collect(),
        elevated: counts.iter().map(|&x| cost(rate1, x)).collect(),
        entry: params.gamma * (n as f64).ln(),
    })
}

/// Optimal state sequence (`true` = elevated). All-zero input stays in the base state.
pub fn burst_states(counts: &[u64], params: BurstParams) -> Vec<bool> {
    let Some(costs) = state_costs(counts, params) else {
        return vec![false; counts.len()];
    };
    let n = counts.len();
    // back[t][s] = predecessor state of state s at bucket t
    let mut back = vec![[false; 2]; n];
    let mut c0 = costs.base[0];
    let mut c1 = costs.entry + costs.elevated[0];
    for t in 1..n {
        let from0_to0 = c0;
        let from1_to0 = c1;
        let (best0, prev0) = if from0_to0 <= from1_to0 + TIE_EPS {
            (from0_to0, false)
        } else {
            (from1_to0, true)
        };
        let from0_to1 = c0 + costs.entry;
        let from1_to1 = c1;
        let (best1, prev1) = if from0_to1 <= from1_to1 + TIE_EPS {
            (from0_to1, false)
        } else {
            (from1_to1, true)
        };
        back[t] = [prev0, prev1];
        c0 = best0 + costs.base[t];
        c1 = best1 + costs.elevated[t];
    }
    let mut states = vec![false; n];
    let mut s = c1 + TIE_EPS < c0;
    for t in (0..n).rev() {
        states[t] = s;
        s = back[t][s as usize];
    }
    states
}

pub fn detect_bursts(ts: &TimeSeries) -> BurstSet {
    detect_bursts_with(ts, BurstParams::default())
}

pub fn detect_bursts_with(ts: &TimeSeries, params: BurstParams) -> BurstSet {
    let counts = ts.counts();
    let states = burst_states(counts, params);
    let mut bursts = Vec::new();
    if let Some(costs) = state_costs(counts, params) {
        let mut t = 0;
        while t < states.len() {
            if !states[t] {
                t += 1;
                continue;
            }
            let start = t;
            while t + 1 < states.len() && states[t + 1] {
                t += 1;
            }
            let weight: f64 = (start..=t).map(|i| costs.base[i] - costs.elevated[i]).sum();
            bursts.push(Burst {
                start,
                end: t,
                weight: weight.max(0.0),
            });
            t += 1;
        }
    }
    BurstSet {
        bursts,
        series_len: counts.len(),
    }
}

/// Burst features at a given hit index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BurstSummary {
    pub burst_length: f64,
    pub burst_weight: f64,
    pub no_of_bursts: f64,
    pub burst_dist_m: f64,
    pub burst_dist_l: f64,
}

impl BurstSummary {
    pub fn as_tuple(&self) -> (f64, f64, f64, f64, f64) {
        (
            self.burst_length,
            self.burst_weight,
            self.no_of_bursts,
            self.burst_dist_m,
            self.burst_dist_l,
        )
    }
}

fn signed_distance(hit: usize, b: &Burst) -> f64 {
    if (b.start..=b.end).contains(&hit) {
        0.0
    } else {
        hit as f64 - b.end as f64
    }
}

/// Summarize `bs` relative to `hit_index`. Distances are `hit - end` of the
/// heaviest / longest burst (earliest wins ties), zero when the hit falls
/// inside it, and `series_len` when there are no bursts.
pub fn burst_summary(bs: &BurstSet, hit_index: usize) -> BurstSummary {
    let sentinel = bs.series_len as f64;
    let heaviest = bs
        .bursts
        .iter()
        .fold(None::<&Burst>, |best, b| match best {
            Some(cur) if cur.weight >= b.weight => Some(cur),
            _ => Some(b),
        });
    let longest = bs
        .bursts
        .iter()
        .fold(None::<&Burst>, |best, b| match best {
            Some(cur) if cur.duration() >= b.duration() => Some(cur),
            _ => Some(b),
        });
    BurstSummary {
        burst_length: longest.map_or(0.0, |b| b.duration() as f64),
        burst_weight: heaviest.map_or(0.0, |b| b.weight),
        no_of_bursts: bs.bursts.len() as f64,
        burst_dist_m: heaviest.map_or(sentinel, |b| signed_distance(hit_index, b)),
        burst_dist_l: longest.map_or(sentinel, |b| signed_distance(hit_index, b)),
    }
}
