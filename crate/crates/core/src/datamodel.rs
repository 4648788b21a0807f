//! Core domain types shared by every stage of the pipeline.
//!
//! A [`QueryInstance`] is the unit of classification: a query string observed
//! at a hitting time, together with the raw signals (daily query-log counts,
//! monthly document counts, clicks, and the query's cluster) from which the
//! 28 features of a [`FeatureVector`] are computed.

use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of features in a [`FeatureVector`].
pub const FEATURE_COUNT: usize = 28;

/// The six dynamic event classes, with fixed integer codes `0..=5`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventClass {
    Anticipated = 0,
    Breaking = 1,
    Commemorative = 2,
    Meme = 3,
    Ongoing = 4,
    Atemporal = 5,
}

impl EventClass {
    pub const COUNT: usize = 6;

    pub const ALL: [EventClass; 6] = [
        EventClass::Anticipated,
        EventClass::Breaking,
        EventClass::Commemorative,
        EventClass::Meme,
        EventClass::Ongoing,
        EventClass::Atemporal,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            EventClass::Anticipated => "anticipated",
            EventClass::Breaking => "breaking",
            EventClass::Commemorative => "commemorative",
            EventClass::Meme => "meme",
            EventClass::Ongoing => "ongoing",
            EventClass::Atemporal => "atemporal",
        }
    }
}

impl fmt::Display for EventClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EventClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if let Ok(code) = lower.parse::<u8>() {
            return Self::from_code(code).ok_or_else(|| Error::data(format!("unknown class code {code}")));
        }
        Self::ALL
            .into_iter()
            .find(|c| c.name() == lower)
            .ok_or_else(|| Error::data(format!("unknown event class '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Daily,
    Monthly,
}

/// Evenly spaced non-negative counts starting at `epoch`.
///
/// Bucket `i` covers `epoch + i` days (daily) or `epoch + i` months (monthly).
/// Monthly epochs are anchored to the first of the month.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTimeSeries")]
pub struct TimeSeries {
    epoch: NaiveDate,
    granularity: Granularity,
    counts: Vec<u64>,
}

#[derive(Deserialize)]
struct RawTimeSeries {
    epoch: NaiveDate,
    granularity: Granularity,
    counts: Vec<u64>,
}

impl TryFrom<RawTimeSeries> for TimeSeries {
    type Error = Error;

    fn try_from(raw: RawTimeSeries) -> Result<Self> {
        TimeSeries::new(raw.epoch, raw.granularity, raw.counts)
    }
}

impl TimeSeries {
    pub fn new(epoch: NaiveDate, granularity: Granularity, counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::data("time series must have at least one bucket"));
        }
        if granularity == Granularity::Monthly && epoch.day() != 1 {
            return Err(Error::data(format!("monthly series epoch {epoch} is not the first of a month")));
        }
        Ok(TimeSeries {
            epoch,
            granularity,
            counts,
        })
    }

    pub fn daily(epoch: NaiveDate, counts: Vec<u64>) -> Result<Self> {
        Self::new(epoch, Granularity::Daily, counts)
    }

    /// Monthly series; `epoch` is snapped to the first of its month.
    pub fn monthly(epoch: NaiveDate, counts: Vec<u64>) -> Result<Self> {
        Self::new(month_start(epoch), Granularity::Monthly, counts)
    }

    pub fn epoch(&self) -> NaiveDate {
        self.epoch
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn values(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// Start date of bucket `i`.
    pub fn date_at(&self, i: usize) -> NaiveDate {
        match self.granularity {
            Granularity::Daily => self.epoch + chrono::Days::new(i as u64),
            Granularity::Monthly => self.epoch + Months::new(i as u32),
        }
    }

    /// Start date of the last bucket.
    pub fn last_date(&self) -> NaiveDate {
        self.date_at(self.len() - 1)
    }

    /// Bucket containing `date`, if covered.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = match self.granularity {
            Granularity::Daily => (date - self.epoch).num_days(),
            Granularity::Monthly => months_between(self.epoch, date),
        };
        (offset >= 0 && (offset as usize) < self.len()).then_some(offset as usize)
    }

    /// The first `len` buckets, same epoch.
    pub fn prefix(&self, len: usize) -> Result<TimeSeries> {
        if len == 0 || len > self.len() {
            return Err(Error::data(format!("prefix length {len} outside 1..={}", self.len())));
        }
        Ok(TimeSeries {
            epoch: self.epoch,
            granularity: self.granularity,
            counts: self.counts[..len].to_vec(),
        })
    }
}

pub(crate) fn month_start(date: NaiveDate) -> NaiveDate {
    NaiveDate::from_ymd_opt(date.year(), date.month(), 1).expect("first of month is valid")
}

/// Whole months from the month of `from` to the month of `to`.
pub(crate) fn months_between(from: NaiveDate, to: NaiveDate) -> i64 {
    (to.year() as i64 - from.year() as i64) * 12 + (to.month() as i64 - from.month() as i64)
}

/// Lowercase, trim, and collapse internal whitespace.
pub fn normalize_query(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercase, strip the scheme and any trailing slashes.
pub fn normalize_url(raw: &str) -> String {
    let lower = raw.trim().to_lowercase();
    let without_scheme = lower
        .split_once("://")
        .map(|(_, rest)| rest)
        .unwrap_or(&lower);
    without_scheme.trim_end_matches('/').to_string()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub timestamp: NaiveDate,
    pub url: String,
    pub query: String,
}

impl ClickRecord {
    pub fn new(timestamp: NaiveDate, url: &str, query: &str) -> Result<Self> {
        let url = normalize_url(url);
        if url.is_empty() {
            return Err(Error::data("click url is empty after normalization"));
        }
        Ok(ClickRecord {
            timestamp,
            url,
            query: normalize_query(query),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterMember {
    pub query: String,
    pub frequency: u64,
}

/// A (query, event date, hitting time) triple with its raw signals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryInstance {
    pub query: String,
    pub event_date: NaiveDate,
    pub hitting_time: NaiveDate,
    pub short_series: TimeSeries,
    pub long_series: TimeSeries,
    pub background_long_series: TimeSeries,
    pub clicks: Vec<ClickRecord>,
    pub cluster: Vec<ClusterMember>,
}

/// One broken invariant of a [`QueryInstance`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub rule: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.field, self.rule)
    }
}

/// Every invariant of `inst` that does not hold; empty when the instance is valid.
pub fn validate_instance(inst: &QueryInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut flag = |field, rule| out.push(Violation { field, rule });

    if inst.query.is_empty() || normalize_query(&inst.query) != inst.query {
        flag("query", "not normalized");
    }
    if inst.short_series.granularity() != Granularity::Daily {
        flag("short_series", "not daily");
    }
    if inst.short_series.index_of(inst.hitting_time).is_none() {
        flag("hitting_time", "outside short_series");
    }
    if inst.long_series.granularity() != Granularity::Monthly {
        flag("long_series", "not monthly");
    }
    if inst.background_long_series.granularity() != Granularity::Monthly {
        flag("background_long_series", "not monthly");
    }
    if inst.background_long_series.epoch() != inst.long_series.epoch()
        || inst.background_long_series.len() != inst.long_series.len()
    {
        flag("background_long_series", "misaligned with long_series");
    }
    if inst
        .clicks
        .iter()
        .any(|c| c.url.is_empty() || normalize_url(&c.url) != c.url)
    {
        flag("clicks", "url not normalized");
    }
    if !inst.cluster.iter().any(|m| m.query == inst.query) {
        flag("cluster", "missing self");
    }
    out
}

/// Names of the 28 features, in canonical vector order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "long_span_acf",
    "short_span_acf",
    "long_span_seasonal",
    "short_span_seasonal",
    "long_span_kurtosis",
    "short_span_kurtosis",
    "long_span_KL_PT",
    "prediction_sse",
    "burstLength",
    "t_scope",
    "burstWeight",
    "t_level",
    "noOfBursts",
    "avgFreq",
    "isPer",
    "maxFreq",
    "isLoc",
    "CElong",
    "isOrg",
    "CEshort",
    "isTempEx",
    "CEper",
    "noOfQueries",
    "sumCFreq",
    "burstDistM",
    "avgCFreq",
    "burstDistL",
    "maxCFreq",
];

/// Position of each feature inside a [`FeatureVector`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[allow(non_camel_case_types)]
pub enum Feature {
    LongSpanAcf = 0,
    ShortSpanAcf,
    LongSpanSeasonal,
    ShortSpanSeasonal,
    LongSpanKurtosis,
    ShortSpanKurtosis,
    LongSpanKlPt,
    PredictionSse,
    BurstLength,
    TScope,
    BurstWeight,
    TLevel,
    NoOfBursts,
    AvgFreq,
    IsPer,
    MaxFreq,
    IsLoc,
    CeLong,
    IsOrg,
    CeShort,
    IsTempEx,
    CePer,
    NoOfQueries,
    SumCFreq,
    BurstDistM,
    AvgCFreq,
    BurstDistL,
    MaxCFreq,
}

impl Feature {
    pub fn name(self) -> &'static str {
        FEATURE_NAMES[self as usize]
    }

    pub const FLAGS: [Feature; 4] = [Feature::IsPer, Feature::IsLoc, Feature::IsOrg, Feature::IsTempEx];

    pub const NON_NEGATIVE: [Feature; 11] = [
        Feature::CeLong,
        Feature::CeShort,
        Feature::NoOfBursts,
        Feature::AvgFreq,
        Feature::MaxFreq,
        Feature::NoOfQueries,
        Feature::SumCFreq,
        Feature::AvgCFreq,
        Feature::MaxCFreq,
        Feature::BurstLength,
        Feature::BurstWeight,
    ];
}

/// The 28 features of one query instance, in [`FEATURE_NAMES`] order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureVector([f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn from_values(values: [f64; FEATURE_COUNT]) -> Self {
        FeatureVector(values)
    }

    pub fn zeros() -> Self {
        FeatureVector([0.0; FEATURE_COUNT])
    }

    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.0
    }

    pub fn get(&self, f: Feature) -> f64 {
        self.0[f as usize]
    }

    pub fn set(&mut self, f: Feature, v: f64) {
        self.0[f as usize] = v;
    }

    /// Invariant violations, each naming the offending feature.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in FEATURE_NAMES.iter().zip(self.0) {
            if !v.is_finite() {
                out.push(format!("{name} is not finite"));
            }
        }
        for f in Feature::FLAGS {
            let v = self.get(f);
            if v != 0.0 && v != 1.0 {
                out.push(format!("{} is not a 0/1 flag", f.name()));
            }
        }
        for f in Feature::NON_NEGATIVE {
            if self.get(f) < 0.0 {
                out.push(format!("{} is negative", f.name()));
            }
        }
        out
    }
}

impl std::ops::Index<Feature> for FeatureVector {
    type Output = f64;

    fn index(&self, f: Feature) -> &f64 {
        &self.0[f as usize]
    }
}

/// Per-feature mean and standard deviation used for z-scoring.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStats {
    pub mean: [f64; FEATURE_COUNT],
    pub std: [f64; FEATURE_COUNT],
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct LabeledDataset {
    pub instances: Vec<(FeatureVector, EventClass)>,
    pub feature_stats: Option<FeatureStats>,
    pub provenance: String,
}

const DATASET_HEADER: &str = "#smlp-dataset v1 d=28";

impl LabeledDataset {
    pub fn new(instances: Vec<(FeatureVector, EventClass)>, provenance: impl Into<String>) -> Self {
        LabeledDataset {
            instances,
            feature_stats: None,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels(&self) -> Vec<EventClass> {
        self.instances.iter().map(|(_, y)| *y).collect()
    }

    pub fn class_counts(&self) -> [usize; EventClass::COUNT] {
        let mut counts = [0; EventClass::COUNT];
        for (_, y) in &self.instances {
            counts[y.index()] += 1;
        }
        counts
    }

    /// Subset in the order of `indices`; feature stats and provenance carry over.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            instances: indices.iter().map(|&i| self.instances[i]).collect(),
            feature_stats: self.feature_stats.clone(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<dataset>", e);
        writeln!(w, "{DATASET_HEADER}").map_err(io)?;
        if !self.provenance.is_empty() {
            writeln!(w, "#provenance {}", self.provenance.replace('\n', " ")).map_err(io)?;
        }
        if let Some(stats) = &self.feature_stats {
            writeln!(w, "#mean {}", join_reals(&stats.mean)).map_err(io)?;
            writeln!(w, "#std {}", join_reals(&stats.std)).map_err(io)?;
        }
        for (x, y) in &self.instances {
            writeln!(w, "{}\t{}", y.code(), join_reals(x.values())).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        match lines.next() {
            Some((_, Ok(h))) if h.trim_end() == DATASET_HEADER => {}
            Some((_, Err(e))) => return Err(Error::io("<dataset>", e)),
            _ => return Err(Error::data(format!("dataset file must start with '{DATASET_HEADER}'"))),
        }
        let mut ds = LabeledDataset::default();
        let mut mean = None;
        let mut std = None;
        for (lineno, line) in lines {
            let line = line.map_err(|e| Error::io("<dataset>", e))?;
            let lineno = lineno + 1;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#provenance ") {
                ds.provenance = rest.to_string();
            } else if let Some(rest) = line.strip_prefix("#mean ") {
                mean = Some(parse_reals(rest, lineno)?);
            } else if let Some(rest) = line.strip_prefix("#std ") {
                std = Some(parse_reals(rest, lineno)?);
            } else if line.starts_with('#') {
                continue;
            } else {
                let (label, rest) = line
                    .split_once('\t')
                    .ok_or_else(|| Error::data(format!("line {lineno}: expected '<label>\\t<features>'")))?;
                let code: u8 = label
                    .parse()
                    .map_err(|_| Error::data(format!("line {lineno}: bad label '{label}'")))?;
                let class = EventClass::from_code(code)
                    .ok_or_else(|| Error::data(format!("line {lineno}: label {code} outside 0..=5")))?;
                ds.instances
                    .push((FeatureVector(parse_reals(rest, lineno)?), class));
            }
        }
        ds.feature_stats = match (mean, std) {
            (Some(mean), Some(std)) => {
                if std.iter().any(|s| !(*s > 0.0)) {
                    return Err(Error::data("#std line contains a non-positive deviation"));
                }
                Some(FeatureStats { mean, std })
            }
            (None, None) => None,
            _ => return Err(Error::data("#mean and #std must appear together")),
        };
        Ok(ds)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file)).map_err(|e| relabel_io(e, path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file)).map_err(|e| relabel_io(e, path))
    }
}

fn relabel_io(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

/// Space-separated reals in shortest round-trip form.
pub(crate) fn join_reals(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_reals(s: &str, lineno: usize) -> Result<[f64; FEATURE_COUNT]> {
    let mut out = [0.0; FEATURE_COUNT];
    let mut n = 0;
    for tok in s.split(' ') {
        if n == FEATURE_COUNT {
            return Err(Error::data(format!("line {lineno}: more than {FEATURE_COUNT} values")));
        }
        let v: f64 = tok
            .parse()
            .map_err(|_| Error::data(format!("line {lineno}: bad real '{tok}'")))?;
        if !v.is_finite() {
            return Err(Error::data(format!("line {lineno}: non-finite value '{tok}'")));
        }
        out[n] = v;
        n += 1;
    }
    if n != FEATURE_COUNT {
        return Err(Error::data(format!("line {lineno}: expected {FEATURE_COUNT} values, found {n}")));
    }
    Ok(out)
}

/// Serialize `ds` to the dataset text format and parse it back.
pub fn roundtrip_dataset(ds: &LabeledDataset) -> Result<LabeledDataset> {
    let mut buf = Vec::new();
    ds.write_to(&mut buf)?;
    LabeledDataset::read_from(buf.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    pub(crate) fn sample_instance() -> QueryInstance {
        QueryInstance {
            query: "zika outbreak".into(),
            event_date: d(2006, 3, 10),
            hitting_time: d(2006, 3, 15),
            short_series: TimeSeries::daily(d(2006, 3, 1), vec![1; 30]).unwrap(),
            long_series: TimeSeries::monthly(d(2000, 1, 1), vec![2; 24]).unwrap(),
            background_long_series: TimeSeries::monthly(d(2000, 1, 1), vec![50; 24]).unwrap(),
            clicks: vec![ClickRecord::new(d(2006, 3, 14), "http://CDC.gov/", "zika outbreak").unwrap()],
            cluster: vec![ClusterMember {
                query: "zika outbreak".into(),
                frequency: 30,
            }],
        }
    }

    #[test]
    fn class_codes_are_a_bijection() {
        for (i, c) in EventClass::ALL.into_iter().enumerate() {
            assert_eq!(c.code() as usize, i);
            assert_eq!(EventClass::from_code(c.code()), Some(c));
            assert_eq!(c.name().parse::<EventClass>().unwrap(), c);
        }
        assert_eq!(EventClass::from_code(6), None);
    }

    #[test]
    fn well_formed_instance_has_no_violations() {
        assert!(validate_instance(&sample_instance()).is_empty());
    }

    #[test]
    fn hitting_time_before_epoch_is_flagged() {
        let mut inst = sample_instance();
        inst.hitting_time = d(2006, 2, 28);
        let v: Vec<String> = validate_instance(&inst).iter().map(|v| v.to_string()).collect();
        assert_eq!(v, vec!["hitting_time outside short_series"]);
    }

    #[test]
    fn empty_cluster_is_flagged() {
        let mut inst = sample_instance();
        inst.cluster.clear();
        let v: Vec<String> = validate_instance(&inst).iter().map(|v| v.to_string()).collect();
        assert_eq!(v, vec!["cluster missing self"]);
    }

    #[test]
    fn normalization_helpers() {
        assert_eq!(normalize_query("  April   FOOLS\tDay "), "april fools day");
        assert_eq!(normalize_url("HTTPS://www.CDC.gov//"), "www.cdc.gov");
        assert!(ClickRecord::new(d(2006, 1, 1), "http:///", "q").is_err());
    }

    #[test]
    fn series_indexing() {
        let daily = TimeSeries::daily(d(2006, 3, 1), vec![0; 92]).unwrap();
        assert_eq!(daily.index_of(d(2006, 5, 31)), Some(91));
        assert_eq!(daily.index_of(d(2006, 6, 1)), None);
        let monthly = TimeSeries::monthly(d(1987, 1, 15), vec![0; 246]).unwrap();
        assert_eq!(monthly.epoch(), d(1987, 1, 1));
        assert_eq!(monthly.last_date(), d(2007, 6, 1));
        assert_eq!(monthly.index_of(d(1999, 7, 20)), Some(150));
        assert!(TimeSeries::daily(d(2006, 1, 1), vec![]).is_err());
        assert!(TimeSeries::new(d(2006, 1, 2), Granularity::Monthly, vec![1]).is_err());
    }

    #[test]
    fn empty_dataset_roundtrips() {
        let ds = LabeledDataset::default();
        assert_eq!(roundtrip_dataset(&ds).unwrap(), ds);
    }

    #[test]
    fn zero_vector_dataset_roundtrips() {
        let ds = LabeledDataset::new(vec![(FeatureVector::zeros(), EventClass::Meme)], "unit");
        assert_eq!(roundtrip_dataset(&ds).unwrap(), ds);
    }

    #[test]
    fn stats_lines_roundtrip_and_reject_bad_std() {
        let mut ds = LabeledDataset::new(vec![(FeatureVector::zeros(), EventClass::Breaking)], "");
        ds.feature_stats = Some(FeatureStats {
            mean: [0.1; FEATURE_COUNT],
            std: [3.5e-7; FEATURE_COUNT],
        });
        assert_eq!(roundtrip_dataset(&ds).unwrap(), ds);

        let text = format!("{DATASET_HEADER}\n#mean {}\n#std {}\n", join_reals(&[0.0; 28]), join_reals(&[0.0; 28]));
        assert!(LabeledDataset::read_from(text.as_bytes()).is_err());
    }

    #[test]
    fn malformed_records_are_rejected() {
        let bad_header = "#smlp-dataset v2 d=28\n";
        assert!(LabeledDataset::read_from(bad_header.as_bytes()).is_err());
        let short = format!("{DATASET_HEADER}\n0\t1 2 3\n");
        assert!(LabeledDataset::read_from(short.as_bytes()).is_err());
        let bad_label = format!("{DATASET_HEADER}\n7\t{}\n", join_reals(&[0.0; 28]));
        assert!(LabeledDataset::read_from(bad_label.as_bytes()).is_err());
        let nan = format!("{DATASET_HEADER}\n0\tNaN{}\n", " 0.0".repeat(27));
        assert!(LabeledDataset::read_from(nan.as_bytes()).is_err());
    }

    #[test]
    fn feature_vector_violations() {
        let mut v = FeatureVector::zeros();
        assert!(v.violations().is_empty());
        v.set(Feature::IsPer, 0.5);
        v.set(Feature::CeLong, -1.0);
        v.set(Feature::TLevel, f64::NAN);
        let msgs = v.violations();
        assert_eq!(msgs.len(), 3, "{msgs:?}");
        assert_eq!(Feature::MaxCFreq.name(), "maxCFreq");
        assert_eq!(Feature::BurstDistM as usize, 24);
    }
}
