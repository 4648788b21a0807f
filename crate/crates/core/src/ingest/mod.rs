//! Raw-data ingestion: AOL-format query logs, dated document collections,
//! event mappings, and the synthetic generator.

pub mod synthetic;

pub use synthetic::{generate_synthetic, SyntheticSpec};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::path::Path;

use chrono::{Days, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::datamodel::{
    month_start, months_between, normalize_query, normalize_url, ClickRecord, ClusterMember, EventClass,
    QueryInstance, TimeSeries,
};
use crate::error::{Error, Result};

pub const QUERY_LOG_COLUMNS: [&str; 5] = ["AnonID", "Query", "QueryTime", "ItemRank", "ClickURL"];

const QUERY_TIME_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

/// One row of an AOL-style query log.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogRecord {
    pub anon_id: String,
    pub query: String,
    pub query_time: NaiveDateTime,
    pub item_rank: Option<u32>,
    pub click_url: Option<String>,
}

impl LogRecord {
    pub fn date(&self) -> NaiveDate {
        self.query_time.date()
    }

    fn parse(line: &str) -> Option<LogRecord> {
        let fields: Vec<&str> = line.split('\t').collect();
        if !(3..=5).contains(&fields.len()) {
            return None;
        }
        let query = normalize_query(fields[1]);
        if query.is_empty() {
            return None;
        }
        let query_time = NaiveDateTime::parse_from_str(fields[2].trim(), QUERY_TIME_FORMAT).ok()?;
        let item_rank = match fields.get(3).map(|s| s.trim()) {
            None | Some("") => None,
            Some(r) => Some(r.parse().ok()?),
        };
        let click_url = match fields.get(4).map(|s| normalize_url(s)) {
            None => None,
            Some(u) if u.is_empty() => None,
            Some(u) => Some(u),
        };
        if click_url.is_some() && item_rank.is_none() {
            return None;
        }
        Some(LogRecord {
            anon_id: fields[0].trim().to_string(),
            query,
            query_time,
            item_rank,
            click_url,
        })
    }
}

/// Streaming reader over a query log; malformed lines are skipped and counted.
pub struct QueryLogReader<R> {
    lines: Lines<R>,
    skipped: usize,
}

impl<R: BufRead> QueryLogReader<R> {
    /// Check the header line and position the reader at the first record.
    pub fn new(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(Ok(h)) => h,
            Some(Err(e)) => return Err(Error::io("<query log>", e)),
            None => String::new(),
        };
        let cols: Vec<&str> = header.trim_end_matches(['\r', '\n']).split('\t').map(str::trim).collect();
        if cols != QUERY_LOG_COLUMNS {
            return Err(Error::data(format!(
                "query log header must be the tab-separated columns {}",
                QUERY_LOG_COLUMNS.join(" ")
            )));
        }
        Ok(QueryLogReader { lines, skipped: 0 })
    }

    /// Malformed lines seen so far.
    pub fn skipped(&self) -> usize {
        self.skipped
    }
}

impl<R: BufRead> Iterator for QueryLogReader<R> {
    type Item = LogRecord;

    fn next(&mut self) -> Option<LogRecord> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(_) => {
                    self.skipped += 1;
                    continue;
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            match LogRecord::parse(line.trim_end_matches('\r')) {
                Some(r) => return Some(r),
                None => self.skipped += 1,
            }
        }
    }
}

pub fn open_query_log(path: impl AsRef<Path>) -> Result<QueryLogReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    QueryLogReader::new(BufReader::new(file)).map_err(|e| match e {
        Error::Data(msg) => Error::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Records in file order plus the number of malformed lines skipped.
pub fn parse_query_log(path: impl AsRef<Path>) -> Result<(Vec<LogRecord>, usize)> {
    let mut reader = open_query_log(path)?;
    let records: Vec<LogRecord> = reader.by_ref().collect();
    Ok((records, reader.skipped()))
}

/// Daily counts of records for `query` between `span_start` and `span_end` inclusive.
pub fn build_short_series<'a>(
    records: impl IntoIterator<Item = &'a LogRecord>,
    query: &str,
    span_start: NaiveDate,
    span_end: NaiveDate,
) -> Result<TimeSeries> {
    if span_start > span_end {
        return Err(Error::data(format!("empty span {span_start}..{span_end}")));
    }
    let query = normalize_query(query);
    let len = (span_end - span_start).num_days() as usize + 1;
    let mut counts = vec![0u64; len];
    for r in records {
        let day = r.date();
        if r.query == query && day >= span_start && day <= span_end {
            counts[(day - span_start).num_days() as usize] += 1;
        }
    }
    TimeSeries::daily(span_start, counts)
}

/// A dated document from a temporal collection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub date: NaiveDate,
    pub text: String,
}

/// Decides whether a document is relevant to a query.
pub trait DocumentMatcher {
    fn matches(&self, query: &str, text: &str) -> bool;
}

/// Matches when every query token occurs as a token of the document.
#[derive(Clone, Copy, Debug, Default)]
pub struct AllTokensMatcher;

impl DocumentMatcher for AllTokensMatcher {
    fn matches(&self, query: &str, text: &str) -> bool {
        let doc: BTreeSet<String> = text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .collect();
        let mut tokens = query.split_whitespace().peekable();
        tokens.peek().is_some() && tokens.all(|t| doc.contains(t))
    }
}

/// Read a `YYYY-MM-DD<TAB>text` document index; `#` lines are comments.
pub fn read_document_index(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (date, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::data(format!("{}:{}: expected 'date<TAB>text'", path.display(), i + 1)))?;
        let date = NaiveDate::parse_from_str(date.trim(), "%Y-%m-%d")
            .map_err(|_| Error::data(format!("{}:{}: bad date '{date}'", path.display(), i + 1)))?;
        docs.push(Document {
            date,
            text: text.to_string(),
        });
    }
    Ok(docs)
}

/// Pair each document date with the matcher's verdict for `query`.
pub fn match_documents(docs: &[Document], query: &str, matcher: &dyn DocumentMatcher) -> Vec<(NaiveDate, bool)> {
    docs.iter().map(|d| (d.date, matcher.matches(query, &d.text))).collect()
}

/// Monthly counts of matching documents over the collection's own span.
pub fn build_long_series(doc_dates: &[(NaiveDate, bool)]) -> Result<TimeSeries> {
    let first = doc_dates.iter().map(|(d, _)| *d).min();
    let last = doc_dates.iter().map(|(d, _)| *d).max();
    match (first, last) {
        (Some(a), Some(b)) => build_long_series_over(doc_dates, a, b),
        _ => Err(Error::data("empty document collection")),
    }
}

/// Monthly counts of matching documents between the months of `start` and `end`.
pub fn build_long_series_over(doc_dates: &[(NaiveDate, bool)], start: NaiveDate, end: NaiveDate) -> Result<TimeSeries> {
    if doc_dates.is_empty() {
        return Err(Error::data("empty document collection"));
    }
    let start = month_start(start);
    let len = months_between(start, end);
    if len < 0 {
        return Err(Error::data(format!("empty month span {start}..{end}")));
    }
    let mut counts = vec![0u64; len as usize + 1];
    for (date, matched) in doc_dates {
        let idx = months_between(start, *date);
        if *matched && idx >= 0 && (idx as usize) < counts.len() {
            counts[idx as usize] += 1;
        }
    }
    TimeSeries::monthly(start, counts)
}

/// Dates every 14 days from `range_start` up to and including `range_end`.
pub fn simulate_hitting_times(range_start: NaiveDate, range_end: NaiveDate) -> Vec<NaiveDate> {
    let mut out = Vec::new();
    let mut d = range_start;
    while d <= range_end {
        out.push(d);
        match d.checked_add_days(Days::new(14)) {
            Some(next) => d = next,
            None => break,
        }
    }
    out
}

/// One labeled (query, event date, hitting time) triple for real logs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventMapping {
    pub query: String,
    pub event_date: NaiveDate,
    pub hitting_time: NaiveDate,
    pub label: Option<EventClass>,
}

/// Read `query<TAB>event_date<TAB>hitting_time[<TAB>label]` lines.
/// A hitting time of `*` expands to every simulated hitting time within the
/// log span given by `log_span`.
pub fn read_event_mappings(path: impl AsRef<Path>, log_span: (NaiveDate, NaiveDate)) -> Result<Vec<EventMapping>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::data(format!("{}:{}: {what}", path.display(), i + 1));
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        if !(3..=4).contains(&f.len()) {
            return Err(bad("expected query, event_date, hitting_time and optional label"));
        }
        let date = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| bad(&format!("bad date '{s}'")));
        let event_date = date(f[1])?;
        let label = match f.get(3) {
            Some(l) if !l.is_empty() => Some(l.parse::<EventClass>().map_err(|e| bad(&e.to_string()))?),
            _ => None,
        };
        let hits = if f[2] == "*" {
            simulate_hitting_times(log_span.0, log_span.1)
        } else {
            vec![date(f[2])?]
        };
        for hitting_time in hits {
            out.push(EventMapping {
                query: normalize_query(f[0]),
                event_date,
                hitting_time,
                label,
            });
        }
    }
    Ok(out)
}

/// Build one instance per mapping from a parsed log and a document collection.
///
/// The short series spans the log's first to last day; long and background
/// series span the collection's months. A query's cluster is every query
/// that shares at least one clicked URL with it, weighted by total log
/// frequency.
pub fn assemble_instances(
    records: &[LogRecord],
    docs: &[Document],
    mappings: &[EventMapping],
    matcher: &dyn DocumentMatcher,
) -> Result<Vec<(QueryInstance, Option<EventClass>)>> {
    let log_start = records.iter().map(LogRecord::date).min().ok_or_else(|| Error::data("empty query log"))?;
    let log_end = records.iter().map(LogRecord::date).max().expect("non-empty");
    let doc_start = docs.iter().map(|d| d.date).min().ok_or_else(|| Error::data("empty document collection"))?;
    let doc_end = docs.iter().map(|d| d.date).max().expect("non-empty");

    let all_docs: Vec<(NaiveDate, bool)> = docs.iter().map(|d| (d.date, true)).collect();
    let background = build_long_series_over(&all_docs, doc_start, doc_end)?;

    let mut frequency: HashMap<&str, u64> = HashMap::new();
    let mut urls_by_query: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    let mut queries_by_url: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    for r in records {
        *frequency.entry(r.query.as_str()).or_default() += 1;
        if let Some(u) = &r.click_url {
            urls_by_query.entry(&r.query).or_default().insert(u);
            queries_by_url.entry(u).or_default().insert(&r.query);
        }
    }

    let mut out = Vec::with_capacity(mappings.len());
    for m in mappings {
        let q = m.query.as_str();
        let short = build_short_series(records, q, log_start, log_end)?;
        let long = build_long_series_over(&match_documents(docs, q, matcher), doc_start, doc_end)?;
        let clicks = records
            .iter()
            .filter(|r| r.query == q)
            .filter_map(|r| r.click_url.as_ref().map(|u| ClickRecord::new(r.date(), u, q)))
            .collect::<Result<Vec<_>>>()?;
        let mut members: BTreeMap<&str, u64> = BTreeMap::new();
        members.insert(q, frequency.get(q).copied().unwrap_or(0));
        for url in urls_by_query.get(q).into_iter().flatten() {
            for other in &queries_by_url[url] {
                members.insert(other, frequency[other]);
            }
        }
        let cluster = members
            .into_iter()
            .map(|(query, frequency)| ClusterMember {
                query: query.to_string(),
                frequency,
            })
            .collect();
        out.push((
            QueryInstance {
                query: q.to_string(),
                event_date: m.event_date,
                hitting_time: m.hitting_time,
                short_series: short,
                long_series: long,
                background_long_series: background.clone(),
                clicks,
                cluster,
            },
            m.label,
        ));
    }
    Ok(out)
}

/// One line of a raw-instance file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<EventClass>,
    pub instance: QueryInstance,
}

/// Write instances as JSON lines.
pub fn write_instances<W: Write>(w: W, instances: &[(QueryInstance, Option<EventClass>)]) -> Result<()> {
    let mut w = BufWriter::new(w);
    for (instance, label) in instances {
        let rec = InstanceRecord {
            label: *label,
            instance: instance.clone(),
        };
        serde_json::to_writer(&mut w, &rec).map_err(|e| Error::data(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io("<instances>", e))?;
    }
    w.flush().map_err(|e| Error::io("<instances>", e))
}

pub fn read_instances<R: BufRead>(r: R) -> Result<Vec<(QueryInstance, Option<EventClass>)>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<instances>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: InstanceRecord =
            serde_json::from_str(&line).map_err(|e| Error::data(format!("instance line {}: {e}", i + 1)))?;
        out.push((rec.instance, rec.label));
    }
    Ok(out)
}

pub fn save_instances(path: impl AsRef<Path>, instances: &[(QueryInstance, Option<EventClass>)]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_instances(file, instances)
}

pub fn load_instances(path: impl AsRef<Path>) -> Result<Vec<(QueryInstance, Option<EventClass>)>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_instances(BufReader::new(file))
}
