//! Labeled synthetic query instances with class-characteristic signals.
//!
//! Every instance gets a daily query-log series, a monthly document series
//! aligned with a shared background collection, click records in the two
//! weeks before the hitting time, and a cluster of related queries. Shapes:
//!
//! | class         | short span                                  | long span                         |
//! |---------------|---------------------------------------------|-----------------------------------|
//! | anticipated   | ramp over [`RAMP_DAYS`] up to a later event | build-up before the event month   |
//! | breaking      | 1 to [`SPIKE_MAX_WIDTH`] day spike at the hit | one spike at the event month    |
//! | commemorative | short bump near an anniversary              | yearly peaks since an origin year |
//! | meme          | 2-day rise, decay with [`MEME_HALF_LIFE`]   | flat                              |
//! | ongoing       | plateau of at least [`PLATEAU_MIN_DAYS`]    | elevated for months               |
//! | atemporal     | stationary with weekly modulation           | proportional to background        |
//!
//! Gaussian noise with standard deviation `sigma * sqrt(max(rate, 1))` is
//! added to every bucket, then clipped at zero and rounded.

use std::collections::BTreeSet;

use chrono::{Days, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::config::KvConfig;
use crate::datamodel::{
    month_start, months_between, ClickRecord, ClusterMember, EventClass, QueryInstance, TimeSeries,
};
use crate::error::{Error, Result};
use crate::features::Gazetteer;

pub const RAMP_DAYS: usize = 14;
pub const SPIKE_MAX_WIDTH: usize = 2;
pub const PLATEAU_MIN_DAYS: usize = 21;
pub const MEME_HALF_LIFE: f64 = 3.0;
pub const HIT_STEP_DAYS: usize = 14;
pub const BACKGROUND_DOCS_PER_MONTH: f64 = 7000.0;
/// Days before the hitting time (inclusive) that receive clicks.
pub const CLICK_WINDOW_DAYS: usize = 14;

pub const DEFAULT_COUNTS: [usize; EventClass::COUNT] = [988, 531, 304, 315, 2520, 5712];

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    /// Instances per class, indexed by class code.
    pub counts: [usize; EventClass::COUNT],
    pub short_len: usize,
    pub long_len: usize,
    pub short_epoch: NaiveDate,
    pub long_epoch: NaiveDate,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            counts: DEFAULT_COUNTS,
            short_len: 92,
            long_len: 246,
            short_epoch: NaiveDate::from_ymd_opt(2006, 3, 1).expect("valid date"),
            long_epoch: NaiveDate::from_ymd_opt(1987, 1, 1).expect("valid date"),
            sigma: 1.0,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    pub fn with_seed(seed: u64) -> Self {
        SyntheticSpec {
            seed,
            ..Self::default()
        }
    }

    /// Same class proportions as the default, scaled to roughly `total` instances.
    pub fn scaled(total: usize, seed: u64) -> Self {
        let full: usize = DEFAULT_COUNTS.iter().sum();
        let mut counts = [0; EventClass::COUNT];
        for (c, d) in counts.iter_mut().zip(DEFAULT_COUNTS) {
            *c = ((d * total) as f64 / full as f64).round().max(1.0) as usize;
        }
        SyntheticSpec {
            counts,
            seed,
            ..Self::default()
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.short_len < 8 || self.long_len < 8 {
            return Err(Error::config("series lengths must be at least 8"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("noise.sigma must be a finite value >= 0"));
        }
        Ok(())
    }

    /// Overlay keys `counts.<class>`, `length.short`, `length.long`,
    /// `epoch.short`, `epoch.long`, `noise.sigma` and `seed` from `cfg`.
    pub fn from_config(cfg: &mut KvConfig) -> Result<Self> {
        let mut spec = Self::default();
        for class in EventClass::ALL {
            cfg.take_into(&format!("counts.{}", class.name()), &mut spec.counts[class.index()])?;
        }
        cfg.take_into("length.short", &mut spec.short_len)?;
        cfg.take_into("length.long", &mut spec.long_len)?;
        cfg.take_into("epoch.short", &mut spec.short_epoch)?;
        cfg.take_into("epoch.long", &mut spec.long_epoch)?;
        spec.long_epoch = month_start(spec.long_epoch);
        cfg.take_into("noise.sigma", &mut spec.sigma)?;
        cfg.take_into("seed", &mut spec.seed)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Short-series indices usable as hitting times.
    pub fn hit_indices(&self) -> Vec<usize> {
        let hits: Vec<usize> = (HIT_STEP_DAYS..self.short_len).step_by(HIT_STEP_DAYS).collect();
        if hits.is_empty() {
            vec![self.short_len - 1]
        } else {
            hits
        }
    }
}

const FILLER: [&str; 32] = [
    "news", "pictures", "video", "results", "lyrics", "tickets", "history", "facts", "game", "movie", "song",
    "schedule", "photos", "live", "update", "story", "review", "guide", "online", "free", "map", "weather",
    "price", "score", "report", "coverage", "highlights", "info", "official", "forum", "images", "stats",
];

const TEMPORAL_TERMS: [&str; 10] = [
    "2006", "april", "june", "anniversary", "today", "tonight", "friday", "1999", "march", "sunday",
];

/// Class-specific probabilities of query terms: person, location, organization, temporal.
fn term_probabilities(class: EventClass) -> [f64; 4] {
    match class {
        EventClass::Anticipated => [0.25, 0.3, 0.45, 0.4],
        EventClass::Breaking => [0.4, 0.55, 0.3, 0.1],
        EventClass::Commemorative => [0.45, 0.3, 0.1, 0.5],
        EventClass::Meme => [0.55, 0.1, 0.2, 0.05],
        EventClass::Ongoing => [0.3, 0.5, 0.4, 0.15],
        EventClass::Atemporal => [0.2, 0.25, 0.3, 0.08],
    }
}

/// Mean number of related queries besides the query itself.
fn cluster_mean(class: EventClass) -> f64 {
    match class {
        EventClass::Anticipated => 5.0,
        EventClass::Breaking => 8.0,
        EventClass::Commemorative => 4.0,
        EventClass::Meme => 10.0,
        EventClass::Ongoing => 5.0,
        EventClass::Atemporal => 2.0,
    }
}

/// Number of distinct news sources a query can reach at peak activity.
fn news_diversity(class: EventClass) -> f64 {
    match class {
        EventClass::Anticipated => 8.0,
        EventClass::Breaking => 20.0,
        EventClass::Commemorative => 6.0,
        EventClass::Meme => 16.0,
        EventClass::Ongoing => 10.0,
        EventClass::Atemporal => 1.0,
    }
}

/// Variants of the atemporal class: plain, slowly drifting, with bursts
/// long before the hitting time, or yearly periodic in the document
/// collection without current activity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum AtemporalKind {
    Stationary,
    Drifting,
    Spiky,
    DormantPeriodic,
}

impl AtemporalKind {
    const ALL: [AtemporalKind; 4] = [
        AtemporalKind::Stationary,
        AtemporalKind::Drifting,
        AtemporalKind::Spiky,
        AtemporalKind::DormantPeriodic,
    ];
}

/// Daily and monthly expected counts plus the event position.
struct Shape {
    short: Vec<f64>,
    long: Vec<f64>,
    /// Event offset in days from the short-series epoch (may fall outside it).
    event_day: i64,
    base: f64,
}

struct Generator<'a> {
    spec: &'a SyntheticSpec,
    rng: ChaCha8Rng,
    gz: Gazetteer,
    background: Vec<f64>,
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

impl<'a> Generator<'a> {
    fn new(spec: &'a SyntheticSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let background = (0..spec.long_len)
            .map(|m| {
                let season = 1.0 + 0.05 * (std::f64::consts::TAU * m as f64 / 12.0).sin();
                let growth = 1.0 + 0.002 * m as f64;
                BACKGROUND_DOCS_PER_MONTH * season * growth + rng.gen_range(-100.0..100.0)
            })
            .collect();
        Generator {
            spec,
            rng,
            gz: Gazetteer::builtin(),
            background,
        }
    }

    fn noisy(&mut self, rate: f64) -> u64 {
        let sd = self.spec.sigma * rate.max(1.0).sqrt();
        let v = if sd > 0.0 {
            rate + Normal::new(0.0, sd).expect("finite sd").sample(&mut self.rng)
        } else {
            rate
        };
        v.max(0.0).round() as u64
    }

    fn event_month(&self, event_day: i64) -> i64 {
        let date = self
            .spec
            .short_epoch
            .checked_add_signed(chrono::Duration::days(event_day))
            .unwrap_or(self.spec.short_epoch);
        months_between(self.spec.long_epoch, date).clamp(0, self.spec.long_len as i64 - 1)
    }

    fn shape(&mut self, class: EventClass, hit: usize) -> Shape {
        let n = self.spec.short_len;
        let l = self.spec.long_len;
        let rng = &mut self.rng;
        let base = log_uniform(rng, 0.5, 40.0);
        let share = log_uniform(rng, 1e-4, 5e-3);
        let mut long: Vec<f64> = self.background.iter().map(|b| b * share).collect();
        let mut short = vec![base; n];
        let h = hit as i64;
        // weak instances keep a fraction of their class signal
        let strength = rng.gen_range(0.0f64..1.0).powi(2);
        let kind = (class == EventClass::Atemporal).then(|| AtemporalKind::ALL[rng.gen_range(0..4)]);

        let event_day = match class {
            EventClass::Anticipated => {
                let e = h + rng.gen_range(1..=2 * RAMP_DAYS as i64);
                let amp = 1.0 + 9.0 * strength;
                for (t, v) in short.iter_mut().enumerate() {
                    let d = e - t as i64;
                    let r = if d >= 0 {
                        (1.0 - d as f64 / RAMP_DAYS as f64).max(0.0)
                    } else {
                        (-(-d as f64) / 2.0).exp()
                    };
                    *v = base * (1.0 + amp * r);
                }
                e
            }
            EventClass::Breaking => {
                let e = h - rng.gen_range(0..SPIKE_MAX_WIDTH as i64);
                let width = rng.gen_range(1..=SPIKE_MAX_WIDTH) as i64;
                let amp = 3.0 + 30.0 * strength;
                let low = base * 0.3;
                for (t, v) in short.iter_mut().enumerate() {
                    let d = t as i64 - e;
                    let r = if (0..width).contains(&d) {
                        1.0
                    } else if d >= width {
                        0.5f64.powf((d - width + 1) as f64)
                    } else {
                        0.0
                    };
                    *v = low * (1.0 + amp * r);
                }
                e
            }
            EventClass::Commemorative => {
                let e = h + rng.gen_range(-7..=7);
                let amp = 1.0 + 5.0 * strength;
                for (t, v) in short.iter_mut().enumerate() {
                    let d = (t as i64 - e) as f64;
                    let r = if d <= 0.0 { (1.0 + d / 7.0).max(0.0) } else { (-d / 2.0).exp() };
                    *v = base * (1.0 + amp * r);
                }
                e
            }
            EventClass::Meme => {
                let e = h - rng.gen_range(0..=6);
                let amp = 3.0 + 15.0 * strength;
                for (t, v) in short.iter_mut().enumerate() {
                    let d = (t as i64 - e) as f64;
                    let r = if d < 0.0 {
                        0.0
                    } else if d < 2.0 {
                        (d + 1.0) / 2.0
                    } else {
                        0.5f64.powf((d - 1.0) / MEME_HALF_LIFE)
                    };
                    *v = base * (1.0 + amp * r);
                }
                e
            }
            EventClass::Ongoing => {
                let start = h - rng.gen_range(7..=30);
                let end = start + rng.gen_range(PLATEAU_MIN_DAYS as i64..=60).max(h - start + 1);
                let amp = 0.5 + 3.5 * strength;
                for (t, v) in short.iter_mut().enumerate() {
                    let t = t as i64;
                    let r = if t < start {
                        0.0
                    } else if t <= end {
                        ((t - start + 1) as f64 / 5.0).min(1.0)
                    } else {
                        (-((t - end) as f64) / 4.0).exp()
                    };
                    *v = base * (1.0 + amp * r);
                }
                start
            }
            EventClass::Atemporal => {
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                let weekly = rng.gen_range(0.05..0.4);
                let drift = if kind == Some(AtemporalKind::Drifting) {
                    rng.gen_range(-0.6..1.0)
                } else {
                    0.0
                };
                for (t, v) in short.iter_mut().enumerate() {
                    let trend = 1.0 + drift * t as f64 / n as f64;
                    *v = base * trend * (1.0 + weekly * (std::f64::consts::TAU * t as f64 / 7.0 + phase).sin());
                }
                if kind == Some(AtemporalKind::Spiky) && h > 10 {
                    for _ in 0..rng.gen_range(1..=3) {
                        let at = rng.gen_range(0..h as usize - 9);
                        let amp = rng.gen_range(2.0..20.0);
                        for (d, v) in short.iter_mut().skip(at).take(4).enumerate() {
                            *v += base * amp * 0.5f64.powi(d as i32);
                        }
                    }
                }
                h
            }
        };

        let em = self.event_month(event_day) as usize;
        let rng = &mut self.rng;
        let level = long.iter().sum::<f64>() / l as f64;
        match class {
            EventClass::Anticipated => {
                let lead = rng.gen_range(2..=6);
                let amp = 2.0 + 8.0 * strength;
                for m in em.saturating_sub(lead)..=em {
                    let r = 1.0 - (em - m) as f64 / (lead + 1) as f64;
                    long[m] += level * amp * r;
                }
                // recurring events leave smaller earlier build-ups
                if rng.gen_bool(0.5) {
                    let period = [12, 24, 48][rng.gen_range(0..3)];
                    let mut m = em as i64 - period;
                    while m >= 0 {
                        long[m as usize] += level * amp * 0.4;
                        m -= period;
                    }
                }
            }
            EventClass::Breaking => {
                long[em] += level * (5.0 + 40.0 * strength);
                if em + 1 < l {
                    long[em + 1] += level * (1.0 + 8.0 * strength);
                }
                for v in long.iter_mut().take(em) {
                    *v *= 0.3;
                }
            }
            EventClass::Commemorative => {
                let origin_year = rng.gen_range(1987..=2004);
                let origin = NaiveDate::from_ymd_opt(origin_year, 1, 1).expect("valid year");
                let first = (months_between(self.spec.long_epoch, origin) + (em as i64 % 12)).max(0) as usize;
                let amp = 1.0 + 6.0 * strength;
                if first < l {
                    long[first] += level * amp * 4.0;
                }
                let mut m = first + 12;
                while m < l {
                    long[m] += level * amp;
                    m += 12;
                }
            }
            EventClass::Meme => {
                let flat = level * rng.gen_range(0.2..0.6);
                long.iter_mut().for_each(|v| *v = flat);
            }
            EventClass::Ongoing => {
                let months = rng.gen_range(6..=36);
                let amp = 1.0 + 4.0 * strength;
                for m in em.saturating_sub(months)..l.min(em + 3) {
                    long[m] += level * amp;
                }
            }
            EventClass::Atemporal => match kind {
                Some(AtemporalKind::Spiky) => {
                    let m = rng.gen_range(0..l);
                    long[m] += level * rng.gen_range(3.0..30.0);
                }
                Some(AtemporalKind::DormantPeriodic) => {
                    let month = rng.gen_range(0..12);
                    let amp = rng.gen_range(1.0..6.0);
                    for m in (month..l).step_by(12) {
                        long[m] += level * amp;
                    }
                }
                _ => {}
            },
        }
        Shape {
            short,
            long,
            event_day,
            base,
        }
    }

    fn query(&mut self, class: EventClass) -> String {
        let probs = term_probabilities(class);
        let rng = &mut self.rng;
        let mut words: Vec<&str> = Vec::new();
        let lists = [&self.gz.person, &self.gz.location, &self.gz.organization];
        for (p, list) in probs.iter().zip(lists) {
            if rng.gen_bool(*p) {
                words.push(list.choose(rng).expect("non-empty list"));
            }
        }
        if rng.gen_bool(probs[3]) {
            words.push(TEMPORAL_TERMS.choose(rng).expect("non-empty"));
        }
        if words.is_empty() || rng.gen_bool(0.5) {
            words.push(FILLER.choose(rng).expect("non-empty"));
        }
        words.join(" ")
    }

    fn clicks(&mut self, class: EventClass, query: &str, short: &[u64], shape: &Shape, hit: usize) -> Result<Vec<ClickRecord>> {
        let slug = query.replace(' ', "-");
        let canonical = [format!("{slug}.com"), format!("en.wikipedia.org/wiki/{slug}")];
        let peak = shape.short.iter().cloned().fold(shape.base, f64::max);
        let diversity = news_diversity(class);
        let mut out = Vec::new();
        let first = hit.saturating_sub(CLICK_WINDOW_DAYS - 1);
        for t in first..=hit {
            let excess = ((shape.short[t] - shape.base) / (peak - shape.base + 1e-9)).clamp(0.0, 1.0);
            let sources = (diversity * excess).floor() as usize;
            let date = self.spec.short_epoch + Days::new(t as u64);
            for _ in 0..short[t].min(25) {
                let pick = self.rng.gen_range(0..canonical.len() + sources);
                let url = if pick < canonical.len() {
                    canonical[pick].clone()
                } else {
                    format!("news{}.example.com/{slug}", pick - canonical.len())
                };
                out.push(ClickRecord::new(date, &url, query)?);
            }
        }
        Ok(out)
    }

    fn cluster(&mut self, class: EventClass, query: &str, total: u64) -> Vec<ClusterMember> {
        let extra = Poisson::new(cluster_mean(class)).expect("positive mean").sample(&mut self.rng) as usize;
        let mut names = BTreeSet::new();
        let mut members = vec![ClusterMember {
            query: query.to_string(),
            frequency: total,
        }];
        for _ in 0..extra {
            let suffix = FILLER.choose(&mut self.rng).expect("non-empty");
            let name = format!("{query} {suffix}");
            if name != query && names.insert(name.clone()) {
                let frequency = (total as f64 * self.rng.gen_range(0.05..0.8)).round() as u64;
                members.push(ClusterMember { query: name, frequency });
            }
        }
        members
    }

    fn instance(&mut self, class: EventClass, hit: usize) -> Result<QueryInstance> {
        let shape = self.shape(class, hit);
        let query = self.query(class);
        let short: Vec<u64> = shape.short.iter().map(|&r| self.noisy(r)).collect();
        let long: Vec<u64> = shape.long.iter().map(|&r| self.noisy(r)).collect();
        let background: Vec<u64> = self.background.iter().map(|b| b.max(0.0).round() as u64).collect();
        let clicks = self.clicks(class, &query, &short, &shape, hit)?;
        let cluster = self.cluster(class, &query, short.iter().sum());
        let epoch = self.spec.short_epoch;
        Ok(QueryInstance {
            event_date: epoch
                .checked_add_signed(chrono::Duration::days(shape.event_day))
                .unwrap_or(epoch),
            hitting_time: epoch + Days::new(hit as u64),
            short_series: TimeSeries::daily(epoch, short)?,
            long_series: TimeSeries::monthly(self.spec.long_epoch, long)?,
            background_long_series: TimeSeries::monthly(self.spec.long_epoch, background)?,
            clicks,
            cluster,
            query,
        })
    }
}

/// Deterministic in `spec`; instances come grouped by class in code order.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<(QueryInstance, EventClass)>> {
    spec.validate()?;
    let mut gen = Generator::new(spec);
    let hits = spec.hit_indices();
    let mut out = Vec::with_capacity(spec.total());
    for class in EventClass::ALL {
        for _ in 0..spec.counts[class.index()] {
            let hit = *hits.choose(&mut gen.rng).expect("at least one hit index");
            out.push((gen.instance(class, hit)?, class));
        }
    }
    Ok(out)
}
