//! Splitting, training, evaluation, baselines and the comparison experiments.

pub mod experiments;
pub mod metrics;
pub mod nb;
pub mod train;

pub use experiments::{
    compare_models, compare_optimizers, synthetic_dataset, write_confusion_csv, write_curve_csv, write_metrics_csv,
    ConvergenceCurve, ExperimentConfig, ModelReport,
};
pub use metrics::{average_precision, evaluate, evaluate_scores, EvalReport};
pub use nb::{fit_gaussian_nb, GaussianNb};
pub use train::{train, TrainConfig, TrainOutcome};

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datamodel::{EventClass, FeatureStats, LabeledDataset};
use crate::error::{Error, Result};
use crate::features::{fit_normalizer, normalize_dataset};

pub const TEST_FRACTION: f64 = 0.3;
pub const VALIDATION_FRACTION: f64 = 0.1;

/// Index lists of the fit, validation and test parts of a dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitManifest {
    pub fit: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub stratified: bool,
}

/// `(test, validation, fit)` sizes for `n` instances.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let test = (TEST_FRACTION * n as f64).floor() as usize;
    let validation = (VALIDATION_FRACTION * (n - test) as f64).floor() as usize;
    (test, validation, n - test - validation)
}

fn cut(indices: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let (test, validation, _) = split_sizes(indices.len());
    (
        indices[test + validation..].to_vec(),
        indices[test..test + validation].to_vec(),
        indices[..test].to_vec(),
    )
}

/// Random 63/7/30 split. Stratified splits apply the same rule within each class.
pub fn split(ds: &LabeledDataset, seed: u64, stratified: bool) -> Result<SplitManifest> {
    if ds.len() < 10 {
        return Err(Error::data(format!("split needs at least 10 instances, got {}", ds.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut fit, mut validation, mut test) = (Vec::new(), Vec::new(), Vec::new());
    if stratified {
        let labels = ds.labels();
        for class in EventClass::ALL {
            let mut members: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] == class).collect();
            if members.is_empty() {
                continue;
            }
            if members.len() < 2 {
                return Err(Error::data(format!(
                    "class {class} has {} member; stratified splits need at least 2",
                    members.len()
                )));
            }
            members.shuffle(&mut rng);
            let (f, v, t) = cut(&members);
            fit.extend(f);
            validation.extend(v);
            test.extend(t);
        }
    } else {
        let mut all: Vec<usize> = (0..ds.len()).collect();
        all.shuffle(&mut rng);
        (fit, validation, test) = cut(&all);
    }
    fit.sort_unstable();
    validation.sort_unstable();
    test.sort_unstable();
    Ok(SplitManifest {
        fit,
        validation,
        test,
        seed,
        stratified,
    })
}

impl SplitManifest {
    /// Text form: `seed`, `stratified`, then one line per part.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<manifest>", e);
        let list = |xs: &[usize]| {
            let mut s = String::new();
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    s.push(' ');
                }
                write!(s, "{x}").expect("string write");
            }
            s
        };
        writeln!(w, "#smlp-split v1").map_err(io)?;
        writeln!(w, "seed {}", self.seed).map_err(io)?;
        writeln!(w, "stratified {}", self.stratified).map_err(io)?;
        writeln!(w, "fit {}", list(&self.fit)).map_err(io)?;
        writeln!(w, "validation {}", list(&self.validation)).map_err(io)?;
        writeln!(w, "test {}", list(&self.test)).map_err(io)?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = Vec::new();
        for line in r.lines() {
            lines.push(line.map_err(|e| Error::io("<manifest>", e))?);
        }
        if lines.first().map(String::as_str) != Some("#smlp-split v1") || lines.len() < 6 {
            return Err(Error::data("not a split manifest"));
        }
        let field = |i: usize, key: &str| -> Result<String> {
            let line = &lines[i];
            let rest = line
                .strip_prefix(key)
                .ok_or_else(|| Error::data(format!("manifest line {}: expected '{key}'", i + 1)))?;
            Ok(rest.trim().to_string())
        };
        let bad = |what: &str| Error::data(format!("manifest: bad {what}"));
        let indices = |s: String, what: &str| -> Result<Vec<usize>> {
            s.split_ascii_whitespace()
                .map(|t| t.parse().map_err(|_| bad(what)))
                .collect()
        };
        Ok(SplitManifest {
            seed: field(1, "seed")?.parse().map_err(|_| bad("seed"))?,
            stratified: field(2, "stratified")?.parse().map_err(|_| bad("stratified"))?,
            fit: indices(field(3, "fit")?, "fit")?,
            validation: indices(field(4, "validation")?, "validation")?,
            test: indices(field(5, "test")?, "test")?,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(file))
    }

    /// Check that the parts are disjoint and cover `0..n`.
    pub fn check(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &i in self.fit.iter().chain(&self.validation).chain(&self.test) {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::data(format!("manifest index {i} is out of range or repeated")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::data("manifest does not cover every instance"));
        }
        Ok(())
    }
}

/// The three parts of a split, z-scored with statistics of the fit part.
#[derive(Clone, Debug)]
pub struct PreparedSplit {
    pub fit: LabeledDataset,
    pub validation: LabeledDataset,
    pub test: LabeledDataset,
    pub stats: FeatureStats,
}

pub fn prepare(ds: &LabeledDataset, manifest: &SplitManifest) -> Result<PreparedSplit> {
    manifest.check(ds.len())?;
    let raw_fit = ds.subset(&manifest.fit);
    let stats = fit_normalizer(&raw_fit)?;
    Ok(PreparedSplit {
        fit: normalize_dataset(&raw_fit, &stats),
        validation: normalize_dataset(&ds.subset(&manifest.validation), &stats),
        test: normalize_dataset(&ds.subset(&manifest.test), &stats),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::FeatureVector;

    fn dataset(labels: &[u8]) -> LabeledDataset {
        LabeledDataset::new(
            labels
                .iter()
                .map(|&c| (FeatureVector::zeros(), EventClass::from_code(c).unwrap()))
                .collect(),
            "test",
        )
    }

    #[test]
    fn full_dataset_sizes() {
        assert_eq!(split_sizes(10_370), (3111, 725, 6534));
    }

    #[test]
    fn unstratified_split_covers_everything() {
        let ds = dataset(&[0; 100]);
        let m = split(&ds, 1, false).unwrap();
        m.check(100).unwrap();
        assert_eq!((m.test.len(), m.validation.len(), m.fit.len()), (30, 7, 63));
        assert_eq!(m, split(&ds, 1, false).unwrap());
        assert_ne!(m, split(&ds, 2, false).unwrap());
    }

    #[test]
    fn stratified_split_is_symmetric() {
        let ds = dataset(&[0, 0, 1, 1, 2, 2, 3, 3, 4, 4]);
        let m = split(&ds, 5, true).unwrap();
        m.check(10).unwrap();
        let labels = ds.labels();
        for class in 0..5u8 {
            let c = EventClass::from_code(class).unwrap();
            let count = |xs: &[usize]| xs.iter().filter(|&&i| labels[i] == c).count();
            assert_eq!((count(&m.fit), count(&m.validation), count(&m.test)), (2, 0, 0));
        }
    }

    #[test]
    fn stratified_split_rejects_singletons() {
        let mut labels = vec![0u8; 12];
        labels.push(3);
        let err = split(&dataset(&labels), 1, true).unwrap_err().to_string();
        assert!(err.contains("meme"), "{err}");
    }

    #[test]
    fn manifest_round_trip() {
        let m = split(&dataset(&[1; 40]), 3, false).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        assert_eq!(SplitManifest::read_from(buf.as_slice()).unwrap(), m);
    }
}
