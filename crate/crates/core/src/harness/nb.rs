//! Gaussian naive Bayes baseline.

use crate::datamodel::{EventClass, FeatureVector, LabeledDataset, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::network::{argmax, Matrix};

pub const VARIANCE_FLOOR: f64 = 1e-9;

const C: usize = EventClass::COUNT;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianNb {
    pub log_prior: [f64; C],
    pub mean: [[f64; FEATURE_COUNT]; C],
    pub variance: [[f64; FEATURE_COUNT]; C],
}

/// Per-class feature means and variances. Every class needs at least two members.
pub fn fit_gaussian_nb(train: &LabeledDataset) -> Result<GaussianNb> {
    let counts = train.class_counts();
    if let Some(c) = EventClass::ALL.into_iter().find(|c| counts[c.index()] < 2) {
        return Err(Error::data(format!(
            "class {c} has {} training members; naive Bayes needs at least 2",
            counts[c.index()]
        )));
    }
    let mut mean = [[0.0; FEATURE_COUNT]; C];
    let mut variance = [[0.0; FEATURE_COUNT]; C];
    for (x, y) in &train.instances {
        for (m, v) in mean[y.index()].iter_mut().zip(x.values()) {
            *m += v;
        }
    }
    for c in 0..C {
        mean[c].iter_mut().for_each(|m| *m /= counts[c] as f64);
    }
    for (x, y) in &train.instances {
        let c = y.index();
        for ((s, v), m) in variance[c].iter_mut().zip(x.values()).zip(&mean[c]) {
            *s += (v - m) * (v - m);
        }
    }
    for c in 0..C {
        variance[c]
            .iter_mut()
            .for_each(|s| *s = (*s / counts[c] as f64).max(VARIANCE_FLOOR));
    }
    let n = train.len() as f64;
    let mut log_prior = [0.0; C];
    for c in 0..C {
        log_prior[c] = (counts[c] as f64 / n).ln();
    }
    Ok(GaussianNb {
        log_prior,
        mean,
        variance,
    })
}

impl GaussianNb {
    /// Unnormalized log posterior of each class.
    pub fn joint_log_likelihood(&self, x: &[f64; FEATURE_COUNT]) -> [f64; C] {
        let mut out = self.log_prior;
        for (c, o) in out.iter_mut().enumerate() {
            for f in 0..FEATURE_COUNT {
                let var = self.variance[c][f];
                let d = x[f] - self.mean[c][f];
                *o -= 0.5 * ((std::f64::consts::TAU * var).ln() + d * d / var);
            }
        }
        out
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> [f64; C] {
        let jll = self.joint_log_likelihood(x.values());
        let max = jll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut p = jll.map(|l| (l - max).exp());
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        p
    }

    pub fn predict(&self, x: &FeatureVector) -> EventClass {
        EventClass::from_code(argmax(&self.joint_log_likelihood(x.values())) as u8).expect("six classes")
    }

    /// Posterior rows for every instance of `ds`.
    pub fn score(&self, ds: &LabeledDataset) -> Matrix {
        let rows: Vec<[f64; C]> = ds.instances.iter().map(|(x, _)| self.predict_proba(x)).collect();
        Matrix::from_rows(&rows)
    }
}
