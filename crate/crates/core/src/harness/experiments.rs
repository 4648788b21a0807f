//! The optimizer-convergence and model-comparison experiments, and their CSV outputs.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::KvConfig;
use crate::datamodel::{EventClass, LabeledDataset};
use crate::error::{Error, Result};
use crate::features::{extract_features, fit_normalizer, normalize_dataset, Gazetteer};
use crate::ingest::{generate_synthetic, SyntheticSpec};
use crate::network::{init_model, single_unit_architecture};
use crate::optim::{Method, OptimizerSpec};

use super::metrics::{evaluate, evaluate_scores, EvalReport};
use super::nb::fit_gaussian_nb;
use super::train::{to_matrix, train, TrainConfig};
use super::{prepare, split};

pub const DEFAULT_FRACTIONS: [f64; 6] = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7];

/// Generate a synthetic corpus and extract its raw feature vectors.
pub fn synthetic_dataset(spec: &SyntheticSpec, gz: &Gazetteer) -> Result<LabeledDataset> {
    let instances = generate_synthetic(spec)?
        .iter()
        .map(|(inst, class)| Ok((extract_features(inst, gz)?, *class)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledDataset::new(instances, format!("synthetic seed={}", spec.seed)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Seeds the split, the initial weights and the batch order.
    pub seed: u64,
    pub stratified: bool,
    /// Training-set sizes as fractions of the whole dataset.
    pub fractions: Vec<f64>,
    pub train: TrainConfig,
    pub optim: OptimizerSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 7,
            stratified: false,
            fractions: DEFAULT_FRACTIONS.to_vec(),
            train: TrainConfig::default(),
            optim: OptimizerSpec::default(),
        }
    }
}

impl ExperimentConfig {
    /// Read `seed`, `split.stratified`, `experiment.fractions` (comma-separated)
    /// plus the training and optimizer keys.
    pub fn from_config(cfg: &mut KvConfig) -> Result<Self> {
        let mut c = ExperimentConfig {
            train: TrainConfig::from_config(cfg)?,
            optim: OptimizerSpec::from_config(cfg)?,
            ..Self::default()
        };
        cfg.take_into("seed", &mut c.seed)?;
        cfg.take_into("split.stratified", &mut c.stratified)?;
        if let Some(list) = cfg.take::<String>("experiment.fractions")? {
            c.fractions = list
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| *v > 0.0 && *v <= 0.7)
                        .ok_or_else(|| Error::config(format!("invalid fraction '{f}'; fractions lie in (0, 0.7]")))
                })
                .collect::<Result<_>>()?;
        }
        Ok(c)
    }

    /// Training settings with the experiment seed driving the batch order.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceCurve {
    pub method: Method,
    pub fraction: f64,
    pub losses: Vec<f64>,
}

impl ConvergenceCurve {
    pub fn final_loss(&self) -> Option<f64> {
        self.losses.last().copied()
    }

    /// File stem such as `adam_f30`.
    pub fn file_stem(&self) -> String {
        format!("{}_f{:02}", self.method.name(), (self.fraction * 100.0).round() as u32)
    }
}

/// Train every method on nested subsets of the training portion.
///
/// All runs share the initial weights and the batch order; each fraction's
/// subset extends the previous one. Inputs are z-scored with statistics of
/// the whole training portion.
pub fn compare_optimizers(ds: &LabeledDataset, cfg: &ExperimentConfig, methods: &[Method]) -> Result<Vec<ConvergenceCurve>> {
    let manifest = split(ds, cfg.seed, cfg.stratified)?;
    let mut pool: Vec<usize> = manifest.fit.iter().chain(&manifest.validation).copied().collect();
    pool.sort_unstable();
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1)));
    let stats = fit_normalizer(&ds.subset(&pool))?;
    let model = init_model(&cfg.train.architecture, cfg.seed)?;
    let train_cfg = cfg.train_config();

    let mut curves = Vec::with_capacity(cfg.fractions.len() * methods.len());
    for &fraction in &cfg.fractions {
        let take = ((fraction * ds.len() as f64).round() as usize).min(pool.len());
        if take == 0 {
            return Err(Error::data(format!("fraction {fraction} selects no training instances")));
        }
        let subset = normalize_dataset(&ds.subset(&pool[..take]), &stats);
        for &method in methods {
            let spec = OptimizerSpec { method, ..cfg.optim };
            let out = train(&model, &spec, &subset, None, &train_cfg)?;
            curves.push(ConvergenceCurve {
                method,
                fraction,
                losses: out.curve,
            });
        }
    }
    Ok(curves)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelReport {
    pub name: String,
    pub report: EvalReport,
}

pub const MODEL_NAMES: [&str; 3] = ["gaussian-nb", "mlp", "s-mlp"];

/// Gaussian naive Bayes, a single-unit MLP and the configured stacked MLP on
/// one split. Networks are evaluated at their best-validation checkpoint.
pub fn compare_models(ds: &LabeledDataset, cfg: &ExperimentConfig) -> Result<Vec<ModelReport>> {
    let manifest = split(ds, cfg.seed, cfg.stratified)?;
    let parts = prepare(ds, &manifest)?;
    let (_, test_labels) = to_matrix(&parts.test);

    let nb = fit_gaussian_nb(&parts.fit)?;
    let mut reports = vec![ModelReport {
        name: MODEL_NAMES[0].into(),
        report: evaluate_scores(&nb.score(&parts.test), &test_labels)?,
    }];
    for (name, arch) in [
        (MODEL_NAMES[1], single_unit_architecture()),
        (MODEL_NAMES[2], cfg.train.architecture.clone()),
    ] {
        let train_cfg = TrainConfig {
            architecture: arch.clone(),
            ..cfg.train_config()
        };
        let model = init_model(&arch, cfg.seed)?;
        let out = train(&model, &cfg.optim, &parts.fit, Some(&parts.validation), &train_cfg)?;
        reports.push(ModelReport {
            name: name.into(),
            report: evaluate(&out.best, &parts.test)?,
        });
    }
    Ok(reports)
}

fn io(e: std::io::Error) -> Error {
    Error::io("<csv>", e)
}

/// `iteration,loss` with iterations counted from 1.
pub fn write_curve_csv<W: Write>(mut w: W, losses: &[f64]) -> Result<()> {
    writeln!(w, "iteration,loss").map_err(io)?;
    for (i, l) in losses.iter().enumerate() {
        writeln!(w, "{},{l:?}", i + 1).map_err(io)?;
    }
    Ok(())
}

/// `model,class,precision,AP,MAP,macro_precision`, one row per model and class.
pub fn write_metrics_csv<W: Write>(mut w: W, reports: &[ModelReport]) -> Result<()> {
    writeln!(w, "model,class,precision,AP,MAP,macro_precision").map_err(io)?;
    for r in reports {
        for class in EventClass::ALL {
            let c = class.index();
            writeln!(
                w,
                "{},{},{:.6},{:.6},{:.6},{:.6}",
                r.name, class, r.report.precision[c], r.report.average_precision[c], r.report.map, r.report.macro_precision
            )
            .map_err(io)?;
        }
    }
    Ok(())
}

/// Confusion matrix with actual classes as rows and predictions as columns.
pub fn write_confusion_csv<W: Write>(mut w: W, report: &EvalReport) -> Result<()> {
    let names: Vec<&str> = EventClass::ALL.iter().map(|c| c.name()).collect();
    writeln!(w, "actual,{}", names.join(",")).map_err(io)?;
    for class in EventClass::ALL {
        let row: Vec<String> = report.confusion[class.index()].iter().map(|n| n.to_string()).collect();
        writeln!(w, "{},{}", class, row.join(",")).map_err(io)?;
    }
    Ok(())
}
