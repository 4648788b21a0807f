//! Mini-batch training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::KvConfig;
use crate::datamodel::{EventClass, LabeledDataset, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::network::{
    backward, default_architecture, forward, format_architecture, mean_loss, parse_architecture, Architecture, Matrix,
    SmlpModel,
};
use crate::optim::{apply_update, apply_update_masked, lookahead, needs_lookahead, OptimizerSpec, OptimizerState};

/// Consecutive rising epochs that trigger a learning-rate halving when the safeguard is on.
pub const SAFEGUARD_PATIENCE: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    /// Seeds the per-epoch shuffles.
    pub seed: u64,
    /// Weight each sample by `n / (classes * n_class)`.
    pub class_weighted: bool,
    /// Halve the learning rate after [`SAFEGUARD_PATIENCE`] rising epochs.
    pub safeguard: bool,
    /// Updates per unit and batch; 1 trains the whole stack jointly.
    pub inner_iterations: usize,
    pub architecture: Architecture,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 200,
            seed: 7,
            class_weighted: false,
            safeguard: false,
            inner_iterations: 1,
            architecture: default_architecture(),
        }
    }
}

impl TrainConfig {
    /// Overlay `train.*` and `model.architecture` keys from `cfg`.
    pub fn from_config(cfg: &mut KvConfig) -> Result<Self> {
        let mut c = Self::default();
        cfg.take_into("train.batch_size", &mut c.batch_size)?;
        cfg.take_into("train.epochs", &mut c.epochs)?;
        cfg.take_into("train.seed", &mut c.seed)?;
        cfg.take_into("train.class_weighted", &mut c.class_weighted)?;
        cfg.take_into("train.safeguard", &mut c.safeguard)?;
        cfg.take_into("train.inner_iterations", &mut c.inner_iterations)?;
        if let Some(arch) = cfg.take::<String>("model.architecture")? {
            c.architecture = parse_architecture(&arch).map_err(|e| Error::config(e.to_string()))?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size must be positive"));
        }
        if self.inner_iterations == 0 {
            return Err(Error::config("train.inner_iterations must be positive"));
        }
        let first = self.architecture.first().and_then(|u| u.first()).copied();
        let last = self.architecture.last().and_then(|u| u.last()).copied();
        if first != Some(FEATURE_COUNT) || last != Some(EventClass::COUNT) {
            return Err(Error::config(format!(
                "architecture {} must start at {FEATURE_COUNT} and end at {}",
                format_architecture(&self.architecture),
                EventClass::COUNT
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters after the last epoch.
    pub model: SmlpModel,
    /// Parameters with the lowest validation loss (the final ones without validation data).
    pub best: SmlpModel,
    pub best_epoch: Option<usize>,
    /// Mean training loss per epoch.
    pub curve: Vec<f64>,
    /// Validation loss after each epoch; empty without validation data.
    pub validation_curve: Vec<f64>,
}

/// Feature matrix and label codes of a dataset.
pub fn to_matrix(ds: &LabeledDataset) -> (Matrix, Vec<usize>) {
    let mut data = Vec::with_capacity(ds.len() * FEATURE_COUNT);
    for (x, _) in &ds.instances {
        data.extend_from_slice(x.values());
    }
    (
        Matrix::from_vec(ds.len(), FEATURE_COUNT, data),
        ds.instances.iter().map(|(_, y)| y.index()).collect(),
    )
}

fn gather(x: &Matrix, rows: &[usize]) -> Matrix {
    let mut data = Vec::with_capacity(rows.len() * x.cols());
    for &r in rows {
        data.extend_from_slice(x.row(r));
    }
    Matrix::from_vec(rows.len(), x.cols(), data)
}

fn class_weights(labels: &[usize]) -> [f64; EventClass::COUNT] {
    let mut counts = [0usize; EventClass::COUNT];
    labels.iter().for_each(|&y| counts[y] += 1);
    let present = counts.iter().filter(|&&c| c > 0).count() as f64;
    let mut w = [0.0; EventClass::COUNT];
    for (wi, &c) in w.iter_mut().zip(&counts) {
        if c > 0 {
            *wi = labels.len() as f64 / (present * c as f64);
        }
    }
    w
}

/// Mean cross-entropy of `model` over a whole labeled matrix, in batches.
pub fn dataset_loss(model: &SmlpModel, x: &Matrix, labels: &[usize]) -> Result<f64> {
    const CHUNK: usize = 512;
    let mut total = 0.0;
    let rows: Vec<usize> = (0..x.rows()).collect();
    for chunk in rows.chunks(CHUNK) {
        let cache = forward(model, &gather(x, chunk))?;
        let y: Vec<usize> = chunk.iter().map(|&r| labels[r]).collect();
        total += mean_loss(&cache, &y, None) * chunk.len() as f64;
    }
    Ok(total / x.rows().max(1) as f64)
}

/// Train `model` on `fit` with mini-batches, shuffling each epoch.
///
/// The curve holds, per epoch, the mean over batches of the loss at the
/// parameters each batch was applied to. Nesterov methods take their
/// gradient at the look-ahead point.
pub fn train(
    model: &SmlpModel,
    spec: &OptimizerSpec,
    fit: &LabeledDataset,
    validation: Option<&LabeledDataset>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    spec.validate()?;
    cfg.validate()?;
    if fit.is_empty() {
        return Err(Error::data("training set is empty"));
    }
    let (x, y) = to_matrix(fit);
    let val = validation.filter(|v| !v.is_empty()).map(to_matrix);
    let weights = cfg.class_weighted.then(|| class_weights(&y));

    let mut spec = *spec;
    let mut model = model.clone();
    let mut state = OptimizerState::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let layer_units = model.layer_units();
    let units = model.units().len();

    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut validation_curve = Vec::new();
    let mut best = model.clone();
    let mut best_epoch = None;
    let mut best_val = f64::INFINITY;
    let mut rising = 0;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for rows in order.chunks(cfg.batch_size) {
            let batch = gather(&x, rows);
            let labels: Vec<usize> = rows.iter().map(|&r| y[r]).collect();
            let sw: Option<Vec<f64>> = weights.map(|w| labels.iter().map(|&l| w[l]).collect());
            let sw = sw.as_deref();

            let cache = forward(&model, &batch)?;
            epoch_loss += mean_loss(&cache, &labels, sw) * rows.len() as f64;

            if cfg.inner_iterations == 1 {
                let grads = if needs_lookahead(&spec) {
                    let ahead = lookahead(&spec, &state, &model);
                    backward(&ahead, &forward(&ahead, &batch)?, &labels, sw)?
                } else {
                    backward(&model, &cache, &labels, sw)?
                };
                apply_update(&spec, &mut state, &mut model, &grads)?;
            } else {
                for unit in 0..units {
                    let mask: Vec<bool> = layer_units.iter().map(|&u| u == unit).collect();
                    for _ in 0..cfg.inner_iterations {
                        let at = if needs_lookahead(&spec) {
                            lookahead(&spec, &state, &model)
                        } else {
                            model.clone()
                        };
                        let grads = backward(&at, &forward(&at, &batch)?, &labels, sw)?;
                        apply_update_masked(&spec, &mut state, &mut model, &grads, Some(&mask))?;
                    }
                }
            }
        }
        let loss = epoch_loss / x.rows() as f64;
        if !loss.is_finite() {
            return Err(Error::Divergence(format!("non-finite training loss at iteration {}", epoch + 1)));
        }
        if cfg.safeguard {
            if curve.last().is_some_and(|&prev| loss > prev) {
                rising += 1;
            } else {
                rising = 0;
            }
            if rising >= SAFEGUARD_PATIENCE {
                spec.alpha /= 2.0;
                rising = 0;
            }
        }
        curve.push(loss);

        if let Some((vx, vy)) = &val {
            let vl = dataset_loss(&model, vx, vy)?;
            if !vl.is_finite() {
                return Err(Error::Divergence(format!("non-finite validation loss at iteration {}", epoch + 1)));
            }
            validation_curve.push(vl);
            if vl < best_val {
                best_val = vl;
                best = model.clone();
                best_epoch = Some(epoch);
            }
        }
    }
    if val.is_none() {
        best = model.clone();
    }
    Ok(TrainOutcome {
        model,
        best,
        best_epoch,
        curve,
        validation_curve,
    })
}
