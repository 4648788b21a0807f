//! Stacked multilayer perceptron.
//!
//! A model is an ordered chain of MLP units. Each unit is a short stack of
//! dense layers; the output of one unit is the input of the next. Hidden
//! layers use ReLU and the final layer of the whole stack is linear, with
//! softmax applied in the loss head.

mod checkpoint;
mod matrix;

pub use checkpoint::Checkpoint;
pub use matrix::Matrix;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::datamodel::{EventClass, FEATURE_COUNT};
use crate::error::{Error, Result};
use matrix::{axpy, dot};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::data(format!("unknown activation '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
}

/// Affine layer; `weights` is `output_dim × input_dim`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub spec: LayerSpec,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(spec: LayerSpec) -> Self {
        Dense {
            spec,
            weights: vec![0.0; spec.input_dim * spec.output_dim],
            bias: vec![0.0; spec.output_dim],
        }
    }

    fn weight_row(&self, o: usize) -> &[f64] {
        let n = self.spec.input_dim;
        &self.weights[o * n..(o + 1) * n]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpUnit {
    pub layers: Vec<Dense>,
}

impl MlpUnit {
    pub fn input_dim(&self) -> usize {
        self.layers[0].spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].spec.output_dim
    }
}

/// Layer widths of each unit, e.g. `[[28, 64, 64], [64, 32, 6]]`.
pub type Architecture = Vec<Vec<usize>>;

/// Three units: 28→64→64, 64→64→64, 64→32→6.
pub fn default_architecture() -> Architecture {
    vec![vec![28, 64, 64], vec![64, 64, 64], vec![64, 32, 6]]
}

/// One unit with a single hidden layer, the non-stacked baseline.
pub fn single_unit_architecture() -> Architecture {
    vec![vec![28, 64, 6]]
}

/// Parse `28-64-64;64-64-64;64-32-6`.
pub fn parse_architecture(s: &str) -> Result<Architecture> {
    s.split(';')
        .map(|unit| {
            unit.trim()
                .split('-')
                .map(|d| {
                    d.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::config(format!("bad layer width '{d}' in architecture '{s}'")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

pub fn format_architecture(arch: &Architecture) -> String {
    arch.iter()
        .map(|u| u.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("-"))
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmlpModel {
    units: Vec<MlpUnit>,
    seed: u64,
}

impl SmlpModel {
    /// Assemble a model from explicit units, checking that dimensions chain
    /// and that the final layer is linear.
    pub fn from_units(units: Vec<MlpUnit>, seed: u64) -> Result<Self> {
        if units.is_empty() || units.iter().any(|u| u.layers.is_empty()) {
            return Err(Error::Shape("a model needs at least one unit with at least one layer".into()));
        }
        let mut prev: Option<usize> = None;
        for (u, unit) in units.iter().enumerate() {
            for (l, layer) in unit.layers.iter().enumerate() {
                let s = layer.spec;
                if s.input_dim == 0 || s.output_dim == 0 {
                    return Err(Error::Shape(format!("unit {u} layer {l} has a zero dimension")));
                }
                if let Some(p) = prev {
                    if p != s.input_dim {
                        return Err(Error::Shape(format!(
                            "unit {u} layer {l} expects input {} but receives {p}",
                            s.input_dim
                        )));
                    }
                }
                if layer.weights.len() != s.input_dim * s.output_dim || layer.bias.len() != s.output_dim {
                    return Err(Error::Shape(format!("unit {u} layer {l} parameter sizes disagree with its spec")));
                }
                if layer.weights.iter().chain(&layer.bias).any(|w| !w.is_finite()) {
                    return Err(Error::Shape(format!("unit {u} layer {l} has non-finite parameters")));
                }
                prev = Some(s.output_dim);
            }
        }
        let last = units.last().and_then(|u| u.layers.last()).expect("checked non-empty");
        if last.spec.activation != Activation::Identity {
            return Err(Error::Shape("the final layer must be linear (softmax is applied by the loss)".into()));
        }
        Ok(SmlpModel { units, seed })
    }

    /// He-initialized model for any chaining architecture: weights drawn from
    /// `Normal(0, sqrt(2 / fan_in))`, biases zero, ReLU everywhere except the
    /// final layer.
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        let total_layers: usize = arch.iter().map(|u| u.len().saturating_sub(1)).sum();
        if arch.is_empty() || arch.iter().any(|u| u.len() < 2) {
            return Err(Error::Shape("every unit needs an input width and at least one layer".into()));
        }
        for (u, pair) in arch.windows(2).enumerate() {
            let (out, inp) = (pair[0][pair[0].len() - 1], pair[1][0]);
            if out != inp {
                return Err(Error::Shape(format!(
                    "unit {u} outputs {out} but unit {} expects {inp}",
                    u + 1
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen = 0;
        let mut units = Vec::with_capacity(arch.len());
        for widths in arch {
            let mut layers = Vec::with_capacity(widths.len() - 1);
            for w in widths.windows(2) {
                seen += 1;
                let spec = LayerSpec {
                    input_dim: w[0],
                    output_dim: w[1],
                    activation: if seen == total_layers {
                        Activation::Identity
                    } else {
                        Activation::Relu
                    },
                };
                if w[0] == 0 || w[1] == 0 {
                    return Err(Error::Shape("layer widths must be positive".into()));
                }
                let normal = Normal::new(0.0, (2.0 / w[0] as f64).sqrt()).expect("positive std");
                let weights = (0..w[0] * w[1]).map(|_| normal.sample(&mut rng)).collect();
                layers.push(Dense {
                    spec,
                    weights,
                    bias: vec![0.0; w[1]],
                });
            }
            units.push(MlpUnit { layers });
        }
        SmlpModel::from_units(units, seed)
    }

    pub fn units(&self) -> &[MlpUnit] {
        &self.units
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn architecture(&self) -> Architecture {
        self.units
            .iter()
            .map(|u| {
                let mut widths = vec![u.input_dim()];
                widths.extend(u.layers.iter().map(|l| l.spec.output_dim));
                widths
            })
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.units[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.units[self.units.len() - 1].output_dim()
    }

    /// All layers in forward order, across unit boundaries.
    pub fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.units.iter().flat_map(|u| u.layers.iter())
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.units.iter_mut().flat_map(|u| u.layers.iter_mut())
    }

    pub fn num_layers(&self) -> usize {
        self.units.iter().map(|u| u.layers.len()).sum()
    }

    /// Index of the owning unit for each layer, in forward order.
    pub fn layer_units(&self) -> Vec<usize> {
        self.units
            .iter()
            .enumerate()
            .flat_map(|(u, unit)| std::iter::repeat(u).take(unit.layers.len()))
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.layers().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameter tensors in canonical order: W₀, b₀, W₁, b₁, ...
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

/// The classifier's own shape contract: 28 features in, 6 classes out.
pub fn init_model(arch: &Architecture, seed: u64) -> Result<SmlpModel> {
    let first = arch.first().and_then(|u| u.first()).copied();
    let last = arch.last().and_then(|u| u.last()).copied();
    if first != Some(FEATURE_COUNT) || last != Some(EventClass::COUNT) {
        return Err(Error::Shape(format!(
            "architecture must map {FEATURE_COUNT} features to {} classes, got {}",
            EventClass::COUNT,
            format_architecture(arch)
        )));
    }
    SmlpModel::init(arch, seed)
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

/// Max-shifted softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let mut out = z.to_vec();
    softmax_in_place(&mut out);
    out
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// `-ln probs[label]`.
pub fn cross_entropy(probs: &[f64], label: EventClass) -> f64 {
    -probs[label.index()].ln()
}

/// Cross-entropy computed from logits through log-sum-exp; finite even
/// when the softmax probability underflows.
pub fn cross_entropy_from_logits(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    lse - logits[label]
}

/// Everything the backward pass needs from a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// Input to each layer, in forward order.
    inputs: Vec<Matrix>,
    /// Pre-activation of each layer; the last one holds the logits.
    pre_activations: Vec<Matrix>,
    pub probabilities: Matrix,
}

impl ForwardCache {
    pub fn logits(&self) -> &Matrix {
        self.pre_activations.last().expect("at least one layer")
    }

    pub fn pre_activations(&self) -> &[Matrix] {
        &self.pre_activations
    }

    /// Activations after each layer (post-ReLU where applicable).
    pub fn activations(&self) -> Vec<&Matrix> {
        self.inputs
            .iter()
            .skip(1)
            .chain(std::iter::once(self.logits()))
            .collect()
    }
}

fn affine(layer: &Dense, x: &Matrix) -> Matrix {
    let out_dim = layer.spec.output_dim;
    let mut z = Matrix::zeros(x.rows(), out_dim);
    for r in 0..x.rows() {
        let xr = x.row(r);
        let zr = z.row_mut(r);
        for (o, zo) in zr.iter_mut().enumerate() {
            *zo = layer.bias[o] + dot(layer.weight_row(o), xr);
        }
    }
    z
}

/// Run `batch` (one row per instance) through every unit, then softmax.
pub fn forward(model: &SmlpModel, batch: &Matrix) -> Result<ForwardCache> {
    if batch.cols() != model.input_dim() {
        return Err(Error::Shape(format!(
            "batch has {} columns, model expects {}",
            batch.cols(),
            model.input_dim()
        )));
    }
    if batch.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Shape("batch contains non-finite values".into()));
    }
    let n = model.num_layers();
    let mut inputs = Vec::with_capacity(n);
    let mut pre_activations = Vec::with_capacity(n);
    let mut current = batch.clone();
    for layer in model.layers() {
        let z = affine(layer, &current);
        let a = match layer.spec.activation {
            Activation::Relu => {
                let mut a = z.clone();
                a.as_mut_slice().iter_mut().for_each(|v| {
                    if *v <= 0.0 {
                        *v = 0.0;
                    }
                });
                a
            }
            Activation::Identity => z.clone(),
        };
        inputs.push(std::mem::replace(&mut current, a));
        pre_activations.push(z);
    }
    let mut probabilities = current;
    for r in 0..probabilities.rows() {
        softmax_in_place(probabilities.row_mut(r));
    }
    Ok(ForwardCache {
        inputs,
        pre_activations,
        probabilities,
    })
}

/// Softmax probabilities for a batch.
pub fn predict_proba(model: &SmlpModel, batch: &Matrix) -> Result<Matrix> {
    Ok(forward(model, batch)?.probabilities)
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

pub fn predict(model: &SmlpModel, x: &[f64]) -> Result<EventClass> {
    let probs = predict_proba(model, &Matrix::from_rows(&[x]))?;
    let idx = argmax(probs.row(0));
    EventClass::from_code(idx as u8).ok_or_else(|| Error::Shape(format!("model has {} outputs", probs.cols())))
}

/// Mean cross-entropy of the model on a labeled batch.
pub fn batch_loss(model: &SmlpModel, batch: &Matrix, labels: &[usize]) -> Result<f64> {
    let cache = forward(model, batch)?;
    Ok(mean_loss(&cache, labels, None))
}

pub(crate) fn mean_loss(cache: &ForwardCache, labels: &[usize], weights: Option<&[f64]>) -> f64 {
    let logits = cache.logits();
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(r, &y)| weights.map_or(1.0, |w| w[r]) * cross_entropy_from_logits(logits.row(r), y))
        .sum();
    total / labels.len() as f64
}

/// ∂J/∂W and ∂J/∂b for every layer, in forward order.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    pub layers: Vec<Dense>,
}

impl GradientSet {
    pub fn zeros_like(model: &SmlpModel) -> Self {
        GradientSet {
            layers: model.layers().map(|l| Dense::zeros(l.spec)).collect(),
        }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Exact gradients of the mean cross-entropy over the batch.
///
/// `sample_weights`, when given, scales each row's loss (used for the
/// optional class-weighted objective).
pub fn backward(
    model: &SmlpModel,
    cache: &ForwardCache,
    labels: &[usize],
    sample_weights: Option<&[f64]>,
) -> Result<GradientSet> {
    let probs = &cache.probabilities;
    let batch = probs.rows();
    if cache.inputs.len() != model.num_layers() || labels.len() != batch || probs.cols() != model.output_dim() {
        return Err(Error::Shape("forward cache does not match model or labels".into()));
    }
    if let Some(w) = sample_weights {
        if w.len() != batch {
            return Err(Error::Shape("sample weights must match the batch size".into()));
        }
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= probs.cols()) {
        return Err(Error::Shape(format!("label {bad} outside {} outputs", probs.cols())));
    }

    let scale = 1.0 / batch as f64;
    let mut delta = probs.clone();
    for (r, &y) in labels.iter().enumerate() {
        let w = sample_weights.map_or(1.0, |w| w[r]) * scale;
        let row = delta.row_mut(r);
        row[y] -= 1.0;
        row.iter_mut().for_each(|v| *v *= w);
    }

    let layers: Vec<&Dense> = model.layers().collect();
    let mut grads = GradientSet::zeros_like(model);
    for l in (0..layers.len()).rev() {
        let layer = layers[l];
        let input = &cache.inputs[l];
        let in_dim = layer.spec.input_dim;
        let g = &mut grads.layers[l];
        for r in 0..batch {
            let d = delta.row(r);
            let x = input.row(r);
            for (o, &dv) in d.iter().enumerate() {
                if dv != 0.0 {
                    axpy(dv, x, &mut g.weights[o * in_dim..(o + 1) * in_dim]);
                    g.bias[o] += dv;
                }
            }
        }
        if l == 0 {
            break;
        }
        let mut next = Matrix::zeros(batch, in_dim);
        for r in 0..batch {
            let d = delta.row(r);
            let out = next.row_mut(r);
            for (o, &dv) in d.iter().enumerate() {
                if dv != 0.0 {
                    axpy(dv, layer.weight_row(o), out);
                }
            }
        }
        if layers[l - 1].spec.activation == Activation::Relu {
            let pre = &cache.pre_activations[l - 1];
            for r in 0..batch {
                let z = pre.row(r);
                for (v, &zi) in next.row_mut(r).iter_mut().zip(z) {
                    if zi <= 0.0 {
                        *v = 0.0;
                    }
                }
            }
        }
        delta = next;
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(m: &Matrix) -> Vec<Vec<f64>> {
        m.iter_rows().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn relu_examples() {
        assert_eq!(relu(&[-3.0, 5.0, 0.0]), vec![0.0, 5.0, 0.0]);
        let x = [-1.5, 2.0, 0.0, -0.0, 7.25];
        assert_eq!(relu(&relu(&x)), relu(&x));
    }

    #[test]
    fn softmax_examples() {
        for p in softmax(&[0.0; 6]) {
            assert!((p - 1.0 / 6.0).abs() < 1e-15);
        }
        let big = softmax(&[1000.0, 0.0]);
        assert_eq!(big[0], 1.0);
        assert!(big[1] >= 0.0 && big[1] < 1e-300);
        let e = [1f64.exp(), 2f64.exp(), 3f64.exp()];
        let s: f64 = e.iter().sum();
        for (got, want) in softmax(&[1.0, 2.0, 3.0]).iter().zip(e.iter().map(|v| v / s)) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn cross_entropy_examples() {
        let mut onehot = [0.0; 6];
        onehot[4] = 1.0;
        assert_eq!(cross_entropy(&onehot, EventClass::Ongoing), 0.0);
        assert!((cross_entropy(&[1.0 / 6.0; 6], EventClass::Meme) - 6f64.ln()).abs() < 1e-12);
        let mut p = [0.15; 6];
        p[1] = 0.25;
        assert!((cross_entropy(&p, EventClass::Breaking) - 4f64.ln()).abs() < 1e-12);
        assert!((cross_entropy_from_logits(&[0.0; 6], 3) - 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn init_is_deterministic_with_zero_bias() {
        let arch = vec![vec![28, 6]];
        let m = init_model(&arch, 5).unwrap();
        assert_eq!(m.num_layers(), 1);
        assert!(m.layers().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        assert_eq!(m, init_model(&arch, 5).unwrap());
        assert_ne!(m, init_model(&arch, 6).unwrap());
    }

    #[test]
    fn init_weight_scale_matches_he() {
        let m = init_model(&vec![vec![28, 64, 32], vec![32, 32, 6]], 1).unwrap();
        for layer in m.layers() {
            let n = layer.weights.len() as f64;
            let mean = layer.weights.iter().sum::<f64>() / n;
            let var = layer.weights.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / n;
            let target = (2.0 / layer.spec.input_dim as f64).sqrt();
            assert!((var.sqrt() / target - 1.0).abs() < 0.10, "{:?}", layer.spec);
        }
    }

    #[test]
    fn init_rejects_bad_shapes() {
        assert!(init_model(&vec![vec![28, 64], vec![32, 6]], 0).is_err());
        assert!(init_model(&vec![vec![27, 6]], 0).is_err());
        assert!(init_model(&vec![vec![28, 5]], 0).is_err());
        assert!(init_model(&vec![], 0).is_err());
        assert!(SmlpModel::init(&vec![vec![3]], 0).is_err());
    }

    #[test]
    fn activations_follow_position() {
        let m = init_model(&default_architecture(), 0).unwrap();
        let acts: Vec<_> = m.layers().map(|l| l.spec.activation).collect();
        assert_eq!(acts.len(), 6);
        assert!(acts[..5].iter().all(|&a| a == Activation::Relu));
        assert_eq!(acts[5], Activation::Identity);
        assert_eq!(m.layer_units(), vec![0, 0, 1, 1, 2, 2]);
        assert_eq!(m.architecture(), default_architecture());
    }

    #[test]
    fn architecture_strings() {
        let a = parse_architecture("28-64-64;64-64-64;64-32-6").unwrap();
        assert_eq!(a, default_architecture());
        assert_eq!(format_architecture(&a), "28-64-64;64-64-64;64-32-6");
        assert!(parse_architecture("28-x-6").is_err());
    }

    #[test]
    fn identity_padded_model_on_zero_input_is_uniform() {
        let spec = LayerSpec {
            input_dim: 28,
            output_dim: 6,
            activation: Activation::Identity,
        };
        let mut layer = Dense::zeros(spec);
        for i in 0..6 {
            layer.weights[i * 28 + i] = 1.0;
        }
        let m = SmlpModel::from_units(vec![MlpUnit { layers: vec![layer] }], 0).unwrap();
        let out = predict_proba(&m, &Matrix::zeros(1, 28)).unwrap();
        assert!(out.row(0).iter().all(|p| (p - 1.0 / 6.0).abs() < 1e-15));
        assert_eq!(predict(&m, &[0.0; 28]).unwrap(), EventClass::Anticipated);
    }

    #[test]
    fn identical_rows_give_identical_outputs() {
        let m = init_model(&default_architecture(), 3).unwrap();
        let x: Vec<f64> = (0..28).map(|i| (i as f64 * 0.37).sin()).collect();
        let out = predict_proba(&m, &Matrix::from_rows(&[x.clone(), x])).unwrap();
        assert_eq!(out.row(0), out.row(1));
    }

    #[test]
    fn batched_equals_single_rows() {
        let m = init_model(&default_architecture(), 4).unwrap();
        let xs: Vec<Vec<f64>> = (0..5)
            .map(|r| (0..28).map(|i| ((r * 28 + i) as f64 * 0.11).cos()).collect())
            .collect();
        let batched = rows(&predict_proba(&m, &Matrix::from_rows(&xs)).unwrap());
        for (x, b) in xs.iter().zip(&batched) {
            let single = predict_proba(&m, &Matrix::from_rows(&[x])).unwrap();
            for (p, q) in single.row(0).iter().zip(b) {
                assert!((p - q).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let m = init_model(&default_architecture(), 0).unwrap();
        assert!(forward(&m, &Matrix::zeros(2, 27)).is_err());
    }

    #[test]
    fn single_linear_layer_gradient_closed_form() {
        let spec = LayerSpec {
            input_dim: 3,
            output_dim: 2,
            activation: Activation::Identity,
        };
        let layer = Dense {
            spec,
            weights: vec![0.2, -0.1, 0.4, 0.3, 0.5, -0.2],
            bias: vec![0.1, -0.1],
        };
        let m = SmlpModel::from_units(vec![MlpUnit { layers: vec![layer] }], 0).unwrap();
        let x = [1.0, 2.0, -1.0];
        let cache = forward(&m, &Matrix::from_rows(&[x])).unwrap();
        let g = backward(&m, &cache, &[1], None).unwrap();
        let p = cache.probabilities.row(0).to_vec();
        let diff = [p[0], p[1] - 1.0];
        for o in 0..2 {
            for i in 0..3 {
                assert!((g.layers[0].weights[o * 3 + i] - diff[o] * x[i]).abs() < 1e-15);
            }
            assert!((g.layers[0].bias[o] - diff[o]).abs() < 1e-15);
        }
    }

    #[test]
    fn confident_correct_prediction_has_vanishing_gradient() {
        let spec = LayerSpec {
            input_dim: 2,
            output_dim: 3,
            activation: Activation::Identity,
        };
        let layer = Dense {
            spec,
            weights: vec![0.0; 6],
            bias: vec![-50.0, 50.0, -50.0],
        };
        let m = SmlpModel::from_units(vec![MlpUnit { layers: vec![layer] }], 0).unwrap();
        let cache = forward(&m, &Matrix::from_rows(&[[1.0, -1.0]])).unwrap();
        let g = backward(&m, &cache, &[1], None).unwrap();
        assert!(g.max_abs() < 1e-40);
    }

    #[test]
    fn backward_rejects_mismatched_labels() {
        let m = init_model(&default_architecture(), 0).unwrap();
        let cache = forward(&m, &Matrix::zeros(2, 28)).unwrap();
        assert!(backward(&m, &cache, &[0], None).is_err());
        assert!(backward(&m, &cache, &[0, 9], None).is_err());
    }
}
