//! The seven learning methods: plain, momentum and Nesterov SGD, each with a
//! constant or gradually decreasing learning rate, plus Adam.
//!
//! Nesterov methods follow a lookahead-gradient contract: the caller asks
//! [`lookahead`] for the point `θ + μv`, computes the gradient there, and
//! hands it to [`apply_update`]. The update itself is then the ordinary
//! momentum recurrence.

use std::fmt;
use std::str::FromStr;

use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::network::{GradientSet, SmlpModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    ConstantSgd,
    DecayedSgd,
    ConstantMomentum,
    DecayedMomentum,
    ConstantNesterov,
    DecayedNesterov,
    Adam,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::ConstantSgd,
        Method::DecayedSgd,
        Method::ConstantMomentum,
        Method::DecayedMomentum,
        Method::ConstantNesterov,
        Method::DecayedNesterov,
        Method::Adam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::ConstantSgd => "constant-sgd",
            Method::DecayedSgd => "decayed-sgd",
            Method::ConstantMomentum => "constant-momentum",
            Method::DecayedMomentum => "decayed-momentum",
            Method::ConstantNesterov => "constant-nesterov",
            Method::DecayedNesterov => "decayed-nesterov",
            Method::Adam => "adam",
        }
    }

    fn is_decayed(self) -> bool {
        matches!(self, Method::DecayedSgd | Method::DecayedMomentum | Method::DecayedNesterov)
    }

    fn uses_velocity(self) -> bool {
        matches!(
            self,
            Method::ConstantMomentum | Method::DecayedMomentum | Method::ConstantNesterov | Method::DecayedNesterov
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::config(format!("unknown optimizer '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerSpec {
    pub method: Method,
    pub alpha: f64,
    pub momentum: f64,
    /// Per-step rate of the inverse-scaling schedule `α / (1 + rate·t)`.
    pub decay_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        OptimizerSpec {
            method: Method::Adam,
            alpha: 1e-3,
            momentum: 0.9,
            decay_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl OptimizerSpec {
    pub fn new(method: Method) -> Self {
        OptimizerSpec {
            method,
            ..Self::default()
        }
    }

    /// Overlay `optim.*` keys from `cfg` onto the defaults.
    pub fn from_config(cfg: &mut KvConfig) -> Result<Self> {
        let mut spec = Self::default();
        cfg.take_into("optim.method", &mut spec.method)?;
        cfg.take_into("optim.alpha", &mut spec.alpha)?;
        cfg.take_into("optim.momentum", &mut spec.momentum)?;
        cfg.take_into("optim.decay_rate", &mut spec.decay_rate)?;
        cfg.take_into("optim.beta1", &mut spec.beta1)?;
        cfg.take_into("optim.beta2", &mut spec.beta2)?;
        cfg.take_into("optim.epsilon", &mut spec.epsilon)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.alpha.is_finite()
            && (0.0..1.0).contains(&self.momentum)
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.decay_rate >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid optimizer settings {self:?}")))
        }
    }
}

/// Learning rate at step `t`.
pub fn lr_at(spec: &OptimizerSpec, t: u64) -> f64 {
    if spec.method.is_decayed() {
        spec.alpha / (1.0 + spec.decay_rate * t as f64)
    } else {
        spec.alpha
    }
}

pub fn needs_lookahead(spec: &OptimizerSpec) -> bool {
    matches!(spec.method, Method::ConstantNesterov | Method::DecayedNesterov)
}

/// Step counter and per-parameter moment buffers, in the model's tensor order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct OptimizerState {
    pub step: u64,
    /// Velocity (momentum methods) or first moment (Adam).
    pub first: Vec<Vec<f64>>,
    /// Second moment (Adam only).
    pub second: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(model: &SmlpModel) -> Self {
        let zeros: Vec<Vec<f64>> = model.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        OptimizerState {
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }
}

fn check_shapes(state: &OptimizerState, model: &SmlpModel, grads: &GradientSet) -> Result<()> {
    let params = model.tensors();
    let g = grads.tensors();
    let same = |bufs: &[Vec<f64>]| bufs.len() == params.len() && bufs.iter().zip(&params).all(|(b, p)| b.len() == p.len());
    if g.len() != params.len() || g.iter().zip(&params).any(|(a, b)| a.len() != b.len()) {
        return Err(Error::Shape("gradient shapes do not match the model".into()));
    }
    if !same(&state.first) || !same(&state.second) {
        return Err(Error::Shape("optimizer state does not match the model".into()));
    }
    for (i, t) in g.iter().enumerate() {
        if t.iter().any(|v| !v.is_finite()) {
            let kind = if i % 2 == 0 { "weights" } else { "bias" };
            return Err(Error::Divergence(format!("non-finite gradient in layer {} {kind}", i / 2)));
        }
    }
    Ok(())
}

/// The parameters at which Nesterov methods evaluate their gradient.
pub fn lookahead(spec: &OptimizerSpec, state: &OptimizerState, model: &SmlpModel) -> SmlpModel {
    let mut ahead = model.clone();
    if state.first.len() == ahead.tensors().len() {
        for (p, v) in ahead.tensors_mut().into_iter().zip(&state.first) {
            for (pi, vi) in p.iter_mut().zip(v) {
                *pi += spec.momentum * vi;
            }
        }
    }
    ahead
}

/// One update of every parameter, in place. The step counter advances by one.
pub fn apply_update(
    spec: &OptimizerSpec,
    state: &mut OptimizerState,
    model: &mut SmlpModel,
    grads: &GradientSet,
) -> Result<()> {
    apply_update_masked(spec, state, model, grads, None)
}

/// As [`apply_update`], touching only the layers whose entry in
/// `layer_mask` is true.
pub fn apply_update_masked(
    spec: &OptimizerSpec,
    state: &mut OptimizerState,
    model: &mut SmlpModel,
    grads: &GradientSet,
    layer_mask: Option<&[bool]>,
) -> Result<()> {
    check_shapes(state, model, grads)?;
    let lr = lr_at(spec, state.step);
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - spec.beta1.powi(t);
    let bias2 = 1.0 - spec.beta2.powi(t);

    let grad_tensors = grads.tensors();
    let params = model.tensors_mut();
    for (i, ((p, g), (m, v))) in params
        .into_iter()
        .zip(grad_tensors)
        .zip(state.first.iter_mut().zip(state.second.iter_mut()))
        .enumerate()
    {
        if layer_mask.is_some_and(|mask| !mask.get(i / 2).copied().unwrap_or(false)) {
            continue;
        }
        match spec.method {
            Method::ConstantSgd | Method::DecayedSgd => {
                for (pi, gi) in p.iter_mut().zip(g) {
                    *pi -= lr * gi;
                }
            }
            method if method.uses_velocity() => {
                for ((pi, gi), vi) in p.iter_mut().zip(g).zip(m.iter_mut()) {
                    *vi = spec.momentum * *vi - lr * gi;
                    *pi += *vi;
                }
            }
            _ => {
                for (((pi, gi), mi), vi) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                    *mi = spec.beta1 * *mi + (1.0 - spec.beta1) * gi;
                    *vi = spec.beta2 * *vi + (1.0 - spec.beta2) * gi * gi;
                    let m_hat = *mi / bias1;
                    let v_hat = *vi / bias2;
                    *pi -= spec.alpha * m_hat / (v_hat.sqrt() + spec.epsilon);
                }
            }
        }
    }
    Ok(())
}
