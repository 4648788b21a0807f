#![allow(dead_code)]

use smlp_core::network::{batch_loss, SmlpModel};
use smlp_core::{GradientSet, Matrix};

/// Cheapest two-state sequence by brute force over all `2^n` sequences.
///
/// Costs match the automaton: Poisson rates `mean` and `2 * mean`, entering
/// the elevated state (including at the start) costs `ln n`, leaving is
/// free. Among sequences within `1e-9` of the optimum, the one that is
/// smallest when read from the last bucket backwards (base before elevated)
/// is returned.
pub fn exhaustive_states(counts: &[u64]) -> Vec<bool> {
    let n = counts.len();
    let total: u64 = counts.iter().sum();
    if n == 0 || total == 0 {
        return vec![false; n];
    }
    let r0 = total as f64 / n as f64;
    let r1 = 2.0 * r0;
    let entry = (n as f64).ln();
    let cost = |r: f64, x: u64| r - x as f64 * r.ln();

    let total_cost = |mask: u32| {
        let mut c = 0.0;
        let mut prev = false;
        for (t, &x) in counts.iter().enumerate() {
            let s = mask >> t & 1 == 1;
            if s && !prev {
                c += entry;
            }
            c += if s { cost(r1, x) } else { cost(r0, x) };
            prev = s;
        }
        c
    };
    let costs: Vec<f64> = (0..1u32 << n).map(total_cost).collect();
    let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
    // bit t of the mask is bucket t, so reverse-lexicographic order is the
    // order of the bit-reversed mask
    let reversed = |m: u32| m.reverse_bits() >> (32 - n);
    let mask = (0..1u32 << n)
        .filter(|&m| costs[m as usize] <= best + 1e-9)
        .min_by_key(|&m| reversed(m))
        .expect("at least one sequence");
    (0..n).map(|t| mask >> t & 1 == 1).collect()
}

/// Central-difference gradient of the mean batch loss, in the model's tensor order.
pub fn numeric_gradient(model: &SmlpModel, batch: &Matrix, labels: &[usize], h: f64) -> Vec<Vec<f64>> {
    let shapes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
    let mut out = Vec::with_capacity(shapes.len());
    for (ti, &len) in shapes.iter().enumerate() {
        let mut g = vec![0.0; len];
        for (i, gi) in g.iter_mut().enumerate() {
            let mut plus = model.clone();
            plus.tensors_mut()[ti][i] += h;
            let mut minus = model.clone();
            minus.tensors_mut()[ti][i] -= h;
            let lp = batch_loss(&plus, batch, labels).unwrap();
            let lm = batch_loss(&minus, batch, labels).unwrap();
            *gi = (lp - lm) / (2.0 * h);
        }
        out.push(g);
    }
    out
}

/// Largest elementwise relative error between analytic and numeric
/// gradients. Entries where both are below `floor` in magnitude are
/// compared absolutely against `floor`.
pub fn max_relative_error(analytic: &GradientSet, numeric: &[Vec<f64>], floor: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, n) in analytic.tensors().iter().zip(numeric) {
        for (&x, &y) in a.iter().zip(n) {
            let scale = x.abs().max(y.abs());
            let err = if scale < floor { (x - y).abs() / floor } else { (x - y).abs() / scale };
            worst = worst.max(err);
        }
    }
    worst
}

/// Replace the zero initial biases with random ones so no pre-activation
/// sits exactly on the ReLU kink, where finite differences are meaningless.
pub fn randomize_biases(model: &mut SmlpModel, rng: &mut impl rand::Rng) {
    for (i, t) in model.tensors_mut().into_iter().enumerate() {
        if i % 2 == 1 {
            t.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
        }
    }
}
