mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smlp_core::network::{backward, forward, SmlpModel};
use smlp_core::Matrix;

/// Random stack of 1 to 3 units with small widths.
fn random_case(rng: &mut ChaCha8Rng, seed: u64) -> (SmlpModel, Matrix, Vec<usize>) {
    let units = rng.gen_range(1..=3);
    let classes = rng.gen_range(2..=6);
    let mut arch = Vec::new();
    let mut width = rng.gen_range(2..=6);
    for u in 0..units {
        let layers = rng.gen_range(1..=2);
        let mut widths = vec![width];
        for l in 0..layers {
            let last = u == units - 1 && l == layers - 1;
            widths.push(if last { classes } else { rng.gen_range(2..=7) });
        }
        width = *widths.last().unwrap();
        arch.push(widths);
    }
    let mut model = SmlpModel::init(&arch, seed).unwrap();
    common::randomize_biases(&mut model, rng);
    let rows = rng.gen_range(1..=5);
    let data = (0..rows * arch[0][0]).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let labels = (0..rows).map(|_| rng.gen_range(0..classes)).collect();
    (model, Matrix::from_vec(rows, arch[0][0], data), labels)
}

#[test]
fn backprop_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..20 {
        let (model, batch, labels) = random_case(&mut rng, case);
        let cache = forward(&model, &batch).unwrap();
        let analytic = backward(&model, &cache, &labels, None).unwrap();
        let numeric = common::numeric_gradient(&model, &batch, &labels, 1e-5);
        let err = common::max_relative_error(&analytic, &numeric, 1e-4);
        assert!(err < 1e-5, "case {case}: relative error {err:e} for {:?}", model.architecture());
    }
}
