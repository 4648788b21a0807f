//! Criterion benchmarks for `smlp-core`; run with `cargo bench -p smlp-bench`.
