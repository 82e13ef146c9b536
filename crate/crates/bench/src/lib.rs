//! Criterion benchmarks for the estimator hot paths. See `benches/`.
