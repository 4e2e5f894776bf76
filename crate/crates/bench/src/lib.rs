//! Criterion benchmarks for the posterior engine live under `benches/`.
