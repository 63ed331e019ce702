//! Criterion benchmarks for wavaug live under `benches/`.
