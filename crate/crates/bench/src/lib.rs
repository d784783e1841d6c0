//! Criterion benchmarks for the synthesis pipeline. See `benches/`.
