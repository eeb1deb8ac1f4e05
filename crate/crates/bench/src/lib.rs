//! Criterion benchmarks for `ppdg-core` kernels live in `benches/`.
