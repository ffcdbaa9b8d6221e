//! Criterion benchmarks for the loglip kernels; see `benches/`.
