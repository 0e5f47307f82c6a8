//! Criterion benchmarks for the hypocert kernels; see `benches/`.
