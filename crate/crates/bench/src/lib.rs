//! Criterion benchmarks for cellnas; see `benches/`.
