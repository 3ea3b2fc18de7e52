//! Criterion benchmarks for `cornea-core`; see `benches/`.
