//! Criterion benchmarks for `hawkes-core`; the code lives under `benches/`.
