//! Criterion benchmarks for the `repcomp` hot paths; see `benches/`.
