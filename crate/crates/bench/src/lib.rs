//! Benchmarks for the hot paths live in `benches/`.
