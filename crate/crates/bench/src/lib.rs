//! Criterion benchmarks for the statistics, sampler and parsers; see `benches/`.
