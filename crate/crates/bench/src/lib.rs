//! Criterion benchmarks for the sweep kernel; see `benches/`.
