//! Benchmark-only crate; see the `benches/` directory. The library itself is
//! intentionally empty.
