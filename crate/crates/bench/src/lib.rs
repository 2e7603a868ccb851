//! Benchmark-only crate; see `benches/laplace.rs`.
