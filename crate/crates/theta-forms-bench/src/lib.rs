//! Benchmark-only crate; see benches/main.rs.
