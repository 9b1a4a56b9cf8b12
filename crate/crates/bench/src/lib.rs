//! Benchmarks live in `benches/`; this crate only re-exports the solver.

pub use singular_limit;
