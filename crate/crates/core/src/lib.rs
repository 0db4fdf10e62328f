//! Multi-robot motion planning: per-robot roadmaps grown during an
//! operator-decomposed best-first search, comparison solvers, schedule
//! smoothing and a benchmark harness.

pub mod baselines;
pub mod bench;
pub mod collision;
pub mod error;
pub mod geometry;
pub mod instance;
pub mod postprocess;
pub mod roadmap;
pub mod robots;
pub mod sssp;

pub use error::{BenchError, ModelError, SolveError};
