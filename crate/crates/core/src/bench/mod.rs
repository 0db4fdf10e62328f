//! Instance generation, independent verification, benchmark running,
//! parameter tuning, rendering and reporting.

pub mod docs;
pub mod gen;
pub mod render;
pub mod report;
pub mod runner;
pub mod tune;
pub mod verify;

pub use docs::{Metrics, RoadmapsDoc, SolutionDoc};
pub use gen::{
    gen_instance, gen_instance_with, gen_suite, gen_suite_with, DensityProfile, ScenarioConfig,
};
pub use render::render;
pub use report::{summarize, Summary};
pub use runner::{
    run_one, run_solver, run_suite, BenchResult, Outcome, SolverKind, SolverParams, SuiteConfig,
};
pub use tune::{tune, TuneLog, TuneSpec};
pub use verify::{verify, Violation};
