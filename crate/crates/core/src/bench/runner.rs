//! Running solvers over instance suites with a worker pool.

use std::fmt;
use std::fs::OpenOptions;
use std::io::{BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::docs::Metrics;
use super::verify::verify;
use crate::baselines::{cbs_solve, pp_solve, prm_solve, rrt_solve, rrtc_solve, BaselineParams};
use crate::error::{BenchError, SolveError};
use crate::instance::{Instance, Solution};
use crate::roadmap::Roadmap;
use crate::sssp::{self, SsspParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Sssp,
    Prm,
    Rrt,
    Rrtc,
    Pp,
    Cbs,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::Sssp,
        SolverKind::Prm,
        SolverKind::Rrt,
        SolverKind::Rrtc,
        SolverKind::Pp,
        SolverKind::Cbs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Sssp => "sssp",
            SolverKind::Prm => "prm",
            SolverKind::Rrt => "rrt",
            SolverKind::Rrtc => "rrtc",
            SolverKind::Pp => "pp",
            SolverKind::Cbs => "cbs",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| BenchError::Invalid(format!("unknown solver `{s}`")))
    }
}

/// Parameters of every solver; the contents of a `--params` file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub sssp: SsspParams,
    /// Falls back to the scenario defaults when absent.
    pub baseline: Option<BaselineParams>,
}

impl SolverParams {
    /// Copy with the time limit and seed of every solver overridden.
    pub fn with_run(&self, time_limit: f64, seed: u64) -> Self {
        let mut p = self.clone();
        p.sssp.time_limit = time_limit;
        p.sssp.seed = seed;
        if let Some(b) = &mut p.baseline {
            b.time_limit = time_limit;
            b.seed = seed;
        }
        p
    }

    pub fn baseline_for(&self, instance: &Instance) -> BaselineParams {
        self.baseline.clone().unwrap_or_else(|| BaselineParams {
            time_limit: self.sssp.time_limit,
            seed: self.sssp.seed,
            ..BaselineParams::for_scenario(instance.scenario)
        })
    }
}

/// Solution plus the SSSP roadmaps when available.
pub struct SolveOutput {
    pub solution: Solution,
    pub roadmaps: Option<Vec<Roadmap>>,
}

pub fn run_solver(
    kind: SolverKind,
    instance: &Instance,
    params: &SolverParams,
) -> Result<SolveOutput, SolveError> {
    let plain = |s: Solution| SolveOutput {
        solution: s,
        roadmaps: None,
    };
    let bp = || params.baseline_for(instance);
    match kind {
        SolverKind::Sssp => {
            let r = sssp::solve(instance, &params.sssp)?;
            Ok(SolveOutput {
                solution: r.solution,
                roadmaps: Some(r.roadmaps),
            })
        }
        SolverKind::Prm => prm_solve(instance, &bp()).map(plain),
        SolverKind::Rrt => rrt_solve(instance, &bp()).map(plain),
        SolverKind::Rrtc => rrtc_solve(instance, &bp()).map(plain),
        SolverKind::Pp => pp_solve(instance, &bp()).map(plain),
        SolverKind::Cbs => cbs_solve(instance, &bp()).map(plain),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Solved,
    Timeout,
    InitFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub instance_id: String,
    pub solver: SolverKind,
    pub n: usize,
    pub outcome: Outcome,
    /// Seconds.
    pub wall_time: f64,
    pub seed: u64,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
    /// Verifier violations of the returned solution; zero unless broken.
    #[serde(default)]
    pub violations: usize,
    /// The worker panicked.
    #[serde(default)]
    pub crashed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl BenchResult {
    pub fn solved(&self) -> bool {
        self.outcome == Outcome::Solved
    }

    /// Everything except timing, for comparing runs.
    pub fn outcome_key(&self) -> (String, SolverKind, Outcome, Option<usize>, usize, bool) {
        (
            self.instance_id.clone(),
            self.solver,
            self.outcome,
            self.t,
            self.violations,
            self.crashed,
        )
    }
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub time_limit: f64,
    pub workers: usize,
    pub seed: u64,
    pub params: SolverParams,
    /// Compute travel-time metrics for solved runs.
    pub metrics: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            time_limit: 300.0,
            workers: 1,
            seed: 0,
            params: SolverParams::default(),
            metrics: true,
        }
    }
}

/// Run, verify and measure one solver on one instance.
pub fn run_one(instance: &Instance, solver: SolverKind, cfg: &SuiteConfig) -> BenchResult {
    let params = cfg.params.with_run(cfg.time_limit, cfg.seed);
    let mut res = BenchResult {
        instance_id: instance.id.clone(),
        solver,
        n: instance.n(),
        outcome: Outcome::Timeout,
        wall_time: 0.0,
        seed: cfg.seed,
        t: None,
        metrics: None,
        violations: 0,
        crashed: false,
        error: None,
    };
    let start = Instant::now();
    let run = catch_unwind(AssertUnwindSafe(|| run_solver(solver, instance, &params)));
    res.wall_time = start.elapsed().as_secs_f64();
    match run {
        Ok(Ok(out)) => {
            let violations = verify(instance, &out.solution);
            res.outcome = Outcome::Solved;
            res.t = Some(out.solution.makespan());
            res.violations = violations.len();
            if let Some(v) = violations.first() {
                res.error = Some(format!("verifier: {v}"));
            } else if cfg.metrics {
                let m = catch_unwind(AssertUnwindSafe(|| {
                    Metrics::compute(
                        &out.solution,
                        &instance.models(),
                        &instance.obstacles,
                        cfg.seed,
                    )
                }));
                match m {
                    Ok(m) => res.metrics = Some(m),
                    Err(_) => res.error = Some("metric computation panicked".into()),
                }
            }
        }
        Ok(Err(SolveError::InitFailure { .. })) => res.outcome = Outcome::InitFailure,
        Ok(Err(SolveError::Timeout | SolveError::Exhausted)) => {}
        Ok(Err(e)) => res.error = Some(e.to_string()),
        Err(panic) => {
            res.crashed = true;
            res.error = Some(
                panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into()),
            );
        }
    }
    res
}

/// Every `(instance, solver)` pair on a pool of `cfg.workers` threads.
/// Results stream to `out` as JSON lines in completion order; the returned
/// list is in job order (instances outer, solvers inner).
pub fn run_suite(
    instances: &[Instance],
    solvers: &[SolverKind],
    cfg: &SuiteConfig,
    out: Option<&Path>,
) -> Result<Vec<BenchResult>, BenchError> {
    let jobs: Vec<(usize, SolverKind)> = (0..instances.len())
        .flat_map(|i| solvers.iter().map(move |&s| (i, s)))
        .collect();
    let mut writer = match out {
        Some(p) => {
            let f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(|source| BenchError::Io {
                    path: p.display().to_string(),
                    source,
                })?;
            Some((BufWriter::new(f), p))
        }
        None => None,
    };
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<BenchResult>> = vec![None; jobs.len()];
    let workers = cfg.workers.max(1).min(jobs.len().max(1));
    let (tx, rx) = mpsc::channel::<(usize, BenchResult)>();
    let mut io_error = None;
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, jobs) = (&next, &jobs);
            scope.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(i, solver)) = jobs.get(k) else {
                    break;
                };
                let r = run_one(&instances[i], solver, cfg);
                if tx.send((k, r)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (k, r) in rx {
            if let Some((w, p)) = &mut writer {
                let line = serde_json::to_string(&r).expect("result serializes");
                if let Err(source) = writeln!(w, "{line}").and_then(|_| w.flush()) {
                    io_error.get_or_insert(BenchError::Io {
                        path: p.display().to_string(),
                        source,
                    });
                }
            }
            slots[k] = Some(r);
        }
    });
    if let Some(e) = io_error {
        return Err(e);
    }
    Ok(slots
        .into_iter()
        .map(|r| r.expect("every job reports"))
        .collect())
}

/// Parse a JSON-lines results file.
pub fn read_results(path: &Path) -> Result<Vec<BenchResult>, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}
