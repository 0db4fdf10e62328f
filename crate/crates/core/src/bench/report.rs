//! Aggregation of benchmark results into summary tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::runner::{BenchResult, Outcome, SolverKind};
use crate::error::BenchError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolvedRow {
    pub solver: SolverKind,
    pub runs: usize,
    pub solved: usize,
    pub timeout: usize,
    pub init_failure: usize,
    pub crashed: usize,
    /// Solved runs whose solution failed verification.
    pub invalid: usize,
}

/// Mean with a two-sided 95% Student-t interval half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    /// Undefined for a single sample.
    pub ci95: Option<f64>,
}

impl MeanCi {
    pub fn of(xs: &[f64]) -> Option<Self> {
        let n = xs.len();
        if n == 0 {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Some(MeanCi { mean, ci95: None });
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("positive dof")
            .inverse_cdf(0.975);
        Some(MeanCi {
            mean,
            ci95: Some(t * (var / n as f64).sqrt()),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TravelRow {
    pub solver: SolverKind,
    pub instances: usize,
    pub total_travel_time: Option<MeanCi>,
    pub total_travel_time_normalized: Option<MeanCi>,
    pub makespan: Option<MeanCi>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub solved: Vec<SolvedRow>,
    /// Per solver, sorted wall times of solved runs: the i-th entry is the
    /// time by which i+1 instances were solved.
    pub curves: BTreeMap<SolverKind, Vec<f64>>,
    /// Instances solved (with metrics) by every solver present.
    pub solved_by_all: Vec<String>,
    pub travel_time: Vec<TravelRow>,
}

impl Summary {
    pub fn solved_count(&self, solver: SolverKind) -> usize {
        self.solved
            .iter()
            .find(|r| r.solver == solver)
            .map_or(0, |r| r.solved)
    }
}

pub fn summarize(results: &[BenchResult]) -> Summary {
    let solvers: BTreeSet<SolverKind> = results.iter().map(|r| r.solver).collect();
    let mut rows: BTreeMap<SolverKind, SolvedRow> = solvers
        .iter()
        .map(|&s| {
            (
                s,
                SolvedRow {
                    solver: s,
                    runs: 0,
                    solved: 0,
                    timeout: 0,
                    init_failure: 0,
                    crashed: 0,
                    invalid: 0,
                },
            )
        })
        .collect();
    let mut curves: BTreeMap<SolverKind, Vec<f64>> =
        solvers.iter().map(|&s| (s, Vec::new())).collect();
    for r in results {
        let row = rows.get_mut(&r.solver).expect("solver collected");
        row.runs += 1;
        match r.outcome {
            Outcome::Solved => {
                row.solved += 1;
                curves
                    .get_mut(&r.solver)
                    .expect("solver collected")
                    .push(r.wall_time);
            }
            Outcome::Timeout => row.timeout += 1,
            Outcome::InitFailure => row.init_failure += 1,
        }
        row.crashed += r.crashed as usize;
        row.invalid += (r.solved() && r.violations > 0) as usize;
    }
    for c in curves.values_mut() {
        c.sort_by(f64::total_cmp);
    }

    let usable = |r: &BenchResult| r.solved() && r.violations == 0 && r.metrics.is_some();
    let mut by_all: Option<BTreeSet<&str>> = None;
    for &s in &solvers {
        let ids: BTreeSet<&str> = results
            .iter()
            .filter(|r| r.solver == s && usable(r))
            .map(|r| r.instance_id.as_str())
            .collect();
        by_all = Some(match by_all {
            None => ids,
            Some(acc) => acc.intersection(&ids).copied().collect(),
        });
    }
    let by_all = by_all.unwrap_or_default();

    let travel_time = solvers
        .iter()
        .map(|&s| {
            // one entry per instance even if a results file holds reruns
            let mut seen = BTreeSet::new();
            let picked: Vec<&BenchResult> = results
                .iter()
                .filter(|r| r.solver == s && usable(r) && by_all.contains(r.instance_id.as_str()))
                .filter(|r| seen.insert(r.instance_id.as_str()))
                .collect();
            let m = |f: fn(&BenchResult) -> f64| {
                MeanCi::of(&picked.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            TravelRow {
                solver: s,
                instances: picked.len(),
                total_travel_time: m(|r| r.metrics.expect("usable").total_travel_time),
                total_travel_time_normalized: m(|r| {
                    r.metrics.expect("usable").total_travel_time_normalized
                }),
                makespan: m(|r| r.t.expect("solved") as f64),
            }
        })
        .collect();

    Summary {
        solved: rows.into_values().collect(),
        curves,
        solved_by_all: by_all.into_iter().map(String::from).collect(),
        travel_time,
    }
}

fn fmt_ci(c: Option<MeanCi>) -> String {
    match c {
        Some(MeanCi {
            mean,
            ci95: Some(ci),
        }) => format!("{mean:.6},{ci:.6}"),
        Some(MeanCi { mean, ci95: None }) => format!("{mean:.6},"),
        None => ",".into(),
    }
}

pub fn solved_csv(s: &Summary) -> String {
    let mut out = String::from("solver,runs,solved,timeout,init_failure,crashed,invalid\n");
    for r in &s.solved {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.solver, r.runs, r.solved, r.timeout, r.init_failure, r.crashed, r.invalid
        );
    }
    out
}

pub fn curves_csv(s: &Summary) -> String {
    let mut out = String::from("solver,time,solved\n");
    for (solver, times) in &s.curves {
        for (k, t) in times.iter().enumerate() {
            let _ = writeln!(out, "{solver},{t:.6},{}", k + 1);
        }
    }
    out
}

pub fn travel_time_csv(s: &Summary) -> String {
    let mut out = String::from(
        "solver,instances,ttt_mean,ttt_ci95,ttt_norm_mean,ttt_norm_ci95,T_mean,T_ci95\n",
    );
    for r in &s.travel_time {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.solver,
            r.instances,
            fmt_ci(r.total_travel_time),
            fmt_ci(r.total_travel_time_normalized),
            fmt_ci(r.makespan)
        );
    }
    out
}

/// Write `solved.csv`, `curves.csv`, `travel_time.csv` and `summary.json`.
pub fn write_tables(s: &Summary, dir: &Path) -> Result<(), BenchError> {
    let io = |p: &Path| {
        let path = p.display().to_string();
        move |source| BenchError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let files = [
        ("solved.csv", solved_csv(s)),
        ("curves.csv", curves_csv(s)),
        ("travel_time.csv", travel_time_csv(s)),
        ("summary.json", serde_json::to_string_pretty(s)?),
    ];
    for (name, text) in files {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(io(&p))?;
    }
    Ok(())
}
