//! Random-search hyperparameter tuning.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::gen::{gen_suite, DensityProfile};
use super::runner::{run_suite, BenchResult, SolverKind, SolverParams, SuiteConfig};
use crate::baselines::BaselineParams;
use crate::error::BenchError;
use crate::instance::Instance;
use crate::robots::Scenario;

/// Range of one parameter, addressed by its path in the params file
/// (`sssp.theta`, `baseline.eps`, ...).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub path: String,
    pub lo: f64,
    pub hi: f64,
    /// Draw integers in `[lo, hi]`.
    #[serde(default)]
    pub integer: bool,
    /// Draw uniformly in log space.
    #[serde(default)]
    pub log: bool,
}

impl ParamRange {
    fn new(path: &str, lo: f64, hi: f64) -> Self {
        ParamRange {
            path: path.into(),
            lo,
            hi,
            integer: false,
            log: false,
        }
    }

    fn int(path: &str, lo: f64, hi: f64) -> Self {
        ParamRange {
            integer: true,
            ..Self::new(path, lo, hi)
        }
    }

    fn log(path: &str, lo: f64, hi: f64) -> Self {
        ParamRange {
            log: true,
            ..Self::new(path, lo, hi)
        }
    }

    fn draw(&self, rng: &mut impl Rng) -> Value {
        if self.integer {
            return Value::from(rng.gen_range(self.lo.round() as u64..=self.hi.round() as u64));
        }
        let x = if self.log {
            rng.gen_range(self.lo.ln()..=self.hi.ln()).exp()
        } else {
            rng.gen_range(self.lo..=self.hi)
        };
        Value::from(x)
    }
}

/// Ranges searched by default for each solver.
pub fn default_ranges(solver: SolverKind) -> Vec<ParamRange> {
    match solver {
        SolverKind::Sssp => vec![
            ParamRange::int("sssp.m", 1.0, 30.0),
            ParamRange::log("sssp.theta", 0.005, 0.2),
            ParamRange::new("sssp.gamma", 0.5, 0.95),
            ParamRange::new("sssp.eps", 0.05, 0.5),
        ],
        SolverKind::Prm => vec![
            ParamRange::new("baseline.eps", 0.05, 0.5),
            ParamRange::int("baseline.prm_k", 3.0, 30.0),
            ParamRange::int("baseline.prm_batch", 10.0, 200.0),
        ],
        SolverKind::Rrt => {
            vec![
                ParamRange::new("baseline.eps", 0.05, 0.5),
                ParamRange::new("baseline.goal_bias", 0.0, 0.3),
            ]
        }
        SolverKind::Rrtc => vec![ParamRange::new("baseline.eps", 0.05, 0.5)],
        SolverKind::Pp | SolverKind::Cbs => vec![
            ParamRange::int("baseline.roadmap_samples", 100.0, 2000.0),
            ParamRange::new("baseline.roadmap_radius", 0.05, 0.4),
        ],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneSpec {
    pub solver: SolverKind,
    pub scenario: Scenario,
    pub ranges: Vec<ParamRange>,
    pub trials: usize,
    pub instances: usize,
    /// Seconds per run.
    pub time_limit: f64,
    /// Robot counts of the tuning instances, inclusive.
    pub n_range: (usize, usize),
    pub profile: DensityProfile,
    pub workers: usize,
}

impl TuneSpec {
    pub fn new(solver: SolverKind, scenario: Scenario) -> Self {
        TuneSpec {
            solver,
            scenario,
            ranges: default_ranges(solver),
            trials: 100,
            instances: 50,
            time_limit: 30.0,
            n_range: (2, 8),
            profile: DensityProfile::Standard,
            workers: 1,
        }
    }

    /// Parameters the draws are applied on top of.
    pub fn base_params(&self) -> SolverParams {
        SolverParams {
            baseline: Some(BaselineParams::for_scenario(self.scenario)),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    /// Drawn value per range path.
    pub values: Vec<(String, Value)>,
    pub params: SolverParams,
    pub solved: usize,
    /// Mean wall time over all runs of the trial, timeouts included.
    pub mean_runtime: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneLog {
    pub spec: TuneSpec,
    pub seed: u64,
    pub instance_ids: Vec<String>,
    pub trials: Vec<Trial>,
    pub best: Option<usize>,
}

impl TuneLog {
    pub fn best_params(&self) -> Option<&SolverParams> {
        self.best.map(|b| &self.trials[b].params)
    }
}

/// Set `path` (dot separated) in the JSON form of `params`.
pub fn apply(params: &SolverParams, path: &str, value: Value) -> Result<SolverParams, BenchError> {
    let mut doc = serde_json::to_value(params)?;
    let mut slot = &mut doc;
    for key in path.split('.') {
        slot = slot
            .as_object_mut()
            .and_then(|o| o.get_mut(key))
            .ok_or_else(|| BenchError::Invalid(format!("unknown parameter `{path}`")))?;
    }
    *slot = value;
    Ok(serde_json::from_value(doc)?)
}

/// Winner: most solved, then lowest mean runtime, then earliest trial.
pub fn best_trial(trials: &[Trial]) -> Option<usize> {
    (0..trials.len()).min_by(|&a, &b| {
        let (x, y) = (&trials[a], &trials[b]);
        y.solved
            .cmp(&x.solved)
            .then(x.mean_runtime.total_cmp(&y.mean_runtime))
            .then(a.cmp(&b))
    })
}

pub fn evaluate(
    solver: SolverKind,
    params: &SolverParams,
    instances: &[Instance],
    time_limit: f64,
    workers: usize,
    seed: u64,
) -> Result<Vec<BenchResult>, BenchError> {
    let cfg = SuiteConfig {
        time_limit,
        workers,
        seed,
        params: params.clone(),
        metrics: false,
    };
    run_suite(instances, &[solver], &cfg, None)
}

/// Random search: every trial runs on the same freshly generated instances.
/// `progress` sees each finished trial.
pub fn tune(
    spec: &TuneSpec,
    seed: u64,
    mut progress: impl FnMut(&Trial),
) -> Result<TuneLog, BenchError> {
    let instances = gen_suite(
        spec.scenario,
        spec.n_range,
        spec.instances,
        seed,
        spec.profile,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7475_6e65);
    let base = spec.base_params();
    let mut trials = Vec::with_capacity(spec.trials);
    for index in 0..spec.trials {
        let mut params = base.clone();
        let mut values = Vec::new();
        for r in &spec.ranges {
            let v = r.draw(&mut rng);
            params = apply(&params, &r.path, v.clone())?;
            values.push((r.path.clone(), v));
        }
        let results = evaluate(
            spec.solver,
            &params,
            &instances,
            spec.time_limit,
            spec.workers,
            seed,
        )?;
        let solved = results
            .iter()
            .filter(|r| r.solved() && r.violations == 0)
            .count();
        let mean_runtime = if results.is_empty() {
            0.0
        } else {
            results.iter().map(|r| r.wall_time).sum::<f64>() / results.len() as f64
        };
        let trial = Trial {
            index,
            values,
            params,
            solved,
            mean_runtime,
        };
        progress(&trial);
        trials.push(trial);
    }
    let best = best_trial(&trials);
    Ok(TuneLog {
        spec: spec.clone(),
        seed,
        instance_ids: instances.iter().map(|i| i.id.clone()).collect(),
        trials,
        best,
    })
}

pub fn write_log(log: &TuneLog, path: &Path) -> Result<(), BenchError> {
    std::fs::write(path, serde_json::to_string_pretty(log)?).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(index: usize, solved: usize, mean_runtime: f64) -> Trial {
        Trial {
            index,
            values: vec![],
            params: SolverParams::default(),
            solved,
            mean_runtime,
        }
    }

    #[test]
    fn single_trial_wins() {
        assert_eq!(best_trial(&[trial(0, 0, 9.0)]), Some(0));
        assert_eq!(best_trial(&[]), None);
    }

    #[test]
    fn ties_break_on_runtime() {
        let t = [trial(0, 5, 2.0), trial(1, 5, 1.0), trial(2, 4, 0.1)];
        assert_eq!(best_trial(&t), Some(1));
        let t = [trial(0, 5, 1.0), trial(1, 6, 3.0)];
        assert_eq!(best_trial(&t), Some(1));
    }

    #[test]
    fn apply_sets_nested_fields() {
        let p = SolverParams {
            baseline: Some(BaselineParams::default()),
            ..Default::default()
        };
        let p = apply(&p, "sssp.m", Value::from(7u64)).unwrap();
        let p = apply(&p, "baseline.eps", Value::from(0.3)).unwrap();
        assert_eq!(p.sssp.m, 7);
        assert_eq!(p.baseline.unwrap().eps, 0.3);
        assert!(apply(&SolverParams::default(), "sssp.nope", Value::from(1)).is_err());
    }

    #[test]
    fn draws_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for solver in SolverKind::ALL {
            for r in default_ranges(solver) {
                for _ in 0..100 {
                    let v = r.draw(&mut rng).as_f64().unwrap();
                    assert!(v >= r.lo && v <= r.hi, "{} = {v}", r.path);
                    if r.integer {
                        assert_eq!(v.fract(), 0.0);
                    }
                }
                // every default path exists in the params file
                apply(
                    &TuneSpec::new(solver, Scenario::Point2d).base_params(),
                    &r.path,
                    r.draw(&mut rng),
                )
                .unwrap();
            }
        }
    }

    #[test]
    fn tiny_tune_is_deterministic() {
        let spec = TuneSpec {
            trials: 2,
            instances: 2,
            time_limit: 5.0,
            n_range: (2, 3),
            ..TuneSpec::new(SolverKind::Rrtc, Scenario::Point2d)
        };
        let a = tune(&spec, 3, |_| {}).unwrap();
        let b = tune(&spec, 3, |_| {}).unwrap();
        assert_eq!(a.trials.len(), 2);
        assert_eq!(a.instance_ids, b.instance_ids);
        let key = |l: &TuneLog| {
            l.trials
                .iter()
                .map(|t| (t.values.clone(), t.solved))
                .collect::<Vec<_>>()
        };
        assert_eq!(key(&a), key(&b));
        assert!(a.best.is_some());
    }
}
