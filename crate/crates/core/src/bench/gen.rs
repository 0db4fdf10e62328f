//! Random instance generation by rejection sampling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::collision::Sweep;
use crate::error::BenchError;
use crate::geometry::{SphereObstacle, Vec3};
use crate::instance::{Instance, Robot};
use crate::roadmap::{init_roadmap, InitConfig};
use crate::robots::{RobotModel, Scenario, State};

/// Give up after this many rejected rounds.
pub const MAX_ROUNDS: usize = 100_000;

/// Attempts to place one robot's start and goal before the round restarts.
const PLACEMENT_TRIES: usize = 200;

/// Sampling budget of the solo reachability screen.
const SOLO_BUDGET: usize = 5_000;
const SOLO_EPS: f64 = 0.2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityProfile {
    #[default]
    Standard,
    /// Many small robots.
    Scalability,
}

/// Closed ranges `[lo, hi]` from which per-robot and obstacle parameters
/// are drawn uniformly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub obstacles: usize,
    pub obstacle_radius: (f64, f64),
    pub robot_radius: (f64, f64),
    /// Per link or body length; unused for points and Dubins cars.
    pub length: (f64, f64),
    pub turning_radius: (f64, f64),
    /// Arm roots are drawn inside `[lo, hi]` per axis.
    pub root_box: (f64, f64),
}

impl ScenarioConfig {
    pub fn defaults(scenario: Scenario, profile: DensityProfile) -> Self {
        let base = ScenarioConfig {
            obstacles: 8,
            obstacle_radius: (0.03, 0.1),
            robot_radius: (0.04, 0.08),
            length: (0.0, 0.0),
            turning_radius: (0.0, 0.0),
            root_box: (0.0, 0.0),
        };
        let cfg = match scenario {
            Scenario::Point2d => base,
            Scenario::Point3d => ScenarioConfig {
                obstacle_radius: (0.05, 0.15),
                robot_radius: (0.04, 0.08),
                ..base
            },
            Scenario::Line2d => ScenarioConfig {
                robot_radius: (0.01, 0.02),
                length: (0.06, 0.14),
                ..base
            },
            Scenario::Capsule3d => ScenarioConfig {
                obstacle_radius: (0.05, 0.15),
                robot_radius: (0.02, 0.04),
                length: (0.06, 0.14),
                ..base
            },
            Scenario::Arm22 => ScenarioConfig {
                obstacles: 6,
                robot_radius: (0.01, 0.02),
                length: (0.06, 0.1),
                root_box: (0.2, 0.8),
                ..base
            },
            Scenario::Arm33 => ScenarioConfig {
                obstacles: 6,
                obstacle_radius: (0.05, 0.12),
                robot_radius: (0.01, 0.02),
                length: (0.07, 0.1),
                root_box: (0.3, 0.7),
                ..base
            },
            Scenario::Dubins2d => ScenarioConfig {
                robot_radius: (0.02, 0.035),
                turning_radius: (0.05, 0.1),
                ..base
            },
            Scenario::Snake2d => ScenarioConfig {
                robot_radius: (0.008, 0.012),
                length: (0.035, 0.055),
                ..base
            },
        };
        match profile {
            DensityProfile::Standard => cfg,
            DensityProfile::Scalability => {
                let shrink = |(lo, hi): (f64, f64)| (lo * 0.625, hi * 0.625);
                ScenarioConfig {
                    robot_radius: shrink(cfg.robot_radius),
                    length: shrink(cfg.length),
                    ..cfg
                }
            }
        }
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

fn point<R: Rng>(rng: &mut R, dims: usize, range: (f64, f64)) -> Vec3 {
    let mut c = [0.0; 3];
    for v in c.iter_mut().take(dims) {
        *v = uniform(rng, range);
    }
    Vec3::new(c[0], c[1], c[2])
}

fn draw_model<R: Rng>(rng: &mut R, scenario: Scenario, cfg: &ScenarioConfig) -> RobotModel {
    let r = uniform(rng, cfg.robot_radius);
    let mut len = || uniform(rng, cfg.length);
    match scenario {
        Scenario::Point2d => RobotModel::point2d(r),
        Scenario::Point3d => RobotModel::point3d(r),
        Scenario::Line2d => RobotModel::line2d(len(), r),
        Scenario::Capsule3d => RobotModel::capsule3d(len(), r),
        Scenario::Arm22 => {
            let lengths = [len(), len()];
            RobotModel::arm22(point(rng, 2, cfg.root_box), lengths, r)
        }
        Scenario::Arm33 => {
            let lengths = [len(), len(), len()];
            RobotModel::arm33(point(rng, 3, cfg.root_box), lengths, r)
        }
        Scenario::Dubins2d => RobotModel::dubins2d(r, uniform(rng, cfg.turning_radius)),
        Scenario::Snake2d => RobotModel::snake2d([len(), len(), len(), len()], r),
    }
}

fn overlaps_any(model: &RobotModel, q: &State, placed: &[(RobotModel, State)]) -> bool {
    let body = Sweep::stationary(model, q);
    placed
        .iter()
        .any(|(m, p)| body.intersects(&Sweep::stationary(m, p)))
}

/// At least one pair of robots whose direct start-to-goal motions cross.
fn dense_enough(robots: &[Robot]) -> bool {
    let sweeps: Vec<Sweep> = robots
        .iter()
        .map(|r| Sweep::motion(&r.model, &r.start, &r.goal))
        .collect();
    (0..sweeps.len()).any(|i| (i + 1..sweeps.len()).any(|j| sweeps[i].intersects(&sweeps[j])))
}

fn try_round<R: Rng>(
    rng: &mut R,
    scenario: Scenario,
    n: usize,
    cfg: &ScenarioConfig,
) -> Option<Instance> {
    let dims = scenario.workspace_dim().count();
    let obstacles: Vec<SphereObstacle> = (0..cfg.obstacles)
        .map(|_| SphereObstacle {
            center: point(rng, dims, (0.0, 1.0)),
            radius: uniform(rng, cfg.obstacle_radius),
        })
        .collect();
    let mut robots: Vec<Robot> = Vec::with_capacity(n);
    let mut starts: Vec<(RobotModel, State)> = Vec::with_capacity(n);
    let mut goals: Vec<(RobotModel, State)> = Vec::with_capacity(n);
    for _ in 0..n {
        let model = draw_model(rng, scenario, cfg);
        let place = |rng: &mut R, placed: &[(RobotModel, State)]| {
            (0..PLACEMENT_TRIES)
                .map(|_| model.sample(rng))
                .find(|q| model.is_valid(q, &obstacles) && !overlaps_any(&model, q, placed))
        };
        let start = place(rng, &starts)?;
        let goal = place(rng, &goals)?;
        starts.push((model.clone(), start.clone()));
        goals.push((model.clone(), goal.clone()));
        robots.push(Robot { model, start, goal });
    }
    if n >= 2 && !dense_enough(&robots) {
        return None;
    }
    // drop obviously unsolvable instances, e.g. a car parked nose-first
    // against an obstacle
    let solo = InitConfig {
        eps: SOLO_EPS,
        budget: SOLO_BUDGET,
        deadline: None,
    };
    if !robots
        .iter()
        .all(|r| init_roadmap(&r.model, &r.start, &r.goal, &obstacles, rng, solo).is_ok())
    {
        return None;
    }
    Some(Instance {
        id: String::new(),
        scenario,
        robots,
        obstacles,
        seed: 0,
    })
}

/// Deterministic instance for `(scenario, n, seed, profile)`.
pub fn gen_instance(
    scenario: Scenario,
    n: usize,
    seed: u64,
    profile: DensityProfile,
) -> Result<Instance, BenchError> {
    gen_instance_with(
        scenario,
        n,
        seed,
        &ScenarioConfig::defaults(scenario, profile),
    )
}

pub fn gen_instance_with(
    scenario: Scenario,
    n: usize,
    seed: u64,
    cfg: &ScenarioConfig,
) -> Result<Instance, BenchError> {
    if n == 0 {
        return Err(BenchError::Invalid("N must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ROUNDS {
        if let Some(mut inst) = try_round(&mut rng, scenario, n, cfg) {
            inst.id = format!("{scenario}-n{n}-s{seed}");
            inst.seed = seed;
            return Ok(inst);
        }
    }
    Err(BenchError::GenerationFailure { rounds: MAX_ROUNDS })
}

/// `count` instances with `N` drawn uniformly from `n_range` (inclusive),
/// seeds `seed, seed + 1, ...`.
pub fn gen_suite(
    scenario: Scenario,
    n_range: (usize, usize),
    count: usize,
    seed: u64,
    profile: DensityProfile,
) -> Result<Vec<Instance>, BenchError> {
    gen_suite_with(
        scenario,
        n_range,
        count,
        seed,
        &ScenarioConfig::defaults(scenario, profile),
    )
}

pub fn gen_suite_with(
    scenario: Scenario,
    n_range: (usize, usize),
    count: usize,
    seed: u64,
    cfg: &ScenarioConfig,
) -> Result<Vec<Instance>, BenchError> {
    if n_range.0 > n_range.1 {
        return Err(BenchError::Invalid(format!(
            "empty robot-count range {}..={}",
            n_range.0, n_range.1
        )));
    }
    let mut picker = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..count as u64)
        .map(|k| {
            let n = picker.gen_range(n_range.0..=n_range.1);
            gen_instance_with(scenario, n, seed.wrapping_add(k), cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_json() {
        let a = gen_instance(Scenario::Point2d, 4, 17, DensityProfile::Standard).unwrap();
        let b = gen_instance(Scenario::Point2d, 4, 17, DensityProfile::Standard).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn generated_instances_are_valid() {
        for sc in Scenario::ALL {
            let inst = gen_instance(sc, 3, 5, DensityProfile::Standard).unwrap();
            inst.validate().unwrap_or_else(|e| panic!("{sc}: {e}"));
        }
    }

    #[test]
    fn point2d_starts_are_separated() {
        for seed in 0..20 {
            let inst = gen_instance(Scenario::Point2d, 8, seed, DensityProfile::Standard).unwrap();
            for i in 0..8 {
                for j in i + 1..8 {
                    let (a, b) = (&inst.robots[i], &inst.robots[j]);
                    let d = ((a.start[0] - b.start[0]).powi(2) + (a.start[1] - b.start[1]).powi(2))
                        .sqrt();
                    assert!(d >= a.model.radius + b.model.radius);
                }
            }
        }
    }
}
