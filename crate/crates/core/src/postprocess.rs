//! Temporal plan graphs, earliest-time scheduling, and dependency-preserving
//! shortcutting of synchronized solutions.
//!
//! Event `(i, k)` is robot `i` arriving at path index `k` and immediately
//! departing towards `k + 1`. Robots move at unit speed, so a motion lasts
//! as long as its trajectory is long.

use std::rc::Rc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::collision::Sweep;
use crate::geometry::SphereObstacle;
use crate::instance::Solution;
use crate::robots::{RobotModel, State};

/// Hard cap on the default shortcut budget.
pub const MAX_SHORTCUT_ITERATIONS: usize = 200_000;

/// Precedence constraint `t(to) >= t(from) + duration`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StnEdge {
    pub from: usize,
    pub to: usize,
    pub duration: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimpleTemporalNetwork {
    pub events: usize,
    pub edges: Vec<StnEdge>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemporalPlanGraph {
    robots: usize,
    /// Events per robot (`T + 1`).
    len: usize,
    /// Duration of motion `k -> k + 1` per robot.
    durations: Vec<Vec<f64>>,
    /// Inter-robot precedences `(from, to)` between event ids.
    deps: Vec<(usize, usize)>,
}

impl TemporalPlanGraph {
    pub fn event(&self, robot: usize, step: usize) -> usize {
        robot * self.len + step
    }

    pub fn events(&self) -> usize {
        self.robots * self.len
    }

    pub fn robots(&self) -> usize {
        self.robots
    }

    pub fn steps(&self) -> usize {
        self.len
    }

    /// Inter-robot precedences as `((robot, step), (robot, step))`.
    pub fn dependencies(&self) -> Vec<((usize, usize), (usize, usize))> {
        let split = |e: usize| (e / self.len, e % self.len);
        self.deps
            .iter()
            .map(|&(a, b)| (split(a), split(b)))
            .collect()
    }

    pub fn to_stn(&self) -> SimpleTemporalNetwork {
        let mut edges = Vec::with_capacity(self.events() + self.deps.len());
        for (i, ds) in self.durations.iter().enumerate() {
            for (k, &d) in ds.iter().enumerate() {
                edges.push(StnEdge {
                    from: self.event(i, k),
                    to: self.event(i, k + 1),
                    duration: d,
                });
            }
        }
        edges.extend(self.deps.iter().map(|&(from, to)| StnEdge {
            from,
            to,
            duration: 0.0,
        }));
        SimpleTemporalNetwork {
            events: self.events(),
            edges,
        }
    }

    /// Sum over robots of the earliest time of their final event.
    pub fn completion_time(&self) -> f64 {
        let times = earliest_schedule(&self.to_stn());
        (0..self.robots)
            .map(|i| times[self.event(i, self.len - 1)])
            .sum()
    }

    fn touched(&self) -> Vec<bool> {
        let mut t = vec![false; self.events()];
        for &(a, b) in &self.deps {
            t[a] = true;
            t[b] = true;
        }
        t
    }
}

/// Consecutive steps with the same motion share one sweep.
struct Runs {
    /// `(first step, last step, sweep)`.
    runs: Vec<(usize, usize, Rc<Sweep>)>,
}

impl Runs {
    fn new(model: &RobotModel, path: &[State]) -> Self {
        let mut runs: Vec<(usize, usize, Rc<Sweep>)> = Vec::new();
        for s in 0..path.len().saturating_sub(1) {
            let (a, b) = (&path[s], &path[s + 1]);
            if let Some(last) = runs.last_mut() {
                let (pa, pb) = (&path[last.1], &path[last.1 + 1]);
                if pa == a && pb == b {
                    last.1 = s;
                    continue;
                }
            }
            runs.push((s, s, Rc::new(Sweep::motion(model, a, b))));
        }
        Runs { runs }
    }
}

/// Precedences into robot `j`'s events from robot `i`: for every motion
/// `s'` of `j`, the latest earlier motion `s < s'` of `i` that overlaps it
/// must end before `s'` starts. Earlier overlapping motions follow through
/// `i`'s own chain.
fn deps_into(
    ri: &Runs,
    rj: &Runs,
    steps: usize,
    i: usize,
    j: usize,
    out: &mut Vec<(usize, usize)>,
) {
    let mut before = vec![usize::MAX; steps];
    for (a, b, si) in &ri.runs {
        for (c, d, sj) in &rj.runs {
            if d <= a || !si.intersects(sj) {
                continue;
            }
            for sp in (*c).max(a + 1)..=*d {
                let s = (*b).min(sp - 1);
                if before[sp] == usize::MAX || s > before[sp] {
                    before[sp] = s;
                }
            }
        }
    }
    let len = steps + 1;
    for (sp, &s) in before.iter().enumerate() {
        if s != usize::MAX {
            out.push((i * len + s + 1, j * len + sp));
        }
    }
}

fn durations(model: &RobotModel, path: &[State]) -> Vec<f64> {
    path.windows(2)
        .map(|w| {
            if w[0] == w[1] {
                0.0
            } else {
                model.trajectory(&w[0], &w[1]).length
            }
        })
        .collect()
}

/// Intra-robot chains plus an inter-robot precedence whenever two motions
/// at different timesteps overlap under the swept-region test; the motion
/// that came first in the synchronized solution must finish before the
/// other starts.
pub fn build_tpg(solution: &Solution, models: &[RobotModel]) -> TemporalPlanGraph {
    assert_eq!(solution.paths.len(), models.len(), "one path per robot");
    let len = solution.paths.first().map_or(1, Vec::len);
    assert!(
        len >= 1 && solution.paths.iter().all(|p| p.len() == len),
        "paths must be synchronized"
    );
    let runs: Vec<Runs> = models
        .iter()
        .zip(&solution.paths)
        .map(|(m, p)| Runs::new(m, p))
        .collect();
    let mut deps = Vec::new();
    for i in 0..models.len() {
        for j in 0..models.len() {
            if i != j {
                deps_into(&runs[i], &runs[j], len - 1, i, j, &mut deps);
            }
        }
    }
    TemporalPlanGraph {
        robots: models.len(),
        len,
        durations: models
            .iter()
            .zip(&solution.paths)
            .map(|(m, p)| durations(m, p))
            .collect(),
        deps,
    }
}

/// Earliest event times: longest paths from time zero under the lower
/// bounds. Zero-duration cycles (simultaneous events) are allowed.
///
/// # Panics
/// On a cycle of positive duration, which no temporal plan graph has.
pub fn earliest_schedule(stn: &SimpleTemporalNetwork) -> Vec<f64> {
    let n = stn.events;
    let mut indeg = vec![0usize; n];
    let mut out: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in &stn.edges {
        out[e.from].push((e.to, e.duration));
        indeg[e.to] += 1;
    }
    let mut t = vec![0.0f64; n];
    let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut done = 0;
    while let Some(u) = stack.pop() {
        done += 1;
        for &(v, d) in &out[u] {
            t[v] = t[v].max(t[u] + d);
            indeg[v] -= 1;
            if indeg[v] == 0 {
                stack.push(v);
            }
        }
    }
    if done == n {
        return t;
    }
    // zero-duration cycles: label-correcting relaxation from scratch
    let mut t = vec![0.0f64; n];
    for _ in 0..=n {
        let mut changed = false;
        for e in &stn.edges {
            let c = t[e.from] + e.duration;
            if c > t[e.to] + 1e-12 {
                t[e.to] = c;
                changed = true;
            }
        }
        if !changed {
            return t;
        }
    }
    panic!("temporal network has a positive cycle");
}

/// Completion time of the synchronized solution executed asynchronously
/// under its own temporal plan graph.
pub fn schedule_time(solution: &Solution, models: &[RobotModel]) -> f64 {
    build_tpg(solution, models).completion_time()
}

pub fn path_length(model: &RobotModel, path: &[State]) -> f64 {
    path.windows(2).map(|w| model.dist(&w[0], &w[1])).sum()
}

/// `100 x` total path steps, capped at [`MAX_SHORTCUT_ITERATIONS`].
pub fn default_iterations(solution: &Solution) -> usize {
    let steps: usize = solution
        .paths
        .iter()
        .map(|p| p.len().saturating_sub(1))
        .sum();
    steps.saturating_mul(100).min(MAX_SHORTCUT_ITERATIONS)
}

/// Repeatedly replace a robot's subpath `a..=b` by one direct motion
/// followed by waits at index `b`. An attempt is kept only if
///
/// - the direct motion is obstacle-free and strictly shorter,
/// - no inter-robot dependency touches the interior events `a+1..b`,
/// - the new motions overlap no other robot's motion at the same
///   timestep, and
/// - the completion time of the rebuilt temporal plan graph does not grow.
///
/// `tpg` must belong to `solution`.
pub fn shortcut<R: Rng + ?Sized>(
    solution: &Solution,
    tpg: &TemporalPlanGraph,
    models: &[RobotModel],
    obstacles: &[SphereObstacle],
    rng: &mut R,
    iterations: usize,
) -> Solution {
    let mut sol = solution.clone();
    let n = models.len();
    let len = tpg.len;
    if n == 0 || len < 3 {
        return sol;
    }
    let mut tpg = tpg.clone();
    let mut touched = tpg.touched();
    let mut current = tpg.completion_time();
    let mut runs: Vec<Runs> = models
        .iter()
        .zip(&sol.paths)
        .map(|(m, p)| Runs::new(m, p))
        .collect();
    for _ in 0..iterations {
        let i = rng.gen_range(0..n);
        let a = rng.gen_range(0..len - 2);
        let b = rng.gen_range(a + 2..len);
        let path = &sol.paths[i];
        if (a + 1..b).any(|k| touched[tpg.event(i, k)]) {
            continue;
        }
        let old = path_length(&models[i], &path[a..=b]);
        let new = models[i].dist(&path[a], &path[b]);
        if !(new < old - 1e-12) || !models[i].can_connect(&path[a], &path[b], obstacles) {
            continue;
        }
        let direct = Sweep::motion(&models[i], &path[a], &path[b]);
        let rest = Sweep::stationary(&models[i], &path[b]);
        let clash = (0..n).filter(|&j| j != i).any(|j| {
            let pj = &sol.paths[j];
            direct.intersects(&Sweep::motion(&models[j], &pj[a], &pj[a + 1]))
                || (a + 1..b)
                    .any(|s| rest.intersects(&Sweep::motion(&models[j], &pj[s], &pj[s + 1])))
        });
        if clash {
            continue;
        }
        let mut cand = sol.clone();
        let goal_b = cand.paths[i][b].clone();
        for q in &mut cand.paths[i][a + 1..b] {
            *q = goal_b.clone();
        }
        let ri = Runs::new(&models[i], &cand.paths[i]);
        let mut deps: Vec<(usize, usize)> = tpg
            .deps
            .iter()
            .copied()
            .filter(|&(x, y)| x / len != i && y / len != i)
            .collect();
        for j in (0..n).filter(|&j| j != i) {
            deps_into(&ri, &runs[j], len - 1, i, j, &mut deps);
            deps_into(&runs[j], &ri, len - 1, j, i, &mut deps);
        }
        let mut next = tpg.clone();
        next.deps = deps;
        next.durations[i] = durations(&models[i], &cand.paths[i]);
        let total = next.completion_time();
        if total > current + 1e-9 {
            continue;
        }
        current = total;
        tpg = next;
        touched = tpg.touched();
        runs[i] = ri;
        sol = cand;
    }
    sol
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TravelTime {
    pub raw: f64,
    /// Divided by the number of robots.
    pub normalized: f64,
}

/// Shortcut with the default budget, then schedule; the seed fixes the
/// shortcut choices.
pub fn total_traveling_time(
    solution: &Solution,
    models: &[RobotModel],
    obstacles: &[SphereObstacle],
    seed: u64,
) -> (Solution, TravelTime) {
    let tpg = build_tpg(solution, models);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let smoothed = shortcut(
        solution,
        &tpg,
        models,
        obstacles,
        &mut rng,
        default_iterations(solution),
    );
    let raw = schedule_time(&smoothed, models);
    let normalized = if models.is_empty() {
        0.0
    } else {
        raw / models.len() as f64
    };
    (smoothed, TravelTime { raw, normalized })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::verify;
    use crate::geometry::Vec3;
    use crate::instance::{Instance, Robot};
    use crate::robots::Scenario;

    fn st(v: &[f64]) -> State {
        State(v.to_vec())
    }

    fn pts(v: &[[f64; 2]]) -> Vec<State> {
        v.iter().map(|p| st(p)).collect()
    }

    #[test]
    fn single_robot_is_a_chain() {
        let m = vec![RobotModel::point2d(0.05)];
        let sol = Solution {
            paths: vec![pts(&[[0.1, 0.1], [0.3, 0.1], [0.3, 0.4]])],
        };
        let tpg = build_tpg(&sol, &m);
        assert!(tpg.dependencies().is_empty());
        assert!((schedule_time(&sol, &m) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn distant_robots_are_independent() {
        let m = vec![RobotModel::point2d(0.05); 2];
        let sol = Solution {
            paths: vec![
                pts(&[[0.1, 0.1], [0.2, 0.1], [0.3, 0.1]]),
                pts(&[[0.9, 0.9], [0.8, 0.9], [0.8, 0.9]]),
            ],
        };
        assert!(build_tpg(&sol, &m).dependencies().is_empty());
    }

    #[test]
    fn crossing_yields_dependency() {
        // robot 0 crosses (0.5, 0.5) during step 1; robot 1 crosses it during step 3
        let m = vec![RobotModel::point2d(0.05); 2];
        let sol = Solution {
            paths: vec![
                pts(&[[0.3, 0.5], [0.4, 0.5], [0.6, 0.5], [0.7, 0.5], [0.7, 0.5]]),
                pts(&[[0.5, 0.1], [0.5, 0.2], [0.5, 0.3], [0.5, 0.7], [0.5, 0.8]]),
            ],
        };
        let deps = build_tpg(&sol, &m).dependencies();
        // robot 0 must have left the crossing (event 2) before robot 1
        // starts through it (event 2 -> 3 is step 2)
        assert!(deps.contains(&((0, 2), (1, 2))), "{deps:?}");
        assert!(deps.iter().all(|&((i, _), (j, _))| i == 0 && j == 1));
    }

    #[test]
    fn chain_and_diamond_schedules() {
        let chain = SimpleTemporalNetwork {
            events: 3,
            edges: vec![
                StnEdge {
                    from: 0,
                    to: 1,
                    duration: 0.2,
                },
                StnEdge {
                    from: 1,
                    to: 2,
                    duration: 0.3,
                },
            ],
        };
        assert!((earliest_schedule(&chain)[2] - 0.5).abs() < 1e-12);
        let diamond = SimpleTemporalNetwork {
            events: 4,
            edges: vec![
                StnEdge {
                    from: 0,
                    to: 1,
                    duration: 0.4,
                },
                StnEdge {
                    from: 0,
                    to: 2,
                    duration: 0.7,
                },
                StnEdge {
                    from: 1,
                    to: 3,
                    duration: 0.0,
                },
                StnEdge {
                    from: 2,
                    to: 3,
                    duration: 0.0,
                },
            ],
        };
        assert!((earliest_schedule(&diamond)[3] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn zero_cycles_are_tolerated() {
        let stn = SimpleTemporalNetwork {
            events: 3,
            edges: vec![
                StnEdge {
                    from: 0,
                    to: 1,
                    duration: 0.5,
                },
                StnEdge {
                    from: 1,
                    to: 2,
                    duration: 0.0,
                },
                StnEdge {
                    from: 2,
                    to: 1,
                    duration: 0.0,
                },
            ],
        };
        assert_eq!(earliest_schedule(&stn), vec![0.0, 0.5, 0.5]);
    }

    fn detour_instance() -> (Instance, Solution) {
        let m = RobotModel::point2d(0.03);
        let inst = Instance {
            id: "s".into(),
            scenario: Scenario::Point2d,
            robots: vec![Robot {
                model: m,
                start: st(&[0.1, 0.1]),
                goal: st(&[0.9, 0.1]),
            }],
            obstacles: vec![SphereObstacle {
                center: Vec3::xy(0.5, 0.8),
                radius: 0.05,
            }],
            seed: 0,
        };
        let sol = Solution {
            paths: vec![pts(&[
                [0.1, 0.1],
                [0.3, 0.4],
                [0.5, 0.5],
                [0.7, 0.4],
                [0.9, 0.1],
            ])],
        };
        (inst, sol)
    }

    #[test]
    fn zero_iterations_is_identity() {
        let (inst, sol) = detour_instance();
        let tpg = build_tpg(&sol, &inst.models());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            shortcut(&sol, &tpg, &inst.models(), &inst.obstacles, &mut rng, 0),
            sol
        );
    }

    #[test]
    fn detour_gets_shorter() {
        let (inst, sol) = detour_instance();
        let models = inst.models();
        assert!(verify(&inst, &sol).is_empty());
        let (out, tt) = total_traveling_time(&sol, &models, &inst.obstacles, 1);
        assert!(verify(&inst, &out).is_empty());
        assert!(
            path_length(&models[0], &out.paths[0]) < path_length(&models[0], &sol.paths[0]) - 1e-9
        );
        assert!((tt.raw - 0.8).abs() < 1e-9, "{tt:?}");
        assert!(tt.raw <= schedule_time(&sol, &models));
    }

    #[test]
    fn dependent_interior_is_kept() {
        // robot 1 crosses the top lane first; robot 0 must wait for it
        // before heading for the apex, so both interior events of robot 0
        // carry dependencies and no shortcut is allowed
        let m = RobotModel::point2d(0.03);
        let inst = Instance {
            id: "g".into(),
            scenario: Scenario::Point2d,
            robots: vec![
                Robot {
                    model: m.clone(),
                    start: st(&[0.1, 0.5]),
                    goal: st(&[0.5, 0.1]),
                },
                Robot {
                    model: m,
                    start: st(&[0.3, 0.9]),
                    goal: st(&[0.7, 0.9]),
                },
            ],
            obstacles: vec![],
            seed: 0,
        };
        let sol = Solution {
            paths: vec![
                pts(&[[0.1, 0.5], [0.1, 0.5], [0.5, 0.9], [0.5, 0.1]]),
                pts(&[[0.3, 0.9], [0.7, 0.9], [0.7, 0.9], [0.7, 0.9]]),
            ],
        };
        assert!(verify(&inst, &sol).is_empty());
        let models = inst.models();
        let tpg = build_tpg(&sol, &models);
        let deps = tpg.dependencies();
        assert!(
            deps.contains(&((1, 1), (0, 1))) && deps.contains(&((1, 1), (0, 2))),
            "{deps:?}"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = shortcut(&sol, &tpg, &models, &inst.obstacles, &mut rng, 500);
        assert_eq!(out, sol);
    }
}
