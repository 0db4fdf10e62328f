//! Sampling-based planners treating all robots as one composite robot.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BaselineParams, Deadline};
use crate::collision::collide_config;
use crate::error::SolveError;
use crate::geometry::SphereObstacle;
use crate::instance::{Instance, Solution};
use crate::robots::{RobotModel, State};

type Config = Vec<State>;

struct Composite<'a> {
    models: &'a [RobotModel],
    obstacles: &'a [SphereObstacle],
    symmetric: bool,
}

impl<'a> Composite<'a> {
    fn new(models: &'a [RobotModel], obstacles: &'a [SphereObstacle]) -> Self {
        Composite {
            models,
            obstacles,
            symmetric: models.iter().all(RobotModel::is_symmetric),
        }
    }

    fn dist(&self, a: &[State], b: &[State]) -> f64 {
        self.models
            .iter()
            .zip(a.iter().zip(b))
            .map(|(m, (p, q))| m.dist(p, q))
            .sum()
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Config {
        self.models.iter().map(|m| m.sample(rng)).collect()
    }

    fn valid(&self, q: &[State]) -> bool {
        self.models
            .iter()
            .zip(q)
            .all(|(m, s)| m.is_valid(s, self.obstacles))
            && !collide_config(self.models, q, q)
    }

    /// Every robot follows its local planner while all move together.
    fn connect(&self, a: &[State], b: &[State]) -> bool {
        self.models
            .iter()
            .zip(a.iter().zip(b))
            .all(|(m, (p, q))| m.can_connect(p, q, self.obstacles))
            && !collide_config(self.models, a, b)
    }

    /// Joint steer: each robot gets the share of `eps` proportional to its
    /// distance to the target. Robots that cannot advance stay put.
    fn steer(&self, from: &[State], to: &[State], eps: f64) -> Option<Config> {
        let d = self.dist(from, to);
        if d == 0.0 {
            return None;
        }
        if d <= eps && self.connect(from, to) {
            return Some(to.to_vec());
        }
        let cand: Config = self
            .models
            .iter()
            .zip(from.iter().zip(to))
            .map(|(m, (p, q))| {
                let di = m.dist(p, q);
                if di == 0.0 {
                    return p.clone();
                }
                m.steer(p, q, eps * di / d, self.obstacles)
                    .unwrap_or_else(|| p.clone())
            })
            .collect();
        if cand.as_slice() == from || collide_config(self.models, from, &cand) {
            return None;
        }
        Some(cand)
    }

    fn flip(&self, q: &[State]) -> Config {
        self.models
            .iter()
            .zip(q)
            .map(|(m, s)| m.reversed(s))
            .collect()
    }

    fn nearest(&self, nodes: &[Config], q: &[State]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (k, n) in nodes.iter().enumerate() {
            let d = self.dist(n, q);
            if d < best.1 {
                best = (k, d);
            }
        }
        best.0
    }
}

fn to_solution(configs: Vec<Config>, n: usize) -> Solution {
    Solution {
        paths: (0..n)
            .map(|i| configs.iter().map(|c| c[i].clone()).collect())
            .collect(),
    }
}

fn prepare(
    instance: &Instance,
    params: &BaselineParams,
) -> Result<(Deadline, Vec<RobotModel>), SolveError> {
    params.validate()?;
    instance.validate().map_err(SolveError::InvalidInstance)?;
    Ok((params.deadline(), instance.models()))
}

struct Tree {
    nodes: Vec<Config>,
    parent: Vec<usize>,
}

impl Tree {
    fn new(root: Config) -> Self {
        Tree {
            nodes: vec![root],
            parent: vec![usize::MAX],
        }
    }

    fn push(&mut self, q: Config, parent: usize) -> usize {
        self.nodes.push(q);
        self.parent.push(parent);
        self.nodes.len() - 1
    }

    /// Root first.
    fn path_to(&self, mut k: usize) -> Vec<Config> {
        let mut out = vec![self.nodes[k].clone()];
        while self.parent[k] != usize::MAX {
            k = self.parent[k];
            out.push(self.nodes[k].clone());
        }
        out.reverse();
        out
    }
}

pub fn rrt_solve(instance: &Instance, params: &BaselineParams) -> Result<Solution, SolveError> {
    let (deadline, models) = prepare(instance, params)?;
    let cs = Composite::new(&models, &instance.obstacles);
    let (start, goal) = (instance.starts(), instance.goals());
    let n = instance.n();
    if start == goal {
        return Ok(to_solution(vec![start], n));
    }
    let ceps = params.eps * n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut tree = Tree::new(start);
    loop {
        deadline.check()?;
        let target = if rng.gen::<f64>() < params.goal_bias {
            goal.clone()
        } else {
            cs.sample(&mut rng)
        };
        let near = cs.nearest(&tree.nodes, &target);
        let Some(q_new) = cs.steer(&tree.nodes[near], &target, ceps) else {
            continue;
        };
        let k = tree.push(q_new, near);
        let q_new = &tree.nodes[k];
        if q_new == &goal {
            return Ok(to_solution(tree.path_to(k), n));
        }
        if cs.dist(q_new, &goal) <= ceps / 2.0 && cs.connect(q_new, &goal) {
            let g = tree.push(goal.clone(), k);
            return Ok(to_solution(tree.path_to(g), n));
        }
    }
}

/// Outcome of growing one tree towards a target.
enum Extend {
    Trapped,
    Advanced(usize),
    Reached(usize),
}

/// Bidirectional RRT with the greedy connect heuristic. The goal tree grows
/// in reversed space so that its edges are valid forward motions towards
/// the goal.
pub fn rrtc_solve(instance: &Instance, params: &BaselineParams) -> Result<Solution, SolveError> {
    let (deadline, models) = prepare(instance, params)?;
    let cs = Composite::new(&models, &instance.obstacles);
    let (start, goal) = (instance.starts(), instance.goals());
    let n = instance.n();
    if start == goal {
        return Ok(to_solution(vec![start], n));
    }
    let ceps = params.eps * n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    // trees[0] from the start, trees[1] from the goal
    let mut trees = [Tree::new(start), Tree::new(goal)];

    let extend = |tree: &mut Tree, is_goal_tree: bool, target: &[State]| -> Extend {
        let near = cs.nearest(&tree.nodes, target);
        let from = tree.nodes[near].clone();
        let q_new = if is_goal_tree && !cs.symmetric {
            let flipped = cs.flip(target);
            match cs.steer(&cs.flip(&from), &flipped, ceps) {
                Some(q) if q == flipped => target.to_vec(),
                Some(q) => cs.flip(&q),
                None => return Extend::Trapped,
            }
        } else {
            match cs.steer(&from, target, ceps) {
                Some(q) => q,
                None => return Extend::Trapped,
            }
        };
        if is_goal_tree && !cs.symmetric && !cs.connect(&q_new, &from) {
            return Extend::Trapped;
        }
        let reached = q_new.as_slice() == target;
        // a curved local plan can end no closer than it began; stop there
        // instead of re-adding the same state forever
        if !reached && cs.dist(&q_new, target) >= cs.dist(&from, target) {
            return Extend::Trapped;
        }
        let k = tree.push(q_new, near);
        if reached {
            Extend::Reached(k)
        } else {
            Extend::Advanced(k)
        }
    };

    let mut a = 0usize;
    loop {
        deadline.check()?;
        let sample = cs.sample(&mut rng);
        let (ta, tb) = if a == 0 {
            let [x, y] = &mut trees;
            (x, y)
        } else {
            let [x, y] = &mut trees;
            (y, x)
        };
        if let Extend::Advanced(k) | Extend::Reached(k) = extend(ta, a == 1, &sample) {
            let target = ta.nodes[k].clone();
            loop {
                deadline.check()?;
                match extend(tb, a == 0, &target) {
                    Extend::Advanced(_) => continue,
                    Extend::Trapped => break,
                    Extend::Reached(m) => {
                        let (ks, kg) = if a == 0 { (k, m) } else { (m, k) };
                        let mut path = trees[0].path_to(ks);
                        let mut back = trees[1].path_to(kg);
                        back.reverse();
                        path.extend(back.into_iter().skip(1));
                        return Ok(to_solution(path, n));
                    }
                }
            }
        }
        a = 1 - a;
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Queued(f64, usize);

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], s: usize, t: usize) -> Option<Vec<usize>> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut prev = vec![usize::MAX; adj.len()];
    dist[s] = 0.0;
    let mut heap = BinaryHeap::from([Queued(0.0, s)]);
    while let Some(Queued(d, u)) = heap.pop() {
        if u == t {
            break;
        }
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            if d + w < dist[v] {
                dist[v] = d + w;
                prev[v] = u;
                heap.push(Queued(d + w, v));
            }
        }
    }
    if !dist[t].is_finite() {
        return None;
    }
    let mut path = vec![t];
    while *path.last().unwrap() != s {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    Some(path)
}

/// k-nearest PRM in the composite space, searched after every batch of
/// samples.
pub fn prm_solve(instance: &Instance, params: &BaselineParams) -> Result<Solution, SolveError> {
    let (deadline, models) = prepare(instance, params)?;
    let cs = Composite::new(&models, &instance.obstacles);
    let (start, goal) = (instance.starts(), instance.goals());
    let n = instance.n();
    if start == goal {
        return Ok(to_solution(vec![start], n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut nodes: Vec<Config> = vec![start, goal];
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(), Vec::new()];
    let link =
        |nodes: &[Config], adj: &mut Vec<Vec<(usize, f64)>>, v: usize| -> Result<(), SolveError> {
            let mut near: Vec<(f64, usize)> = (0..nodes.len())
                .filter(|&u| u != v)
                .map(|u| (cs.dist(&nodes[u], &nodes[v]), u))
                .collect();
            near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(d, u) in near.iter().take(params.prm_k) {
                deadline.check()?;
                let fwd = cs.connect(&nodes[u], &nodes[v]);
                let bwd = if cs.symmetric {
                    fwd
                } else {
                    cs.connect(&nodes[v], &nodes[u])
                };
                if fwd {
                    adj[u].push((v, d));
                }
                if bwd {
                    adj[v].push((u, d));
                }
            }
            Ok(())
        };
    link(&nodes, &mut adj, 1)?;
    loop {
        if let Some(ids) = dijkstra(&adj, 0, 1) {
            return Ok(to_solution(
                ids.into_iter().map(|k| nodes[k].clone()).collect(),
                n,
            ));
        }
        let mut added = 0;
        while added < params.prm_batch {
            deadline.check()?;
            let q = cs.sample(&mut rng);
            if !cs.valid(&q) {
                continue;
            }
            nodes.push(q);
            adj.push(Vec::new());
            link(&nodes, &mut adj, nodes.len() - 1)?;
            added += 1;
        }
    }
}
