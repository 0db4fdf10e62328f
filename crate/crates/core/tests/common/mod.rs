//! Brute-force oracles and random fixtures shared by the integration tests
//! and the acceptance runner. Everything here is written independently of
//! the library internals it checks.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};
use std::f64::consts::{PI, TAU};

use rand::Rng;

use mrmp::collision::{collide_pair, MotionPair};
use mrmp::geometry::{Segment, Vec3};
use mrmp::postprocess::SimpleTemporalNetwork;
use mrmp::roadmap::{Roadmap, VertexId};
use mrmp::robots::{RobotModel, State};
use mrmp::sssp::{NodeId, SearchTree};

// ---------------------------------------------------------------- geometry

fn project_t(p: Vec3, s: &Segment) -> f64 {
    let d = s.b - s.a;
    let l2 = d.dot(d);
    if l2 == 0.0 {
        0.0
    } else {
        ((p - s.a).dot(d) / l2).clamp(0.0, 1.0)
    }
}

/// Minimize a convex function on `[0, 1]`: dense grid, then ternary search
/// in the cells around the best grid point.
fn convex_min(f: impl Fn(f64) -> f64, grid: usize) -> f64 {
    let k = (0..=grid)
        .min_by(|&a, &b| f(a as f64 / grid as f64).total_cmp(&f(b as f64 / grid as f64)))
        .unwrap();
    let (mut lo, mut hi) = (
        k.saturating_sub(1) as f64 / grid as f64,
        (k + 1).min(grid) as f64 / grid as f64,
    );
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi)).min(f(k as f64 / grid as f64))
}

/// Point-segment distance by parameter search.
pub fn point_segment_oracle(p: Vec3, s: &Segment) -> f64 {
    convex_min(|t| p.dist(s.a.lerp(s.b, t)), 1000)
}

/// Segment-segment distance: grid over the first parameter, exact
/// projection for the second (distance to a segment is convex along a line).
pub fn segment_segment_oracle(s1: &Segment, s2: &Segment) -> f64 {
    convex_min(
        |u| {
            let p = s1.a.lerp(s1.b, u);
            p.dist(s2.a.lerp(s2.b, project_t(p, s2)))
        },
        200,
    )
}

// ------------------------------------------------------------------ dubins

fn mod2pi(a: f64) -> f64 {
    a.rem_euclid(TAU)
}

/// Shortest Dubins length as the minimum over the six closed-form words.
pub fn dubins_oracle(q0: [f64; 3], q1: [f64; 3], rho: f64) -> f64 {
    let (dx, dy) = (q1[0] - q0[0], q1[1] - q0[1]);
    let d = (dx * dx + dy * dy).sqrt() / rho;
    let th = mod2pi(dy.atan2(dx));
    let a = mod2pi(q0[2] - th);
    let b = mod2pi(q1[2] - th);
    let (sa, sb, ca, cb) = (a.sin(), b.sin(), a.cos(), b.cos());
    let cab = (a - b).cos();
    let mut best = f64::INFINITY;
    let mut take = |t: f64, p: f64, q: f64| best = best.min(t + p + q);

    // LSL
    let p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb);
    if p2 >= 0.0 {
        let tmp = (cb - ca).atan2(d + sa - sb);
        take(mod2pi(-a + tmp), p2.sqrt(), mod2pi(b - tmp));
    }
    // RSR
    let p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa);
    if p2 >= 0.0 {
        let tmp = (ca - cb).atan2(d - sa + sb);
        take(mod2pi(a - tmp), p2.sqrt(), mod2pi(-b + tmp));
    }
    // LSR
    let p2 = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb);
    if p2 >= 0.0 {
        let p = p2.sqrt();
        let tmp = (-ca - cb).atan2(d + sa + sb) - (-2.0f64).atan2(p);
        take(mod2pi(-a + tmp), p, mod2pi(-b + tmp));
    }
    // RSL
    let p2 = -2.0 + d * d + 2.0 * cab - 2.0 * d * (sa + sb);
    if p2 >= 0.0 {
        let p = p2.sqrt();
        let tmp = (ca + cb).atan2(d - sa - sb) - 2.0f64.atan2(p);
        take(mod2pi(a - tmp), p, mod2pi(b - tmp));
    }
    // RLR
    let c = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0;
    if c.abs() <= 1.0 {
        let p = mod2pi(TAU - c.acos());
        let t = mod2pi(a - (ca - cb).atan2(d - sa + sb) + p / 2.0);
        take(t, p, mod2pi(a - b - t + p));
    }
    // LRL
    let c = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0;
    if c.abs() <= 1.0 {
        let p = mod2pi(TAU - c.acos());
        let t = mod2pi(-a - (ca - cb).atan2(d + sa - sb) + p / 2.0);
        take(t, p, mod2pi(b - a - t + p));
    }
    best * rho
}

pub fn random_pose(rng: &mut impl Rng) -> [f64; 3] {
    [rng.gen(), rng.gen(), rng.gen_range(-PI..PI)]
}

// ----------------------------------------------------------------- roadmap

/// Backward Bellman-Ford over out-edges.
pub fn bellman_ford_goal_dist(rm: &Roadmap) -> Vec<f64> {
    let n = rm.len();
    let mut d = vec![f64::INFINITY; n];
    d[rm.goal_id() as usize] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for u in 0..n {
            for e in rm.out_edges(u as VertexId) {
                let c = e.weight + d[e.other as usize];
                if c < d[u] {
                    d[u] = c;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    d
}

/// Roadmap of `k` random point positions (start, goal, then extras) with
/// each ordered pair linked with probability `p`.
pub fn random_roadmap(
    model: &RobotModel,
    start: State,
    goal: State,
    k: usize,
    p: f64,
    rng: &mut impl Rng,
) -> Roadmap {
    let mut rm = Roadmap::new(start, goal);
    while rm.len() < k {
        rm.push_vertex(sample_inside(model, rng));
    }
    for u in 0..rm.len() as VertexId {
        for v in 0..rm.len() as VertexId {
            if u != v && rng.gen_bool(p) {
                let w = model.dist(rm.state(u), rm.state(v));
                rm.add_edge(u, v, w);
            }
        }
    }
    rm.rebuild_goal_dist();
    rm
}

/// Point-robot position with the body inside the unit square.
pub fn sample_inside(model: &RobotModel, rng: &mut impl Rng) -> State {
    let r = model.radius;
    State(vec![rng.gen_range(r..1.0 - r), rng.gen_range(r..1.0 - r)])
}

/// Frozen-roadmap multi-robot case.
pub struct FrozenCase {
    pub models: Vec<RobotModel>,
    pub roadmaps: Vec<Roadmap>,
}

/// `n` point robots with pairwise separated starts and goals and random
/// roadmaps of `k` vertices each.
pub fn random_frozen_case(n: usize, k: usize, rng: &mut impl Rng) -> FrozenCase {
    loop {
        let models: Vec<RobotModel> = (0..n)
            .map(|_| RobotModel::point2d(rng.gen_range(0.06..0.16)))
            .collect();
        let starts: Vec<State> = models.iter().map(|m| sample_inside(m, rng)).collect();
        let goals: Vec<State> = models.iter().map(|m| sample_inside(m, rng)).collect();
        let separated = |qs: &[State]| {
            (0..n).all(|i| {
                (i + 1..n).all(|j| {
                    let d = ((qs[i][0] - qs[j][0]).powi(2) + (qs[i][1] - qs[j][1]).powi(2)).sqrt();
                    d > models[i].radius + models[j].radius
                })
            })
        };
        if !separated(&starts) || !separated(&goals) {
            continue;
        }
        let roadmaps = (0..n)
            .map(|i| {
                random_roadmap(
                    &models[i],
                    starts[i].clone(),
                    goals[i].clone(),
                    k,
                    0.35,
                    rng,
                )
            })
            .collect();
        return FrozenCase { models, roadmaps };
    }
}

fn moving_collides(case: &FrozenCase, q: &[VertexId], i: usize, to: VertexId) -> bool {
    let (rms, ms) = (&case.roadmaps, &case.models);
    (0..q.len()).filter(|&j| j != i).any(|j| {
        let mp = MotionPair {
            i,
            j,
            qi_from: rms[i].state(q[i]),
            qi_to: rms[i].state(to),
            qj_from: rms[j].state(q[j]),
            qj_to: rms[j].state(q[j]),
        };
        collide_pair(&ms[i], &ms[j], &mp)
    })
}

/// Breadth-first search over vertex-id tuples where one robot at a time
/// moves along a roadmap edge past the others at rest. Waiting is always
/// possible, so the order in which robots take turns does not matter.
pub fn product_bfs_solvable(case: &FrozenCase) -> bool {
    let start: Vec<VertexId> = case.roadmaps.iter().map(|r| r.start_id()).collect();
    let goal: Vec<VertexId> = case.roadmaps.iter().map(|r| r.goal_id()).collect();
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(q) = queue.pop_front() {
        if q == goal {
            return true;
        }
        for i in 0..q.len() {
            for e in case.roadmaps[i].out_edges(q[i]) {
                if e.other == q[i] || moving_collides(case, &q, i, e.other) {
                    continue;
                }
                let mut next = q.clone();
                next[i] = e.other;
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
    }
    false
}

// ------------------------------------------------------------ retroactive

pub struct BlockCase {
    pub models: Vec<RobotModel>,
    pub roadmaps: Vec<Roadmap>,
    pub tree: SearchTree,
    pub node: NodeId,
    pub q_prime: Vec<VertexId>,
    /// Configurations along the chain, root first.
    pub configs: Vec<Vec<VertexId>>,
}

/// Random operator-decomposed chain of up to three blocks, ending at a node
/// whose next robot proposes a random move.
pub fn random_block_case(rng: &mut impl Rng) -> BlockCase {
    let n = rng.gen_range(2..=4);
    let models: Vec<RobotModel> = (0..n)
        .map(|_| RobotModel::point2d(rng.gen_range(0.03..0.12)))
        .collect();
    let roadmaps: Vec<Roadmap> = models
        .iter()
        .map(|m| {
            let (s, g) = (sample_inside(m, rng), sample_inside(m, rng));
            random_roadmap(m, s, g, 5, 0.0, rng)
        })
        .collect();
    let mut tree = SearchTree::new(n);
    let mut q: Vec<VertexId> = (0..n).map(|_| rng.gen_range(0..5)).collect();
    let mut node = tree.push(&q, 0, None);
    let mut configs = vec![q.clone()];
    for _ in 0..rng.gen_range(0..3 * n) {
        let i = tree.next(node);
        q[i] = rng.gen_range(0..5);
        node = tree.push(&q, (i + 1) % n, Some(node));
        configs.push(q.clone());
    }
    let mut q_prime = q.clone();
    q_prime[tree.next(node)] = rng.gen_range(0..5);
    BlockCase {
        models,
        roadmaps,
        tree,
        node,
        q_prime,
        configs,
    }
}

/// Robot `i` (the next mover) against every robot that already moved in the
/// current block, each over its whole in-block motion.
pub fn retroactive_oracle(case: &BlockCase) -> bool {
    let n = case.models.len();
    let i = (case.configs.len() - 1) % n;
    let block_start = &case.configs[case.configs.len() - 1 - i];
    let rms = &case.roadmaps;
    (0..i).any(|j| {
        let mp = MotionPair {
            i,
            j,
            qi_from: rms[i].state(block_start[i]),
            qi_to: rms[i].state(case.q_prime[i]),
            qj_from: rms[j].state(block_start[j]),
            qj_to: rms[j].state(case.q_prime[j]),
        };
        collide_pair(&case.models[i], &case.models[j], &mp)
    })
}

// --------------------------------------------------------------------- stn

/// Earliest event times as longest paths from time zero, by repeated
/// relaxation over all edges.
pub fn longest_path_oracle(stn: &SimpleTemporalNetwork) -> Vec<f64> {
    let mut t = vec![0.0f64; stn.events];
    for _ in 0..stn.events {
        let mut changed = false;
        for e in &stn.edges {
            if t[e.from] + e.duration > t[e.to] {
                t[e.to] = t[e.from] + e.duration;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    t
}
