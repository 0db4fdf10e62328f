//! Simultaneous sampling and search.
//!
//! Best-first search over joint configurations where exactly one robot moves
//! per search node (operator decomposition). Whenever a node is popped, the
//! moving robot's roadmap is first grown by sampling around its current
//! vertex, then successors are generated along the grown roadmap. When the
//! open list empties, vertex-spacing thresholds shrink and the search
//! restarts on the persistent roadmaps.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::hash::Hasher;
use std::time::{Duration, Instant};

use hashbrown::HashTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHasher;
use serde::{Deserialize, Serialize};

use crate::collision::{collide_pair, EdgeSweeps, MotionPair};
use crate::error::SolveError;
use crate::geometry::SphereObstacle;
use crate::instance::{Instance, Solution};
use crate::roadmap::{init_roadmap, InitConfig, Roadmap, VertexId, INIT_BUDGET};
use crate::robots::RobotModel;

/// How successor motions are checked against the other robots.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionMode {
    /// Every search node is one timestep; the other robots stay put.
    #[default]
    Stationary,
    /// `N` consecutive nodes form one timestep in which all robots move.
    Block,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsspParams {
    /// Samples drawn per vertex expansion.
    pub m: usize,
    /// Base vertex-spacing threshold, scaled per robot.
    pub theta: f64,
    /// Threshold decay per search iteration.
    pub gamma: f64,
    /// Steering range, also the connection radius for new vertices.
    pub eps: f64,
    /// Seconds.
    pub time_limit: f64,
    pub seed: u64,
    pub mode: CollisionMode,
    /// Ablation: order the open list by random keys.
    pub random_score: bool,
    /// Ablation: start from start/goal-only roadmaps when false.
    pub init_roadmap: bool,
    /// Ablation: never grow roadmaps during search.
    pub vertex_expansion: bool,
    /// Ablation: accept new vertices regardless of spacing.
    pub distance_check: bool,
    pub init_budget: usize,
}

impl Default for SsspParams {
    fn default() -> Self {
        SsspParams {
            m: 10,
            theta: 0.05,
            gamma: 0.8,
            eps: 0.2,
            time_limit: 300.0,
            seed: 0,
            mode: CollisionMode::Stationary,
            random_score: false,
            init_roadmap: true,
            vertex_expansion: true,
            distance_check: true,
            init_budget: INIT_BUDGET,
        }
    }
}

impl SsspParams {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |msg: &str| Err(SolveError::InvalidParams(msg.into()));
        if self.m == 0 {
            return bad("M must be at least 1");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return bad("theta must be positive");
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps must be positive");
        }
        if !(self.time_limit > 0.0) {
            return bad("time limit must be positive");
        }
        Ok(())
    }

    /// Threshold of each robot in search iteration `k` (0-based).
    pub fn thresholds(&self, models: &[RobotModel], k: u32) -> Vec<f64> {
        if !self.distance_check {
            return vec![0.0; models.len()];
        }
        // multiply once per iteration, exactly as a running threshold would
        let base = (0..k).fold(self.theta, |t, _| t * self.gamma);
        models.iter().map(|m| base * m.threshold_scale()).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub iterations: u32,
    pub expanded: u64,
    pub generated: u64,
    pub vertices: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct SsspResult {
    pub solution: Solution,
    /// Roadmap vertex ids per robot and timestep.
    pub vertex_paths: Vec<Vec<VertexId>>,
    pub roadmaps: Vec<Roadmap>,
    pub stats: SearchStats,
}

pub type NodeId = u32;
const NONE: NodeId = NodeId::MAX;

/// Arena of search nodes; configurations live in one flat buffer.
#[derive(Clone, Debug)]
pub struct SearchTree {
    n: usize,
    qs: Vec<VertexId>,
    parent: Vec<NodeId>,
    next: Vec<u32>,
    depth: Vec<u32>,
}

impl SearchTree {
    pub fn new(n: usize) -> Self {
        SearchTree {
            n,
            qs: Vec::new(),
            parent: Vec::new(),
            next: Vec::new(),
            depth: Vec::new(),
        }
    }

    pub fn push(&mut self, q: &[VertexId], next: usize, parent: Option<NodeId>) -> NodeId {
        assert_eq!(q.len(), self.n);
        let id = self.parent.len() as NodeId;
        self.qs.extend_from_slice(q);
        self.parent.push(parent.unwrap_or(NONE));
        self.next.push(next as u32);
        self.depth
            .push(parent.map_or(0, |p| self.depth[p as usize] + 1));
        id
    }

    pub fn q(&self, s: NodeId) -> &[VertexId] {
        let k = s as usize * self.n;
        &self.qs[k..k + self.n]
    }

    pub fn next(&self, s: NodeId) -> usize {
        self.next[s as usize] as usize
    }

    pub fn parent(&self, s: NodeId) -> Option<NodeId> {
        let p = self.parent[s as usize];
        (p != NONE).then_some(p)
    }

    pub fn depth(&self, s: NodeId) -> u32 {
        self.depth[s as usize]
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Nodes from the root down to `s`.
    pub fn chain(&self, s: NodeId) -> Vec<NodeId> {
        let mut out = vec![s];
        let mut cur = s;
        while let Some(p) = self.parent(cur) {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }
}

/// Block-mode collision check for moving robot `node.next` from its state in
/// `node` to its state in `q_prime`: tested against every robot that already
/// moved in the current block, each from its state before its own move to
/// its state in `q_prime`. `pair` decides one motion pair
/// `(i, i_from, i_to, j, j_from, j_to)`.
pub fn retroactive_collide_with(
    tree: &SearchTree,
    node: NodeId,
    q_prime: &[VertexId],
    mut pair: impl FnMut(usize, VertexId, VertexId, usize, VertexId, VertexId) -> bool,
) -> bool {
    let n = tree.n;
    let i = tree.next(node);
    let (i_from, i_to) = (tree.q(node)[i], q_prime[i]);
    let mut s = node;
    while let Some(p) = tree.parent(s) {
        if tree.next(p) == n - 1 {
            break;
        }
        s = p;
        let j = tree.next(s);
        if pair(i, i_from, i_to, j, tree.q(s)[j], q_prime[j]) {
            return true;
        }
    }
    false
}

/// [`retroactive_collide_with`] using the plain pairwise predicate.
pub fn retroactive_collide(
    tree: &SearchTree,
    node: NodeId,
    q_prime: &[VertexId],
    roadmaps: &[Roadmap],
    models: &[RobotModel],
) -> bool {
    retroactive_collide_with(tree, node, q_prime, |i, ia, ib, j, ja, jb| {
        let mp = MotionPair {
            i,
            j,
            qi_from: roadmaps[i].state(ia),
            qi_to: roadmaps[i].state(ib),
            qj_from: roadmaps[j].state(ja),
            qj_to: roadmaps[j].state(jb),
        };
        collide_pair(&models[i], &models[j], &mp)
    })
}

fn key_hash(q: &[VertexId], next: usize) -> u64 {
    let mut h = FxHasher::default();
    for &v in q {
        h.write_u32(v);
    }
    h.write_usize(next);
    h.finish()
}

/// DISCOVERED set over `(Q, next)` keys. Stores node ids only; keys are read
/// back from the search tree.
#[derive(Default)]
struct Discovered {
    table: HashTable<NodeId>,
}

impl Discovered {
    fn contains(&self, tree: &SearchTree, q: &[VertexId], next: usize) -> bool {
        self.table
            .find(key_hash(q, next), |&s| {
                tree.next(s) == next && tree.q(s) == q
            })
            .is_some()
    }

    fn insert(&mut self, tree: &SearchTree, s: NodeId) {
        let hash = key_hash(tree.q(s), tree.next(s));
        self.table
            .insert_unique(hash, s, |&t| key_hash(tree.q(t), tree.next(t)));
    }
}

/// Open-list entry: lowest score first, then deepest, then oldest.
#[derive(Clone, Copy, Debug)]
struct OpenItem {
    score: f64,
    depth: u32,
    counter: u64,
    node: NodeId,
}

impl PartialEq for OpenItem {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for OpenItem {}

impl Ord for OpenItem {
    fn cmp(&self, o: &Self) -> Ordering {
        // BinaryHeap pops the greatest element
        o.score
            .total_cmp(&self.score)
            .then_with(|| self.depth.cmp(&o.depth))
            .then_with(|| o.counter.cmp(&self.counter))
    }
}

impl PartialOrd for OpenItem {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

struct Search<'a> {
    models: &'a [RobotModel],
    obstacles: &'a [SphereObstacle],
    roadmaps: Vec<Roadmap>,
    params: &'a SsspParams,
    thetas: Vec<f64>,
    rng: ChaCha8Rng,
    deadline: Instant,
    sweeps: EdgeSweeps,
    stats: SearchStats,
}

impl Search<'_> {
    fn score(&mut self, q: &[VertexId]) -> f64 {
        if self.params.random_score {
            return self.rng.gen();
        }
        q.iter()
            .zip(&self.roadmaps)
            .map(|(&v, rm)| rm.goal_dist(v))
            .sum()
    }

    fn is_goal(&self, tree: &SearchTree, s: NodeId) -> bool {
        (self.params.mode == CollisionMode::Stationary || tree.next(s) == 0)
            && tree
                .q(s)
                .iter()
                .zip(&self.roadmaps)
                .all(|(&v, rm)| v == rm.goal_id())
    }

    /// Grow robot `i`'s roadmap around vertex `from`; returns the number of
    /// vertices inserted.
    fn expand_vertices(&mut self, i: usize, from: VertexId) -> usize {
        let model = &self.models[i];
        let q_from = self.roadmaps[i].state(from).clone();
        let mut added = 0;
        for _ in 0..self.params.m {
            let target = model.sample(&mut self.rng);
            if let Some(q_new) = model.steer(&q_from, &target, self.params.eps, self.obstacles) {
                let rm = &mut self.roadmaps[i];
                if rm
                    .add_vertex(
                        model,
                        self.obstacles,
                        q_new,
                        from,
                        self.thetas[i],
                        self.params.eps,
                    )
                    .is_some()
                {
                    added += 1;
                }
            }
        }
        added
    }

    /// Stationary-mode check: robot `i` moves `from -> to` while everyone
    /// else rests at their vertex in `q`.
    fn move_collides(&mut self, q: &[VertexId], i: usize, from: VertexId, to: VertexId) -> bool {
        if from == to {
            return false;
        }
        let moving = self
            .sweeps
            .get(i, &self.models[i], &self.roadmaps[i], from, to);
        (0..q.len()).filter(|&j| j != i).any(|j| {
            let rest = self
                .sweeps
                .get(j, &self.models[j], &self.roadmaps[j], q[j], q[j]);
            moving.intersects(&rest)
        })
    }

    fn block_collides(&mut self, tree: &SearchTree, s: NodeId, q_prime: &[VertexId]) -> bool {
        let (models, roadmaps, sweeps) = (self.models, &self.roadmaps, &mut self.sweeps);
        retroactive_collide_with(tree, s, q_prime, |i, ia, ib, j, ja, jb| {
            let si = sweeps.get(i, &models[i], &roadmaps[i], ia, ib);
            let sj = sweeps.get(j, &models[j], &roadmaps[j], ja, jb);
            si.intersects(&sj)
        })
    }

    fn backtrack(&self, tree: &SearchTree, s: NodeId) -> (Solution, Vec<Vec<VertexId>>) {
        let n = self.models.len();
        let chain: Vec<NodeId> = tree
            .chain(s)
            .into_iter()
            .filter(|&v| self.params.mode == CollisionMode::Stationary || tree.next(v) == 0)
            .collect();
        let vertex_paths: Vec<Vec<VertexId>> = (0..n)
            .map(|i| chain.iter().map(|&v| tree.q(v)[i]).collect())
            .collect();
        let paths = vertex_paths
            .iter()
            .zip(&self.roadmaps)
            .map(|(vs, rm)| vs.iter().map(|&v| rm.state(v).clone()).collect())
            .collect();
        (Solution { paths }, vertex_paths)
    }

    /// One best-first search to open-list exhaustion over the current
    /// roadmaps (which grow while searching when `expand` is set).
    fn iteration(
        &mut self,
        expand: bool,
    ) -> Result<Option<(Solution, Vec<Vec<VertexId>>)>, SolveError> {
        let n = self.models.len();
        let mut tree = SearchTree::new(n);
        let mut open = BinaryHeap::new();
        let mut discovered = Discovered::default();
        let mut counter = 0u64;

        let root_q: Vec<VertexId> = self.roadmaps.iter().map(Roadmap::start_id).collect();
        let root = tree.push(&root_q, 0, None);
        discovered.insert(&tree, root);
        let score = self.score(&root_q);
        open.push(OpenItem {
            score,
            depth: 0,
            counter,
            node: root,
        });

        let mut q_prime: Vec<VertexId> = vec![0; n];
        while let Some(item) = open.pop() {
            if Instant::now() >= self.deadline {
                return Err(SolveError::Timeout);
            }
            let s = item.node;
            if self.is_goal(&tree, s) {
                return Ok(Some(self.backtrack(&tree, s)));
            }
            self.stats.expanded += 1;
            let i = tree.next(s);
            let from = tree.q(s)[i];
            if expand {
                self.expand_vertices(i, from);
            }
            let next = (i + 1) % n;
            let edges = self.roadmaps[i].out_edges(from).to_vec();
            for e in edges {
                q_prime.copy_from_slice(tree.q(s));
                q_prime[i] = e.other;
                if discovered.contains(&tree, &q_prime, next) {
                    continue;
                }
                let collides = match self.params.mode {
                    CollisionMode::Stationary => {
                        let q = tree.q(s).to_vec();
                        self.move_collides(&q, i, from, e.other)
                    }
                    CollisionMode::Block => self.block_collides(&tree, s, &q_prime),
                };
                if collides {
                    continue;
                }
                let child = tree.push(&q_prime, next, Some(s));
                discovered.insert(&tree, child);
                counter += 1;
                self.stats.generated += 1;
                let score = self.score(&q_prime);
                open.push(OpenItem {
                    score,
                    depth: tree.depth(child),
                    counter,
                    node: child,
                });
            }
        }
        Ok(None)
    }

    fn run(mut self, expand: bool) -> Result<SsspResult, SolveError> {
        for k in 0u32.. {
            self.thetas = self.params.thresholds(self.models, k);
            self.roadmaps
                .iter_mut()
                .for_each(Roadmap::rebuild_goal_dist);
            self.stats.iterations = k + 1;
            if let Some((solution, vertex_paths)) = self.iteration(expand)? {
                self.stats.vertices = self.roadmaps.iter().map(Roadmap::len).collect();
                return Ok(SsspResult {
                    solution,
                    vertex_paths,
                    roadmaps: self.roadmaps,
                    stats: self.stats,
                });
            }
            if !expand {
                return Err(SolveError::Exhausted);
            }
        }
        unreachable!("iteration counter overflow")
    }
}

fn deadline(params: &SsspParams) -> Instant {
    Instant::now() + Duration::from_secs_f64(params.time_limit.min(1e9))
}

/// Solve an instance from scratch: bootstrap roadmaps, then search.
pub fn solve(instance: &Instance, params: &SsspParams) -> Result<SsspResult, SolveError> {
    params.validate()?;
    let deadline = deadline(params);
    let models = instance.models();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut roadmaps = Vec::with_capacity(instance.n());
    for (i, r) in instance.robots.iter().enumerate() {
        let rm = if params.init_roadmap {
            let cfg = InitConfig {
                eps: params.eps,
                budget: params.init_budget,
                deadline: Some(deadline),
            };
            init_roadmap(
                &r.model,
                &r.start,
                &r.goal,
                &instance.obstacles,
                &mut rng,
                cfg,
            )
            .map_err(|e| match e {
                SolveError::InitFailure { .. } => SolveError::InitFailure { robot: i },
                other => other,
            })?
        } else {
            Roadmap::endpoints_only(
                &r.model,
                &instance.obstacles,
                r.start.clone(),
                r.goal.clone(),
                params.eps,
            )
        };
        roadmaps.push(rm);
    }
    let search = Search {
        models: &models,
        obstacles: &instance.obstacles,
        roadmaps,
        params,
        thetas: Vec::new(),
        rng,
        deadline,
        sweeps: EdgeSweeps::default(),
        stats: SearchStats::default(),
    };
    search.run(params.vertex_expansion)
}

/// Search fixed roadmaps without growing them. Returns
/// [`SolveError::Exhausted`] when they hold no solution.
pub fn solve_on_roadmaps(
    models: &[RobotModel],
    obstacles: &[SphereObstacle],
    roadmaps: Vec<Roadmap>,
    params: &SsspParams,
) -> Result<SsspResult, SolveError> {
    params.validate()?;
    if roadmaps.len() != models.len() {
        return Err(SolveError::InvalidInstance(
            "one roadmap per robot required".into(),
        ));
    }
    let search = Search {
        models,
        obstacles,
        roadmaps,
        params,
        thetas: Vec::new(),
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        deadline: deadline(params),
        sweeps: EdgeSweeps::default(),
        stats: SearchStats::default(),
    };
    search.run(false)
}
