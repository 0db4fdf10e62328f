//! Per-robot directed roadmaps.
//!
//! Every vertex carries a zero-weight self-loop (waiting in place), edge
//! weights are configuration distances, and `goal_dist` caches distances to
//! the goal vertex for search-node scoring.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::geometry::SphereObstacle;
use crate::robots::{RobotModel, State};

pub type VertexId = u32;

/// Default number of RRT-Connect expansion attempts.
pub const INIT_BUDGET: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    /// Head of an out-edge, tail of an in-edge.
    pub other: VertexId,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct Roadmap {
    states: Vec<State>,
    out_edges: Vec<Vec<Edge>>,
    in_edges: Vec<Vec<Edge>>,
    start_id: VertexId,
    goal_id: VertexId,
    goal_dist: Vec<f64>,
}

/// Min-heap entry ordered by distance, then id.
#[derive(Clone, Copy, PartialEq)]
struct Queued(f64, VertexId);

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

impl Roadmap {
    /// Roadmap holding only the start and goal vertices (one vertex when they
    /// coincide), without any edge besides self-loops.
    pub fn new(start: State, goal: State) -> Self {
        let mut rm = Roadmap {
            states: Vec::new(),
            out_edges: Vec::new(),
            in_edges: Vec::new(),
            start_id: 0,
            goal_id: 0,
            goal_dist: Vec::new(),
        };
        let same = start == goal;
        rm.push_vertex(start);
        if !same {
            rm.goal_id = rm.push_vertex(goal);
        }
        rm.rebuild_goal_dist();
        rm
    }

    /// Start and goal only, linked directly when they are within `r_conn`
    /// and the local planner allows it.
    pub fn endpoints_only(
        model: &RobotModel,
        obstacles: &[SphereObstacle],
        start: State,
        goal: State,
        r_conn: f64,
    ) -> Self {
        let mut rm = Roadmap::new(start, goal);
        let (s, g) = (rm.start_id, rm.goal_id);
        let d = model.dist(rm.state(s), rm.state(g));
        if s != g && d <= r_conn {
            rm.try_link(model, obstacles, s, g, d);
            rm.rebuild_goal_dist();
        }
        rm
    }

    /// Insert a vertex with its self-loop and no other edge.
    pub fn push_vertex(&mut self, q: State) -> VertexId {
        let id = self.states.len() as VertexId;
        self.states.push(q);
        self.out_edges.push(vec![Edge {
            other: id,
            weight: 0.0,
        }]);
        self.in_edges.push(vec![Edge {
            other: id,
            weight: 0.0,
        }]);
        self.goal_dist.push(f64::INFINITY);
        id
    }

    /// Add `u -> v` unless present. Returns whether the edge is new.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId, weight: f64) -> bool {
        if self.has_edge(u, v) {
            return false;
        }
        self.out_edges[u as usize].push(Edge { other: v, weight });
        self.in_edges[v as usize].push(Edge { other: u, weight });
        true
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.out_edges[u as usize].iter().any(|e| e.other == v)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    pub fn state(&self, id: VertexId) -> &State {
        &self.states[id as usize]
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn out_edges(&self, id: VertexId) -> &[Edge] {
        &self.out_edges[id as usize]
    }

    pub fn in_edges(&self, id: VertexId) -> &[Edge] {
        &self.in_edges[id as usize]
    }

    pub fn start_id(&self) -> VertexId {
        self.start_id
    }

    pub fn goal_id(&self) -> VertexId {
        self.goal_id
    }

    pub fn goal_dist(&self, id: VertexId) -> f64 {
        self.goal_dist[id as usize]
    }

    pub fn goal_dists(&self) -> &[f64] {
        &self.goal_dist
    }

    /// Closest vertex to `q`; ties go to the smaller id.
    pub fn nearest(&self, model: &RobotModel, q: &[f64]) -> (VertexId, f64) {
        assert!(!self.is_empty(), "nearest on an empty roadmap");
        let mut best = (0, f64::INFINITY);
        for (id, s) in self.states.iter().enumerate() {
            let d = model.dist(s, q);
            if d < best.1 {
                best = (id as VertexId, d);
            }
        }
        best
    }

    /// Exact distances to the goal by Dijkstra over reversed edges.
    pub fn rebuild_goal_dist(&mut self) {
        self.goal_dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        let goal = self.goal_id;
        self.goal_dist[goal as usize] = 0.0;
        let mut heap = BinaryHeap::from([Queued(0.0, goal)]);
        while let Some(Queued(d, v)) = heap.pop() {
            if d > self.goal_dist[v as usize] {
                continue;
            }
            for e in &self.in_edges[v as usize] {
                let nd = d + e.weight;
                let slot = &mut self.goal_dist[e.other as usize];
                if nd < *slot {
                    *slot = nd;
                    heap.push(Queued(nd, e.other));
                }
            }
        }
    }

    /// Insert `q_new` if it is farther than `theta` from every vertex, then
    /// try edges in each direction to `source` and to all vertices within
    /// `r_conn`. The new vertex's goal distance is relaxed from its
    /// out-edges; other entries are left as they are.
    pub fn add_vertex(
        &mut self,
        model: &RobotModel,
        obstacles: &[SphereObstacle],
        q_new: State,
        source: VertexId,
        theta: f64,
        r_conn: f64,
    ) -> Option<VertexId> {
        let dists: Vec<f64> = self.states.iter().map(|s| model.dist(s, &q_new)).collect();
        if dists.iter().any(|&d| d <= theta) {
            return None;
        }
        let id = self.push_vertex(q_new);
        let mut candidates: Vec<VertexId> = (0..dists.len())
            .filter(|&v| dists[v] <= r_conn)
            .map(|v| v as VertexId)
            .collect();
        if !candidates.contains(&source) {
            candidates.push(source);
        }
        for v in candidates {
            self.try_link(model, obstacles, id, v, dists[v as usize]);
        }
        self.goal_dist[id as usize] = self.out_edges[id as usize]
            .iter()
            .filter(|e| e.other != id)
            .map(|e| e.weight + self.goal_dist[e.other as usize])
            .fold(f64::INFINITY, f64::min);
        Some(id)
    }

    /// Connect `a` and `b` in every direction the local planner allows.
    pub fn try_link(
        &mut self,
        model: &RobotModel,
        obstacles: &[SphereObstacle],
        a: VertexId,
        b: VertexId,
        w: f64,
    ) {
        let (qa, qb) = (self.state(a).clone(), self.state(b).clone());
        let forward = model.can_connect(&qa, &qb, obstacles);
        let backward = if model.is_symmetric() {
            forward
        } else {
            model.can_connect(&qb, &qa, obstacles)
        };
        if forward {
            self.add_edge(a, b, w);
        }
        if backward {
            self.add_edge(b, a, w);
        }
    }

    /// Shortest vertex path from `from` to the goal following `goal_dist`.
    /// Only meaningful right after [`rebuild_goal_dist`](Self::rebuild_goal_dist).
    pub fn path_to_goal(&self, from: VertexId) -> Option<Vec<VertexId>> {
        if !self.goal_dist(from).is_finite() {
            return None;
        }
        let mut path = vec![from];
        let mut cur = from;
        while cur != self.goal_id {
            let next = self
                .out_edges(cur)
                .iter()
                .filter(|e| e.other != cur)
                .min_by(|a, b| {
                    (a.weight + self.goal_dist(a.other))
                        .total_cmp(&(b.weight + self.goal_dist(b.other)))
                })?;
            cur = next.other;
            path.push(cur);
            if path.len() > self.len() {
                return None;
            }
        }
        Some(path)
    }

    /// Re-check every structural and geometric invariant.
    pub fn check_consistency(
        &self,
        model: &RobotModel,
        obstacles: &[SphereObstacle],
    ) -> Result<(), String> {
        for (id, q) in self.states.iter().enumerate() {
            if !model.is_valid(q, obstacles) {
                return Err(format!("vertex {id} is not obstacle-free"));
            }
            if !self.has_edge(id as VertexId, id as VertexId) {
                return Err(format!("vertex {id} lacks a self-loop"));
            }
        }
        for (u, edges) in self.out_edges.iter().enumerate() {
            for e in edges {
                let (qu, qv) = (&self.states[u], &self.states[e.other as usize]);
                if !model.can_connect(qu, qv, obstacles) {
                    return Err(format!("edge {u} -> {} is not connectable", e.other));
                }
                if (e.weight - model.dist(qu, qv)).abs() > 1e-12 {
                    return Err(format!(
                        "edge {u} -> {} has weight {} != dist",
                        e.other, e.weight
                    ));
                }
            }
        }
        if self.goal_dist[self.goal_id as usize] != 0.0 {
            return Err("goal distance of the goal vertex is not zero".into());
        }
        Ok(())
    }

    pub fn to_doc(&self) -> RoadmapDoc {
        let mut edges = Vec::with_capacity(self.edge_count());
        for (u, es) in self.out_edges.iter().enumerate() {
            edges.extend(es.iter().map(|e| (u as VertexId, e.other, e.weight)));
        }
        RoadmapDoc {
            vertices: self.states.clone(),
            edges,
            start_id: self.start_id,
            goal_id: self.goal_id,
        }
    }

    pub fn from_doc(doc: &RoadmapDoc) -> Result<Self, String> {
        let n = doc.vertices.len() as VertexId;
        if doc.start_id >= n || doc.goal_id >= n {
            return Err("start or goal id out of range".into());
        }
        let mut rm = Roadmap {
            states: Vec::new(),
            out_edges: Vec::new(),
            in_edges: Vec::new(),
            start_id: doc.start_id,
            goal_id: doc.goal_id,
            goal_dist: Vec::new(),
        };
        for q in &doc.vertices {
            rm.push_vertex(q.clone());
        }
        for &(u, v, w) in &doc.edges {
            if u >= n || v >= n {
                return Err(format!("edge {u} -> {v} out of range"));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(format!("edge {u} -> {v} has invalid weight {w}"));
            }
            rm.add_edge(u, v, w);
        }
        rm.rebuild_goal_dist();
        Ok(rm)
    }
}

/// Serialized roadmap: edges as `(from, to, weight)` including self-loops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadmapDoc {
    pub vertices: Vec<State>,
    pub edges: Vec<(VertexId, VertexId, f64)>,
    pub start_id: VertexId,
    pub goal_id: VertexId,
}

/// Settings for the single-robot bootstrap search.
#[derive(Clone, Copy, Debug)]
pub struct InitConfig {
    pub eps: f64,
    pub budget: usize,
    pub deadline: Option<Instant>,
}

/// One RRT-Connect tree. Goal trees grow in reversed space so that their
/// edges, read backwards, are forward motions of the robot. States are kept
/// in forward space.
struct Tree {
    reversed: bool,
    states: Vec<State>,
    parent: Vec<Option<usize>>,
}

impl Tree {
    fn new(root: State, reversed: bool) -> Self {
        Tree {
            reversed,
            states: vec![root],
            parent: vec![None],
        }
    }

    fn flip(&self, model: &RobotModel, q: &State) -> State {
        if self.reversed {
            model.reversed(q)
        } else {
            q.clone()
        }
    }

    /// Node closest to a tree-space target. Flipping both headings keeps
    /// distances, so the comparison runs in forward space.
    fn nearest(&self, model: &RobotModel, target: &State) -> usize {
        let fwd = self.flip(model, target);
        let mut best = (0, f64::INFINITY);
        for (k, s) in self.states.iter().enumerate() {
            let d = model.dist(s, &fwd);
            if d < best.1 {
                best = (k, d);
            }
        }
        best.0
    }

    /// Steer from node `from` towards `target` (given in tree space) and
    /// append the result. `exact_target` is returned verbatim when the
    /// steer lands on the target.
    fn extend(
        &mut self,
        model: &RobotModel,
        obstacles: &[SphereObstacle],
        from: usize,
        target: &State,
        exact_target: &State,
        eps: f64,
    ) -> Option<(usize, bool)> {
        let base = self.flip(model, &self.states[from]);
        let stepped = model.steer(&base, target, eps, obstacles)?;
        let reached = stepped == *target;
        let q = if reached {
            exact_target.clone()
        } else if self.reversed {
            model.reversed(&stepped)
        } else {
            stepped
        };
        if q == self.states[from] {
            return None;
        }
        // steer validated the tree-space motion; goal trees need the
        // forward motion child -> parent to hold as well
        if self.reversed && !model.can_connect(&q, &self.states[from], obstacles) {
            return None;
        }
        self.states.push(q);
        self.parent.push(Some(from));
        Some((self.states.len() - 1, reached))
    }
}

/// Bootstrap roadmap by bidirectional RRT: both trees, their edges in every
/// valid direction, links between tree vertices within `eps`, and
/// self-loops.
pub fn init_roadmap<R: Rng + ?Sized>(
    model: &RobotModel,
    start: &State,
    goal: &State,
    obstacles: &[SphereObstacle],
    rng: &mut R,
    cfg: InitConfig,
) -> Result<Roadmap, SolveError> {
    if start == goal {
        return Ok(Roadmap::new(start.clone(), goal.clone()));
    }
    let mut trees = [
        Tree::new(start.clone(), false),
        Tree::new(goal.clone(), true),
    ];
    // index of the tree that grows towards the random sample
    let mut a = 0;
    let mut meeting = None;
    'search: for attempt in 0..cfg.budget {
        if attempt % 16 == 0 && cfg.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(SolveError::Timeout);
        }
        let b = 1 - a;
        let sample = model.sample(rng);
        let near = trees[a].nearest(model, &sample);
        let sample_fwd = trees[a].flip(model, &sample);
        if let Some((new_a, _)) =
            trees[a].extend(model, obstacles, near, &sample, &sample_fwd, cfg.eps)
        {
            let anchor = trees[a].states[new_a].clone();
            let target = trees[b].flip(model, &anchor);
            let mut from = trees[b].nearest(model, &target);
            while let Some((new_b, reached)) =
                trees[b].extend(model, obstacles, from, &target, &anchor, cfg.eps)
            {
                if reached {
                    meeting = Some(if a == 0 {
                        (new_a, new_b)
                    } else {
                        (new_b, new_a)
                    });
                    break 'search;
                }
                from = new_b;
            }
        }
        a = b;
    }
    let (meet_start, meet_goal) = meeting.ok_or(SolveError::InitFailure { robot: 0 })?;
    Ok(assemble(
        model, obstacles, &trees, meet_start, meet_goal, cfg.eps,
    ))
}

fn assemble(
    model: &RobotModel,
    obstacles: &[SphereObstacle],
    trees: &[Tree; 2],
    meet_start: usize,
    meet_goal: usize,
    r_conn: f64,
) -> Roadmap {
    let [ts, tg] = trees;
    let mut rm = Roadmap::new(ts.states[0].clone(), tg.states[0].clone());
    // start tree ids: root is 0, others appended in order
    let mut start_ids = vec![0 as VertexId];
    for q in &ts.states[1..] {
        start_ids.push(rm.push_vertex(q.clone()));
    }
    let mut goal_ids = vec![rm.goal_id];
    for (k, q) in tg.states.iter().enumerate().skip(1) {
        let id = if k == meet_goal {
            start_ids[meet_start]
        } else {
            rm.push_vertex(q.clone())
        };
        goal_ids.push(id);
    }
    // the tree edge itself was validated in its growth direction; the
    // opposite direction is kept only if the local planner allows it
    let link = |rm: &mut Roadmap, from: VertexId, to: VertexId| {
        let (qf, qt) = (rm.state(from).clone(), rm.state(to).clone());
        let w = model.dist(&qf, &qt);
        rm.add_edge(from, to, w);
        if model.is_symmetric() || model.can_connect(&qt, &qf, obstacles) {
            rm.add_edge(to, from, w);
        }
    };
    for (k, p) in ts.parent.iter().enumerate() {
        if let Some(p) = *p {
            link(&mut rm, start_ids[p], start_ids[k]);
        }
    }
    for (k, p) in tg.parent.iter().enumerate() {
        if let Some(p) = *p {
            link(&mut rm, goal_ids[k], goal_ids[p]);
        }
    }
    // same neighbourhood policy as later insertions
    for u in 0..rm.len() as VertexId {
        for v in u + 1..rm.len() as VertexId {
            let d = model.dist(rm.state(u), rm.state(v));
            if d <= r_conn && !(rm.has_edge(u, v) && rm.has_edge(v, u)) {
                rm.try_link(model, obstacles, u, v, d);
            }
        }
    }
    rm.rebuild_goal_dist();
    rm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn st(v: &[f64]) -> State {
        State(v.to_vec())
    }

    fn cfg() -> InitConfig {
        InitConfig {
            eps: 0.2,
            budget: INIT_BUDGET,
            deadline: None,
        }
    }

    #[test]
    fn start_equals_goal_is_single_vertex() {
        let m = RobotModel::point2d(0.05);
        let q = st(&[0.5, 0.5]);
        let rm = init_roadmap(&m, &q, &q, &[], &mut ChaCha8Rng::seed_from_u64(0), cfg()).unwrap();
        assert_eq!(rm.len(), 1);
        assert_eq!(rm.start_id(), rm.goal_id());
        assert_eq!(rm.goal_dist(rm.start_id()), 0.0);
    }

    #[test]
    fn chain_goal_dist() {
        let mut rm = Roadmap::new(st(&[0.0, 0.0]), st(&[0.5, 0.0]));
        let b = rm.push_vertex(st(&[0.2, 0.0]));
        rm.add_edge(0, b, 0.2);
        rm.add_edge(b, 1, 0.3);
        let iso = rm.push_vertex(st(&[0.9, 0.9]));
        rm.rebuild_goal_dist();
        assert!((rm.goal_dist(0) - 0.5).abs() < 1e-15);
        assert_eq!(rm.goal_dist(iso), f64::INFINITY);
        assert_eq!(rm.path_to_goal(0).unwrap(), vec![0, b, 1]);
    }

    #[test]
    fn nearest_tie_breaks_by_id() {
        let m = RobotModel::point2d(0.01);
        let mut rm = Roadmap::new(st(&[0.4, 0.5]), st(&[0.6, 0.5]));
        rm.push_vertex(st(&[0.5, 0.5]));
        assert_eq!(rm.nearest(&m, &[0.5, 0.5]), (2, 0.0));
        let (id, d) = rm.nearest(&m, &[0.5, 0.7]);
        assert_eq!(id, 2);
        assert!((d - 0.2).abs() < 1e-12);
        let (id, _) = rm.nearest(&m, &[0.45, 0.3]);
        assert_eq!(id, 0);
        // exactly between start and goal along y=0.5, farther than vertex 2
        let mut rm2 = Roadmap::new(st(&[0.4, 0.5]), st(&[0.6, 0.5]));
        rm2.push_vertex(st(&[0.1, 0.1]));
        assert_eq!(rm2.nearest(&m, &[0.5, 0.5]).0, 0);
    }

    #[test]
    fn add_vertex_threshold_and_edges() {
        let m = RobotModel::point2d(0.02);
        let mut rm = Roadmap::new(st(&[0.2, 0.5]), st(&[0.8, 0.5]));
        assert!(rm
            .add_vertex(&m, &[], st(&[0.2, 0.5]), 0, 0.05, 0.2)
            .is_none());
        let id = rm
            .add_vertex(&m, &[], st(&[0.3, 0.5]), 0, 0.05, 0.2)
            .unwrap();
        assert!(rm.has_edge(id, 0) && rm.has_edge(0, id) && rm.has_edge(id, id));
        assert!(!rm.has_edge(id, 1));
        rm.check_consistency(&m, &[]).unwrap();
    }

    #[test]
    fn blocked_neighbour_leaves_only_self_loop() {
        let m = RobotModel::point2d(0.02);
        let obs = [SphereObstacle {
            center: Vec3::xy(0.5, 0.5),
            radius: 0.06,
        }];
        let mut rm = Roadmap::new(st(&[0.4, 0.5]), st(&[0.9, 0.9]));
        assert!(!m.can_connect(&[0.4, 0.5], &[0.6, 0.5], &obs));
        let id = rm
            .add_vertex(&m, &obs, st(&[0.6, 0.5]), 0, 0.05, 0.25)
            .unwrap();
        assert_eq!(rm.out_edges(id).len(), 1);
        assert_eq!(rm.in_edges(id).len(), 1);
        assert_eq!(rm.goal_dist(id), f64::INFINITY);
    }

    #[test]
    fn init_walled_off_fails() {
        let m = RobotModel::point2d(0.02);
        let wall: Vec<SphereObstacle> = (0..=20)
            .map(|k| SphereObstacle {
                center: Vec3::xy(0.5, k as f64 * 0.05),
                radius: 0.04,
            })
            .collect();
        let c = InitConfig {
            budget: 2_000,
            ..cfg()
        };
        let r = init_roadmap(
            &m,
            &st(&[0.2, 0.5]),
            &st(&[0.8, 0.5]),
            &wall,
            &mut ChaCha8Rng::seed_from_u64(1),
            c,
        );
        assert_eq!(r.unwrap_err(), SolveError::InitFailure { robot: 0 });
    }

    #[test]
    fn init_dubins_connects_in_forward_direction() {
        let m = RobotModel::dubins2d(0.02, 0.05);
        let obs = [SphereObstacle {
            center: Vec3::xy(0.5, 0.5),
            radius: 0.15,
        }];
        let (s, g) = (st(&[0.15, 0.5, 0.0]), st(&[0.85, 0.5, 0.0]));
        for seed in 0..5 {
            let rm = init_roadmap(
                &m,
                &s,
                &g,
                &obs,
                &mut ChaCha8Rng::seed_from_u64(seed),
                cfg(),
            )
            .unwrap();
            assert!(rm.goal_dist(rm.start_id()).is_finite());
            assert_eq!(rm.state(rm.goal_id()), &g);
            assert_eq!(rm.state(rm.start_id()), &s);
            rm.check_consistency(&m, &obs).unwrap();
        }
    }

    #[test]
    fn init_empty_point2d_is_near_straight() {
        let m = RobotModel::point2d(0.02);
        let mut good = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = st(&[rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)]);
            let g = st(&[rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)]);
            let rm = init_roadmap(&m, &s, &g, &[], &mut rng, cfg()).unwrap();
            if rm.goal_dist(rm.start_id()) <= 1.5 * m.dist(&s, &g) {
                good += 1;
            }
        }
        assert!(good >= 95, "{good}/100");
    }
}
