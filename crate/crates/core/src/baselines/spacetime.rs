//! Space-time A* over one robot's roadmap with unit timesteps.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rustc_hash::FxHashSet;

use super::Deadline;
use crate::error::SolveError;
use crate::roadmap::{Roadmap, VertexId};

/// Unreachable marker in [`hops_to_goal`].
pub const NO_HOPS: u32 = u32::MAX;

/// Fewest edges from each vertex to the goal.
pub fn hops_to_goal(rm: &Roadmap) -> Vec<u32> {
    let mut hops = vec![NO_HOPS; rm.len()];
    let goal = rm.goal_id();
    hops[goal as usize] = 0;
    let mut queue = VecDeque::from([goal]);
    while let Some(v) = queue.pop_front() {
        for e in rm.in_edges(v) {
            if hops[e.other as usize] == NO_HOPS {
                hops[e.other as usize] = hops[v as usize] + 1;
                queue.push_back(e.other);
            }
        }
    }
    hops
}

pub struct SpaceTimeQuery<'a> {
    pub roadmap: &'a Roadmap,
    /// From [`hops_to_goal`].
    pub hops: &'a [u32],
    /// Arrival later than this timestep is not considered.
    pub horizon: u32,
}

#[derive(Clone, Copy)]
struct Node {
    v: VertexId,
    t: u32,
    conflicts: u32,
    len: f64,
    parent: u32,
}

/// Lexicographic key: arrival time, then conflicts, then path length.
#[derive(Clone, Copy)]
struct Key {
    f_time: u32,
    conflicts: u32,
    f_len: f64,
    counter: u32,
}

impl PartialEq for Key {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, o: &Self) -> Ordering {
        // reversed for the max-heap
        o.f_time
            .cmp(&self.f_time)
            .then_with(|| o.conflicts.cmp(&self.conflicts))
            .then_with(|| o.f_len.total_cmp(&self.f_len))
            .then_with(|| o.counter.cmp(&self.counter))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Vertex sequence from the start (time 0) to the goal minimizing arrival
/// time, then the summed `penalty`, then path length.
///
/// `blocked(t, u, v)` forbids traversing `u -> v` during step `t -> t + 1`
/// (`u == v` is waiting). `can_rest(t)` says whether the robot may stay at
/// its goal from time `t` on.
pub fn space_time_astar(
    query: &SpaceTimeQuery<'_>,
    mut blocked: impl FnMut(u32, VertexId, VertexId) -> bool,
    mut penalty: impl FnMut(u32, VertexId, VertexId) -> u32,
    mut can_rest: impl FnMut(u32) -> bool,
    deadline: Option<Deadline>,
) -> Result<Option<Vec<VertexId>>, SolveError> {
    let rm = query.roadmap;
    let start = rm.start_id();
    if query.hops[start as usize] == NO_HOPS {
        return Ok(None);
    }
    let h_len = |v: VertexId| rm.goal_dist(v);
    let mut nodes = vec![Node {
        v: start,
        t: 0,
        conflicts: 0,
        len: 0.0,
        parent: u32::MAX,
    }];
    let mut open = BinaryHeap::new();
    let mut counter = 0u32;
    open.push((
        Key {
            f_time: query.hops[start as usize],
            conflicts: 0,
            f_len: h_len(start),
            counter,
        },
        0u32,
    ));
    let mut closed: FxHashSet<(VertexId, u32)> = FxHashSet::default();
    let mut pops = 0u32;
    while let Some((_, k)) = open.pop() {
        pops = pops.wrapping_add(1);
        if pops.is_multiple_of(256) {
            if let Some(d) = deadline {
                d.check()?;
            }
        }
        let node = nodes[k as usize];
        if !closed.insert((node.v, node.t)) {
            continue;
        }
        if node.v == rm.goal_id() && can_rest(node.t) {
            let mut path = Vec::with_capacity(node.t as usize + 1);
            let mut cur = k;
            while cur != u32::MAX {
                path.push(nodes[cur as usize].v);
                cur = nodes[cur as usize].parent;
            }
            path.reverse();
            return Ok(Some(path));
        }
        if node.t >= query.horizon {
            continue;
        }
        let t2 = node.t + 1;
        for e in rm.out_edges(node.v) {
            let h = query.hops[e.other as usize];
            if h == NO_HOPS || closed.contains(&(e.other, t2)) || blocked(node.t, node.v, e.other) {
                continue;
            }
            let child = Node {
                v: e.other,
                t: t2,
                conflicts: node.conflicts + penalty(node.t, node.v, e.other),
                len: node.len + e.weight,
                parent: k,
            };
            counter += 1;
            let key = Key {
                f_time: t2.saturating_add(h),
                conflicts: child.conflicts,
                f_len: child.len + h_len(e.other),
                counter,
            };
            nodes.push(child);
            open.push((key, nodes.len() as u32 - 1));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robots::State;

    /// Path graph 0 - 2 - 3 - 1 (start 0, goal 1) with self-loops.
    fn line() -> Roadmap {
        let mut rm = Roadmap::new(State(vec![0.0]), State(vec![3.0]));
        let a = rm.push_vertex(State(vec![1.0]));
        let b = rm.push_vertex(State(vec![2.0]));
        for (u, v) in [(0, a), (a, b), (b, 1)] {
            rm.add_edge(u, v, 1.0);
            rm.add_edge(v, u, 1.0);
        }
        rm.rebuild_goal_dist();
        rm
    }

    #[test]
    fn unconstrained_is_shortest() {
        let rm = line();
        let hops = hops_to_goal(&rm);
        assert_eq!(hops, vec![3, 0, 2, 1]);
        let q = SpaceTimeQuery {
            roadmap: &rm,
            hops: &hops,
            horizon: 10,
        };
        let p = space_time_astar(&q, |_, _, _| false, |_, _, _| 0, |_| true, None)
            .unwrap()
            .unwrap();
        assert_eq!(p, vec![0, 2, 3, 1]);
    }

    #[test]
    fn blocked_edge_forces_wait() {
        let rm = line();
        let hops = hops_to_goal(&rm);
        let q = SpaceTimeQuery {
            roadmap: &rm,
            hops: &hops,
            horizon: 10,
        };
        let p = space_time_astar(
            &q,
            |t, u, v| t == 1 && u == 2 && v == 3,
            |_, _, _| 0,
            |_| true,
            None,
        )
        .unwrap()
        .unwrap();
        assert_eq!(p.len(), 5);
        assert_eq!(p[0], 0);
        assert_eq!(*p.last().unwrap(), 1);
    }

    #[test]
    fn rest_constraint_delays_arrival() {
        let rm = line();
        let hops = hops_to_goal(&rm);
        let q = SpaceTimeQuery {
            roadmap: &rm,
            hops: &hops,
            horizon: 10,
        };
        let p = space_time_astar(&q, |_, _, _| false, |_, _, _| 0, |t| t >= 5, None)
            .unwrap()
            .unwrap();
        assert_eq!(p.len(), 6);
    }

    #[test]
    fn horizon_cuts_search() {
        let rm = line();
        let hops = hops_to_goal(&rm);
        let q = SpaceTimeQuery {
            roadmap: &rm,
            hops: &hops,
            horizon: 2,
        };
        assert!(
            space_time_astar(&q, |_, _, _| false, |_, _, _| 0, |_| true, None)
                .unwrap()
                .is_none()
        );
    }
}
