//! Greedy conflict-based search over per-robot roadmaps: constraint-tree
//! nodes with fewer conflicts are expanded first, so the result is not
//! cost-optimal.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;

use super::prm::{motion_at, RobotGraphs};
use super::{space_time_astar, BaselineParams, Deadline};
use crate::error::SolveError;
use crate::instance::{Instance, Solution};

/// Robot may not traverse `u -> v` during step `t -> t + 1`; `u == v` is a
/// wait at `u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Constraint {
    pub robot: usize,
    pub t: u32,
    pub u: u32,
    pub v: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Conflict {
    pub t: u32,
    pub i: usize,
    pub j: usize,
}

/// Number of colliding (step, pair) combinations and the earliest one.
pub(crate) fn conflicts(g: &RobotGraphs, paths: &[Vec<u32>]) -> (u32, Option<Conflict>) {
    let steps = paths
        .iter()
        .map(Vec::len)
        .max()
        .unwrap_or(1)
        .saturating_sub(1);
    let mut count = 0;
    let mut first = None;
    for t in 0..steps {
        for i in 0..paths.len() {
            for j in i + 1..paths.len() {
                if g.collide(i, motion_at(&paths[i], t), j, motion_at(&paths[j], t)) {
                    count += 1;
                    first.get_or_insert(Conflict { t: t as u32, i, j });
                }
            }
        }
    }
    (count, first)
}

fn satisfies(path: &[u32], cs: &[Constraint]) -> bool {
    cs.iter().all(|c| {
        let steps = path.len() - 1;
        let m = motion_at(path, c.t as usize);
        // past the end the robot rests at its goal forever
        !(m == (c.u, c.v) && (c.t as usize) < steps.max(c.t as usize + 1))
    })
}

/// Low level: space-time A* for robot `i` under its constraints, breaking
/// ties towards fewer conflicts with the other robots' current paths.
pub(crate) fn low_level(
    g: &RobotGraphs,
    i: usize,
    constraints: &[Constraint],
    others: &[Option<&Vec<u32>>],
    deadline: Option<Deadline>,
) -> Result<Option<Vec<u32>>, SolveError> {
    let mine: FxHashSet<(u32, u32, u32)> = constraints
        .iter()
        .filter(|c| c.robot == i)
        .map(|c| (c.t, c.u, c.v))
        .collect();
    let goal = g.roadmaps[i].goal_id();
    let last_rest_ban = constraints
        .iter()
        .filter(|c| c.robot == i && c.u == goal && c.v == goal)
        .map(|c| c.t)
        .max();
    let blocked = |t: u32, u: u32, v: u32| mine.contains(&(t, u, v));
    let penalty = |t: u32, u: u32, v: u32| {
        others
            .iter()
            .enumerate()
            .filter(|&(j, p)| j != i && p.is_some())
            .filter(|(j, p)| g.collide(i, (u, v), *j, motion_at(p.unwrap(), t as usize)))
            .count() as u32
    };
    let can_rest = |t: u32| last_rest_ban.is_none_or(|b| t > b);
    space_time_astar(&g.query(i), blocked, penalty, can_rest, deadline)
}

struct CtNode {
    paths: Vec<Vec<u32>>,
    constraints: Vec<Constraint>,
    first: Option<Conflict>,
}

struct Entry {
    conflicts: u32,
    soc: usize,
    counter: usize,
    node: usize,
}

impl PartialEq for Entry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        o.conflicts
            .cmp(&self.conflicts)
            .then(o.soc.cmp(&self.soc))
            .then(o.counter.cmp(&self.counter))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Result of the high-level search on fixed roadmaps.
pub(crate) struct CbsOutcome {
    pub paths: Vec<Vec<u32>>,
    /// Constraint-tree nodes expanded (the root counts as zero).
    #[cfg_attr(not(test), allow(dead_code))]
    pub expansions: usize,
}

pub(crate) fn search(
    g: &RobotGraphs,
    node_budget: usize,
    deadline: Option<Deadline>,
) -> Result<Option<CbsOutcome>, SolveError> {
    let n = g.models.len();
    let mut root_paths: Vec<Option<Vec<u32>>> = vec![None; n];
    for i in 0..n {
        let others: Vec<Option<&Vec<u32>>> = root_paths.iter().map(Option::as_ref).collect();
        match low_level(g, i, &[], &others, deadline)? {
            Some(p) => root_paths[i] = Some(p),
            None => return Ok(None),
        }
    }
    let paths: Vec<Vec<u32>> = root_paths.into_iter().map(Option::unwrap).collect();
    let (c, first) = conflicts(g, &paths);
    let soc = paths.iter().map(|p| p.len() - 1).sum();
    let mut nodes = vec![CtNode {
        paths,
        constraints: Vec::new(),
        first,
    }];
    let mut open = BinaryHeap::from([Entry {
        conflicts: c,
        soc,
        counter: 0,
        node: 0,
    }]);
    let mut expansions = 0;
    while let Some(Entry { node, .. }) = open.pop() {
        if let Some(d) = deadline {
            d.check()?;
        }
        let Some(conflict) = nodes[node].first else {
            let paths = std::mem::take(&mut nodes[node].paths);
            return Ok(Some(CbsOutcome { paths, expansions }));
        };
        expansions += 1;
        for robot in [conflict.i, conflict.j] {
            if nodes.len() >= node_budget {
                return Err(SolveError::Timeout);
            }
            let parent = &nodes[node];
            let (u, v) = motion_at(&parent.paths[robot], conflict.t as usize);
            let mut constraints = parent.constraints.clone();
            constraints.push(Constraint {
                robot,
                t: conflict.t,
                u,
                v,
            });
            let others: Vec<Option<&Vec<u32>>> = parent.paths.iter().map(Some).collect();
            let Some(p) = low_level(g, robot, &constraints, &others, deadline)? else {
                continue;
            };
            let mine: Vec<Constraint> = constraints
                .iter()
                .copied()
                .filter(|c| c.robot == robot)
                .collect();
            assert!(satisfies(&p, &mine), "low level violated a constraint");
            let mut paths = parent.paths.clone();
            paths[robot] = p;
            let (c, first) = conflicts(g, &paths);
            let soc = paths.iter().map(|p| p.len() - 1).sum();
            nodes.push(CtNode {
                paths,
                constraints,
                first,
            });
            let id = nodes.len() - 1;
            open.push(Entry {
                conflicts: c,
                soc,
                counter: id,
                node: id,
            });
        }
    }
    Ok(None)
}

/// Constraint-tree exhaustion and node-budget exhaustion both count as a
/// timeout.
pub fn cbs_solve(instance: &Instance, params: &BaselineParams) -> Result<Solution, SolveError> {
    params.validate()?;
    instance.validate().map_err(SolveError::InvalidInstance)?;
    let deadline = params.deadline();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let g = RobotGraphs::build(instance, params, &mut rng, deadline)?;
    match search(&g, params.cbs_node_budget, Some(deadline))? {
        Some(out) => Ok(g.to_solution(&out.paths)),
        None => Err(SolveError::Timeout),
    }
}
