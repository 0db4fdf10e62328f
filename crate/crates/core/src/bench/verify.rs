//! Independent solution checker.
//!
//! Only forward kinematics, the local planner's trajectory shape and the
//! geometry kernels are shared with the planners. Validity is re-derived
//! from body poses sampled at half the planning resolution.

use serde::{Deserialize, Serialize};

use crate::geometry::{body_obstacle_clear, capsules_intersect, Aabb, Capsule};
use crate::instance::{Instance, Solution};
use crate::robots::{RobotModel, State, COLLISION_RESOLUTION};

pub const VERIFY_RESOLUTION: f64 = COLLISION_RESOLUTION / 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Path count, path lengths or state dimensions are wrong.
    Shape {
        message: String,
    },
    Start {
        robot: usize,
    },
    Goal {
        robot: usize,
    },
    /// Motion from step `step` to `step + 1` leaves free space somewhere.
    Motion {
        robot: usize,
        step: usize,
    },
    /// Robots `i` and `j` overlap during the motion ending at `step`.
    Collision {
        i: usize,
        j: usize,
        step: usize,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Shape { message } => write!(f, "malformed solution: {message}"),
            Violation::Start { robot } => write!(f, "robot {robot} does not begin at its start"),
            Violation::Goal { robot } => write!(f, "robot {robot} does not end at its goal"),
            Violation::Motion { robot, step } => {
                write!(f, "robot {robot} motion {step}->{} is invalid", step + 1)
            }
            Violation::Collision { i, j, step } => {
                write!(f, "robots {i} and {j} collide during step {step}")
            }
        }
    }
}

fn same_state(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9)
}

/// Non-adjacent links overlap.
fn self_overlap(body: &[Capsule]) -> bool {
    (0..body.len()).any(|a| (a + 2..body.len()).any(|b| capsules_intersect(&body[a], &body[b])))
}

/// Body poses along one motion at `delta` spacing.
fn sampled_poses(model: &RobotModel, from: &State, to: &State, delta: f64) -> Vec<Vec<Capsule>> {
    if same_state(from, to) {
        return vec![model.body(from)];
    }
    let traj = model.trajectory(from, to);
    let n = ((model.displacement_bound(&traj) / delta).ceil() as usize).max(1);
    (0..=n)
        .map(|k| model.body(&model.evaluate(&traj, k as f64 / n as f64)))
        .collect()
}

struct Footprint {
    caps: Vec<Capsule>,
    aabb: Aabb,
}

impl Footprint {
    fn new(caps: Vec<Capsule>) -> Self {
        let aabb = caps.iter().fold(Aabb::EMPTY, |a, c| a.union(c.aabb()));
        Footprint { caps, aabb }
    }

    fn overlaps(&self, o: &Footprint) -> bool {
        self.aabb.overlaps(&o.aabb)
            && self.caps.iter().any(|a| {
                let ab = a.aabb();
                ab.overlaps(&o.aabb)
                    && o.caps
                        .iter()
                        .any(|b| ab.overlaps(&b.aabb()) && capsules_intersect(a, b))
            })
    }
}

pub fn verify(instance: &Instance, solution: &Solution) -> Vec<Violation> {
    verify_at(instance, solution, VERIFY_RESOLUTION)
}

pub fn verify_at(instance: &Instance, solution: &Solution, delta: f64) -> Vec<Violation> {
    let n = instance.n();
    let mut out = Vec::new();
    if solution.paths.len() != n {
        out.push(Violation::Shape {
            message: format!("{} paths for {n} robots", solution.paths.len()),
        });
        return out;
    }
    let len = solution.paths[0].len();
    if len == 0 || solution.paths.iter().any(|p| p.len() != len) {
        out.push(Violation::Shape {
            message: "paths are empty or of unequal length".into(),
        });
        return out;
    }
    for (i, (r, p)) in instance.robots.iter().zip(&solution.paths).enumerate() {
        if let Some(k) = p
            .iter()
            .position(|q| r.model.check_state(q).is_err() || q.iter().any(|v| !v.is_finite()))
        {
            out.push(Violation::Shape {
                message: format!("robot {i} state {k} has the wrong dimension"),
            });
            return out;
        }
        if !same_state(&p[0], &r.start) {
            out.push(Violation::Start { robot: i });
        }
        if !same_state(&p[len - 1], &r.goal) {
            out.push(Violation::Goal { robot: i });
        }
    }
    let dim = instance.scenario.workspace_dim();
    let steps = len.saturating_sub(1).max(1);
    for step in 0..steps {
        let next = (step + 1).min(len - 1);
        let mut prints = Vec::with_capacity(n);
        for (i, (r, p)) in instance.robots.iter().zip(&solution.paths).enumerate() {
            let poses = sampled_poses(&r.model, &p[step], &p[next], delta);
            let bad = poses.iter().any(|b| {
                !body_obstacle_clear(b, &instance.obstacles, dim)
                    || (r.model.scenario.is_articulated() && self_overlap(b))
            });
            if bad {
                out.push(Violation::Motion { robot: i, step });
            }
            prints.push(Footprint::new(poses.into_iter().flatten().collect()));
        }
        for i in 0..n {
            for j in i + 1..n {
                if prints[i].overlaps(&prints[j]) {
                    out.push(Violation::Collision { i, j, step });
                }
            }
        }
    }
    out
}
