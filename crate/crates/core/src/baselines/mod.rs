//! Comparison solvers: PRM, RRT and RRT-Connect in the composite space of
//! all robots, and prioritized planning and greedy conflict-based search
//! over per-robot roadmaps.

mod cbs;
mod composite;
mod pp;
mod prm;
mod spacetime;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::robots::Scenario;

pub use cbs::cbs_solve;
pub use composite::{prm_solve, rrt_solve, rrtc_solve};
pub use pp::{pp_solve, pp_solve_with_order};
pub use prm::build_prm;
pub use spacetime::{hops_to_goal, space_time_astar, SpaceTimeQuery, NO_HOPS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineParams {
    /// Seconds.
    pub time_limit: f64,
    pub seed: u64,
    /// Per-robot steering range; composite steering uses `eps * N`.
    pub eps: f64,
    /// Probability of steering straight at the goal in RRT.
    pub goal_bias: f64,
    /// Neighbours tried per composite PRM vertex.
    pub prm_k: usize,
    /// Composite PRM samples added between graph searches.
    pub prm_batch: usize,
    /// Valid samples per robot roadmap for PP and CBS.
    pub roadmap_samples: usize,
    /// Connection radius of the robot roadmaps.
    pub roadmap_radius: f64,
    /// Constraint-tree nodes CBS may generate before giving up.
    pub cbs_node_budget: usize,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams {
            time_limit: 300.0,
            seed: 0,
            eps: 0.2,
            goal_bias: 0.05,
            prm_k: 10,
            prm_batch: 50,
            roadmap_samples: 500,
            roadmap_radius: 0.1,
            cbs_node_budget: 100_000,
        }
    }
}

impl BaselineParams {
    /// Defaults with robot-roadmap density adjusted to the scenario's
    /// configuration-space dimension.
    pub fn for_scenario(scenario: Scenario) -> Self {
        let (roadmap_samples, roadmap_radius) = match scenario {
            Scenario::Point2d => (500, 0.1),
            Scenario::Point3d => (500, 0.2),
            Scenario::Arm22 => (500, 0.15),
            Scenario::Line2d | Scenario::Dubins2d => (1000, 0.2),
            Scenario::Capsule3d | Scenario::Arm33 | Scenario::Snake2d => (1000, 0.3),
        };
        BaselineParams {
            roadmap_samples,
            roadmap_radius,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::InvalidParams(m.into()));
        if !(self.time_limit > 0.0) {
            return bad("time limit must be positive");
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps must be positive");
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return bad("goal bias must lie in [0, 1]");
        }
        if self.prm_k == 0 || self.prm_batch == 0 || self.roadmap_samples == 0 {
            return bad("PRM sizes must be positive");
        }
        if !(self.roadmap_radius > 0.0) {
            return bad("roadmap radius must be positive");
        }
        Ok(())
    }

    fn deadline(&self) -> Deadline {
        Deadline::after(self.time_limit)
    }
}

/// Cooperative wall-clock limit.
#[derive(Clone, Copy, Debug)]
pub struct Deadline(Instant);

impl Deadline {
    pub fn after(seconds: f64) -> Self {
        Deadline(Instant::now() + Duration::from_secs_f64(seconds.min(1e9)))
    }

    pub fn check(&self) -> Result<(), SolveError> {
        if Instant::now() >= self.0 {
            Err(SolveError::Timeout)
        } else {
            Ok(())
        }
    }
}
