use rand::Rng;

use super::Deadline;
use crate::error::SolveError;
use crate::geometry::SphereObstacle;
use crate::roadmap::Roadmap;
use crate::robots::{RobotModel, State};

/// Give up on drawing more valid samples after this many tries per sample.
const TRIES_PER_SAMPLE: usize = 100;

/// Radius PRM for one robot: `samples` valid states plus start and goal,
/// every pair within `radius` linked in each direction the local planner
/// allows. Goal distances are up to date on return.
pub fn build_prm<R: Rng + ?Sized>(
    model: &RobotModel,
    obstacles: &[SphereObstacle],
    start: &State,
    goal: &State,
    samples: usize,
    radius: f64,
    rng: &mut R,
) -> Roadmap {
    build_prm_until(model, obstacles, start, goal, samples, radius, rng, None).expect("no deadline")
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn build_prm_until<R: Rng + ?Sized>(
    model: &RobotModel,
    obstacles: &[SphereObstacle],
    start: &State,
    goal: &State,
    samples: usize,
    radius: f64,
    rng: &mut R,
    deadline: Option<Deadline>,
) -> Result<Roadmap, SolveError> {
    let check = || deadline.map_or(Ok(()), |d| d.check());
    let mut rm = Roadmap::new(start.clone(), goal.clone());
    let mut tries = 0;
    let mut added = 0;
    while added < samples && tries < samples * TRIES_PER_SAMPLE {
        tries += 1;
        let q = model.sample(rng);
        if model.is_valid(&q, obstacles) {
            rm.push_vertex(q);
            added += 1;
        }
    }
    for a in 0..rm.len() {
        check()?;
        for b in a + 1..rm.len() {
            let (a, b) = (a as u32, b as u32);
            let d = model.dist(rm.state(a), rm.state(b));
            if d <= radius {
                rm.try_link(model, obstacles, a, b, d);
            }
        }
    }
    rm.rebuild_goal_dist();
    Ok(rm)
}


/// Per-robot roadmaps with the lookup tables shared by PP and CBS.
pub(crate) struct RobotGraphs {
    pub models: Vec<RobotModel>,
    pub roadmaps: Vec<Roadmap>,
    pub hops: Vec<Vec<u32>>,
    /// Total vertex count; caps space-time searches.
    pub horizon: u32,
    sweeps: std::cell::RefCell<crate::collision::EdgeSweeps>,
}

impl RobotGraphs {
    pub fn build<R: Rng + ?Sized>(
        instance: &crate::instance::Instance,
        params: &super::BaselineParams,
        rng: &mut R,
        deadline: Deadline,
    ) -> Result<Self, SolveError> {
        let models = instance.models();
        let mut roadmaps = Vec::with_capacity(models.len());
        for r in &instance.robots {
            let rm = build_prm_until(
                &r.model,
                &instance.obstacles,
                &r.start,
                &r.goal,
                params.roadmap_samples,
                params.roadmap_radius,
                rng,
                Some(deadline),
            )?;
            roadmaps.push(rm);
        }
        Ok(Self::from_roadmaps(models, roadmaps))
    }

    pub fn from_roadmaps(models: Vec<RobotModel>, roadmaps: Vec<Roadmap>) -> Self {
        let hops = roadmaps
            .iter()
            .map(super::spacetime::hops_to_goal)
            .collect();
        let horizon = roadmaps
            .iter()
            .map(Roadmap::len)
            .sum::<usize>()
            .min(u32::MAX as usize) as u32;
        RobotGraphs {
            models,
            roadmaps,
            hops,
            horizon,
            sweeps: Default::default(),
        }
    }

    pub fn query(&self, i: usize) -> super::SpaceTimeQuery<'_> {
        super::SpaceTimeQuery {
            roadmap: &self.roadmaps[i],
            hops: &self.hops[i],
            horizon: self.horizon,
        }
    }

    /// Robot `i` moving `a` and robot `j` moving `b` during the same step.
    pub fn collide(&self, i: usize, a: (u32, u32), j: usize, b: (u32, u32)) -> bool {
        let mut cache = self.sweeps.borrow_mut();
        let si = cache.get(i, &self.models[i], &self.roadmaps[i], a.0, a.1);
        let sj = cache.get(j, &self.models[j], &self.roadmaps[j], b.0, b.1);
        si.intersects(&sj)
    }

    pub fn to_solution(&self, paths: &[Vec<u32>]) -> crate::instance::Solution {
        crate::instance::Solution::padded(
            paths
                .iter()
                .zip(&self.roadmaps)
                .map(|(p, rm)| p.iter().map(|&v| rm.state(v).clone()).collect())
                .collect(),
        )
    }
}

/// Edge traversed during step `t -> t + 1`; robots rest at their last
/// vertex once the path ends.
pub(crate) fn motion_at(path: &[u32], t: usize) -> (u32, u32) {
    let last = path.len() - 1;
    (path[t.min(last)], path[(t + 1).min(last)])
}
