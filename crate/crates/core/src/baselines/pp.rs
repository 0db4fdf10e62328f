//! Prioritized planning over per-robot roadmaps.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::prm::{motion_at, RobotGraphs};
use super::{space_time_astar, BaselineParams, Deadline};
use crate::error::SolveError;
use crate::instance::{Instance, Solution};

/// Plan robots one by one in `order`, each avoiding the space-time paths of
/// those before it. `None` when some robot finds no path.
pub(crate) fn plan_in_order(
    g: &RobotGraphs,
    order: &[usize],
    deadline: Option<Deadline>,
) -> Result<Option<Vec<Vec<u32>>>, SolveError> {
    let n = g.models.len();
    let mut paths: Vec<Option<Vec<u32>>> = vec![None; n];
    let mut planned: Vec<usize> = Vec::with_capacity(n);
    for &i in order {
        let goal = g.roadmaps[i].goal_id();
        let busy_until = planned
            .iter()
            .map(|&j| paths[j].as_ref().unwrap().len())
            .max()
            .unwrap_or(0);
        let blocked = |t: u32, u: u32, v: u32| {
            planned.iter().any(|&j| {
                g.collide(
                    i,
                    (u, v),
                    j,
                    motion_at(paths[j].as_ref().unwrap(), t as usize),
                )
            })
        };
        let can_rest = |t: u32| {
            (t as usize..busy_until).all(|s| {
                planned.iter().all(|&j| {
                    !g.collide(i, (goal, goal), j, motion_at(paths[j].as_ref().unwrap(), s))
                })
            })
        };
        match space_time_astar(&g.query(i), blocked, |_, _, _| 0, can_rest, deadline)? {
            Some(p) => paths[i] = Some(p),
            None => return Ok(None),
        }
        planned.push(i);
    }
    Ok(Some(paths.into_iter().map(Option::unwrap).collect()))
}

/// Random priority orders are drawn until one succeeds or time runs out.
pub fn pp_solve(instance: &Instance, params: &BaselineParams) -> Result<Solution, SolveError> {
    params.validate()?;
    instance.validate().map_err(SolveError::InvalidInstance)?;
    let deadline = params.deadline();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let g = RobotGraphs::build(instance, params, &mut rng, deadline)?;
    let mut order: Vec<usize> = (0..instance.n()).collect();
    loop {
        deadline.check()?;
        order.shuffle(&mut rng);
        if let Some(paths) = plan_in_order(&g, &order, Some(deadline))? {
            return Ok(g.to_solution(&paths));
        }
    }
}

/// One attempt with a fixed priority order. Fails with
/// [`SolveError::Exhausted`] when some robot has no path.
pub fn pp_solve_with_order(
    instance: &Instance,
    params: &BaselineParams,
    order: &[usize],
) -> Result<Solution, SolveError> {
    params.validate()?;
    instance.validate().map_err(SolveError::InvalidInstance)?;
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..instance.n()).collect::<Vec<_>>() {
        return Err(SolveError::InvalidParams(
            "order must be a permutation of the robots".into(),
        ));
    }
    let deadline = params.deadline();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let g = RobotGraphs::build(instance, params, &mut rng, deadline)?;
    plan_in_order(&g, order, Some(deadline))?
        .map(|p| g.to_solution(&p))
        .ok_or(SolveError::Exhausted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::verify;
    use crate::geometry::{SphereObstacle, Vec3};
    use crate::instance::Robot;
    use crate::roadmap::Roadmap;
    use crate::robots::{RobotModel, Scenario, State};

    fn st(v: &[f64]) -> State {
        State(v.to_vec())
    }

    fn points(pairs: &[([f64; 2], [f64; 2])], obstacles: Vec<SphereObstacle>) -> Instance {
        Instance {
            id: "p".into(),
            scenario: Scenario::Point2d,
            robots: pairs
                .iter()
                .map(|(s, g)| Robot {
                    model: RobotModel::point2d(0.04),
                    start: st(s),
                    goal: st(g),
                })
                .collect(),
            obstacles,
            seed: 0,
        }
    }

    #[test]
    fn single_robot_matches_dijkstra_length() {
        let inst = points(&[([0.1, 0.1], [0.9, 0.8])], vec![]);
        let params = BaselineParams {
            time_limit: 30.0,
            seed: 2,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let g = RobotGraphs::build(&inst, &params, &mut rng, params.deadline()).unwrap();
        let paths = plan_in_order(&g, &[0], None).unwrap().unwrap();
        let rm = &g.roadmaps[0];
        let len: f64 = paths[0]
            .windows(2)
            .map(|w| g.models[0].dist(rm.state(w[0]), rm.state(w[1])))
            .sum();
        // fewest steps first, so never shorter than the Dijkstra optimum
        assert!(len >= rm.goal_dist(rm.start_id()) - 1e-9);
        assert_eq!(paths[0].len() as u32 - 1, g.hops[0][rm.start_id() as usize]);
        let sol = pp_solve(&inst, &params).unwrap();
        assert!(verify(&inst, &sol).is_empty());
    }

    #[test]
    fn disjoint_robots_take_solo_paths() {
        let inst = points(
            &[([0.1, 0.1], [0.3, 0.3]), ([0.7, 0.7], [0.9, 0.9])],
            vec![],
        );
        let params = BaselineParams {
            time_limit: 30.0,
            seed: 4,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let g = RobotGraphs::build(&inst, &params, &mut rng, params.deadline()).unwrap();
        let paths = plan_in_order(&g, &[1, 0], None).unwrap().unwrap();
        for i in 0..2 {
            assert_eq!(
                paths[i].len() as u32 - 1,
                g.hops[i][g.roadmaps[i].start_id() as usize]
            );
        }
    }

    #[test]
    fn fixed_order_is_deterministic() {
        let inst = points(
            &[([0.2, 0.5], [0.8, 0.5]), ([0.8, 0.5], [0.2, 0.5])],
            vec![SphereObstacle {
                center: Vec3::xy(0.5, 0.5),
                radius: 0.08,
            }],
        );
        let params = BaselineParams {
            time_limit: 30.0,
            seed: 9,
            ..Default::default()
        };
        let a = pp_solve_with_order(&inst, &params, &[1, 0]).unwrap();
        let b = pp_solve_with_order(&inst, &params, &[1, 0]).unwrap();
        assert_eq!(a, b);
        assert!(verify(&inst, &a).is_empty());
    }

    /// Corridor along y = 0.5 with a passing bay above x = 0.7.
    fn corridor() -> (Vec<RobotModel>, Vec<Roadmap>) {
        let m = RobotModel::point2d(0.04);
        let xs = [0.1, 0.3, 0.5, 0.7, 0.9];
        let build = |start: usize, goal: usize| {
            let mut rm = Roadmap::new(st(&[xs[start], 0.5]), st(&[xs[goal], 0.5]));
            let mut ids = vec![0u32; 5];
            ids[start] = rm.start_id();
            ids[goal] = rm.goal_id();
            for k in 0..5 {
                if k != start && k != goal {
                    ids[k] = rm.push_vertex(st(&[xs[k], 0.5]));
                }
            }
            let bay = rm.push_vertex(st(&[0.7, 0.7]));
            for k in 0..4 {
                rm.add_edge(ids[k], ids[k + 1], 0.2);
                rm.add_edge(ids[k + 1], ids[k], 0.2);
            }
            rm.add_edge(ids[3], bay, 0.2);
            rm.add_edge(bay, ids[3], 0.2);
            rm.rebuild_goal_dist();
            rm
        };
        (vec![m.clone(), m], vec![build(0, 4), build(4, 0)])
    }

    fn corridor_instance() -> Instance {
        points(
            &[([0.1, 0.5], [0.9, 0.5]), ([0.9, 0.5], [0.1, 0.5])],
            vec![],
        )
    }

    #[test]
    fn head_on_corridor_needs_a_wait() {
        let (models, roadmaps) = corridor();
        let g = RobotGraphs::from_roadmaps(models, roadmaps);
        let paths = plan_in_order(&g, &[0, 1], None).unwrap().unwrap();
        // robot 0 drives straight through; robot 1 ducks into the bay and
        // waits there until robot 0 has passed x = 0.7
        assert_eq!(paths[0].len(), 5);
        let bay = 5;
        let p1 = &paths[1];
        assert_eq!(p1.len(), 9);
        assert!(p1.windows(2).any(|w| w == [bay, bay]));
        assert!(verify(&corridor_instance(), &g.to_solution(&paths)).is_empty());
    }
}
