//! Inter-robot collision under the conservative swept-region semantics: two
//! motions collide if any body pose of one, at any time, overlaps any body
//! pose of the other, at any time.

use std::rc::Rc;

use rustc_hash::FxHashMap;

use crate::geometry::{capsules_intersect, Aabb, Capsule};
use crate::roadmap::{Roadmap, VertexId};
use crate::robots::{RobotModel, State, COLLISION_RESOLUTION};

/// Capsule cover of everything a robot occupies during one motion.
#[derive(Clone, Debug)]
pub struct Sweep {
    capsules: Vec<Capsule>,
    boxes: Vec<Aabb>,
    aabb: Aabb,
}

impl Sweep {
    pub fn new(capsules: Vec<Capsule>) -> Self {
        let boxes: Vec<Aabb> = capsules.iter().map(Capsule::aabb).collect();
        let aabb = boxes.iter().fold(Aabb::EMPTY, |acc, b| acc.union(*b));
        Sweep {
            capsules,
            boxes,
            aabb,
        }
    }

    /// Region swept moving from `from` to `to` along the local planner.
    pub fn motion(model: &RobotModel, from: &[f64], to: &[f64]) -> Self {
        let traj = model.trajectory(from, to);
        Sweep::new(model.swept_capsules(&traj, COLLISION_RESOLUTION))
    }

    /// Body at rest.
    pub fn stationary(model: &RobotModel, q: &[f64]) -> Self {
        Sweep::new(model.body(q))
    }

    /// Union of body poses at the `delta` sample grid, ignoring any exact
    /// sweep the model might offer.
    pub fn sampled(model: &RobotModel, from: &[f64], to: &[f64], delta: f64) -> Self {
        let traj = model.trajectory(from, to);
        Sweep::new(
            model
                .sample_states(&traj, delta)
                .iter()
                .flat_map(|s| model.body(s))
                .collect(),
        )
    }

    pub fn capsules(&self) -> &[Capsule] {
        &self.capsules
    }

    pub fn aabb(&self) -> Aabb {
        self.aabb
    }

    pub fn intersects(&self, other: &Sweep) -> bool {
        if !self.aabb.overlaps(&other.aabb) {
            return false;
        }
        for (a, abox) in self.capsules.iter().zip(&self.boxes) {
            if !abox.overlaps(&other.aabb) {
                continue;
            }
            for (b, bbox) in other.capsules.iter().zip(&other.boxes) {
                if abox.overlaps(bbox) && capsules_intersect(a, b) {
                    return true;
                }
            }
        }
        false
    }
}

/// Simultaneous motions of robots `i` and `j`.
#[derive(Clone, Copy, Debug)]
pub struct MotionPair<'a> {
    pub i: usize,
    pub j: usize,
    pub qi_from: &'a [f64],
    pub qi_to: &'a [f64],
    pub qj_from: &'a [f64],
    pub qj_to: &'a [f64],
}

pub fn collide_pair(model_i: &RobotModel, model_j: &RobotModel, mp: &MotionPair<'_>) -> bool {
    let si = Sweep::motion(model_i, mp.qi_from, mp.qi_to);
    let sj = Sweep::motion(model_j, mp.qj_from, mp.qj_to);
    si.intersects(&sj)
}

/// Whether any pair of robots collides while all move from `from` to `to`.
pub fn collide_config(models: &[RobotModel], from: &[State], to: &[State]) -> bool {
    assert!(
        models.len() == from.len() && from.len() == to.len(),
        "configuration sizes differ"
    );
    let sweeps: Vec<Sweep> = (0..models.len())
        .map(|i| Sweep::motion(&models[i], &from[i], &to[i]))
        .collect();
    for i in 0..sweeps.len() {
        for j in i + 1..sweeps.len() {
            if sweeps[i].intersects(&sweeps[j]) {
                return true;
            }
        }
    }
    false
}

/// Same as [`collide_config`] when only robot `mover` changes state: the
/// stationary robots were already pairwise collision-free.
pub fn collide_single_move(
    models: &[RobotModel],
    config: &[State],
    mover: usize,
    to: &[f64],
) -> bool {
    let moving = Sweep::motion(&models[mover], &config[mover], to);
    (0..models.len())
        .filter(|&j| j != mover)
        .any(|j| moving.intersects(&Sweep::stationary(&models[j], &config[j])))
}

/// Memoized sweeps of roadmap edges, keyed by robot and edge endpoints. A
/// self-loop key holds the body at rest.
#[derive(Default)]
pub struct EdgeSweeps {
    map: FxHashMap<(u32, VertexId, VertexId), Rc<Sweep>>,
}

impl EdgeSweeps {
    pub fn get(
        &mut self,
        robot: usize,
        model: &RobotModel,
        rm: &Roadmap,
        u: VertexId,
        v: VertexId,
    ) -> Rc<Sweep> {
        self.map
            .entry((robot as u32, u, v))
            .or_insert_with(|| {
                Rc::new(if u == v {
                    Sweep::stationary(model, rm.state(u))
                } else {
                    Sweep::motion(model, rm.state(u), rm.state(v))
                })
            })
            .clone()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn st(v: &[f64]) -> State {
        State(v.to_vec())
    }

    #[test]
    fn stationary_disjoint_bodies_do_not_collide() {
        let m = RobotModel::point2d(0.1);
        let (a, b) = ([0.2, 0.2], [0.6, 0.6]);
        let mp = MotionPair {
            i: 0,
            j: 1,
            qi_from: &a,
            qi_to: &a,
            qj_from: &b,
            qj_to: &b,
        };
        assert!(!collide_pair(&m, &m, &mp));
    }

    #[test]
    fn swapping_points_collide() {
        let m = RobotModel::point2d(0.1);
        let (a, b) = ([0.2, 0.5], [0.8, 0.5]);
        let mp = MotionPair {
            i: 0,
            j: 1,
            qi_from: &a,
            qi_to: &b,
            qj_from: &b,
            qj_to: &a,
        };
        assert!(collide_pair(&m, &m, &mp));
    }

    #[test]
    fn crossing_diagonals_collide() {
        let m = RobotModel::point2d(0.1);
        let mp = MotionPair {
            i: 0,
            j: 1,
            qi_from: &[0.0, 0.0],
            qi_to: &[1.0, 1.0],
            qj_from: &[1.0, 0.0],
            qj_to: &[0.0, 1.0],
        };
        assert!(collide_pair(&m, &m, &mp));
    }

    #[test]
    fn union_semantics_catches_time_separated_overlap() {
        // j passes the crossing point long after i: synchronized checking
        // would accept this, the swept test does not
        let m = RobotModel::point2d(0.02);
        let mp = MotionPair {
            i: 0,
            j: 1,
            qi_from: &[0.1, 0.5],
            qi_to: &[0.9, 0.5],
            qj_from: &[0.15, 0.9],
            qj_to: &[0.15, 0.1],
        };
        assert!(collide_pair(&m, &m, &mp));
    }

    #[test]
    fn single_robot_never_collides() {
        let m = vec![RobotModel::point2d(0.1)];
        assert!(!collide_config(&m, &[st(&[0.1, 0.1])], &[st(&[0.9, 0.9])]));
    }

    #[test]
    fn three_robots_one_colliding_pair() {
        let m = vec![RobotModel::point2d(0.05); 3];
        let from = [st(&[0.1, 0.1]), st(&[0.5, 0.5]), st(&[0.9, 0.9])];
        let to = [st(&[0.1, 0.1]), st(&[0.55, 0.5]), st(&[0.6, 0.5])];
        assert!(collide_config(&m, &from, &to));
        assert!(collide_single_move(
            &m,
            &[from[0].clone(), to[1].clone(), from[2].clone()],
            2,
            &to[2]
        ));
    }

    #[test]
    fn articulated_sweep_is_sampled() {
        let arm = RobotModel::arm22(Vec3::xy(0.3, 0.5), [0.1, 0.1], 0.01);
        let sweep = Sweep::motion(&arm, &[0.0, 0.0], &[1.0, 0.0]);
        assert!(sweep.capsules().len() > 2);
        // a ball sitting in the middle of the swept fan
        let ball = RobotModel::point2d(0.01);
        let target = Vec3::xy(0.3 + 0.15 * 0.5f64.cos(), 0.5 + 0.15 * 0.5f64.sin());
        assert!(sweep.intersects(&Sweep::stationary(&ball, &[target.x, target.y])));
    }
}
