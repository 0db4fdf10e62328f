//! Local planner: trajectories between two states, their validation against
//! obstacles, and the range-limited steering function.

use serde::{Deserialize, Serialize};

use super::dubins::DubinsPath;
use super::{wrap_angle, RobotModel, State, COLLISION_RESOLUTION};
use crate::geometry::{body_obstacle_clear, Capsule, SphereObstacle, Vec3};

/// Bisection depth when certifying a motion interval; past it the motion
/// is rejected as too tight to call.
const CERTIFY_DEPTH: u32 = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "path", rename_all = "lowercase")]
pub enum TrajectoryKind {
    Linear,
    Dubins(DubinsPath),
}

/// A curve `sigma(tau)`, `tau` in `[0, 1]`, from one state to another.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    pub from: State,
    pub to: State,
    /// Linear moves use the weighted configuration distance; Dubins moves
    /// use the arc length of the path.
    pub length: f64,
}

impl Trajectory {
    pub fn is_stationary(&self) -> bool {
        self.from == self.to
    }
}

impl RobotModel {
    /// Unvalidated trajectory from `from` to `to`.
    pub fn trajectory(&self, from: &[f64], to: &[f64]) -> Trajectory {
        let (from, to) = (State(from.to_vec()), State(to.to_vec()));
        if self.is_dubins() && from != to {
            let path = DubinsPath::shortest(
                [from[0], from[1], from[2]],
                [to[0], to[1], to[2]],
                self.rho(),
            );
            let length = path.length();
            return Trajectory {
                kind: TrajectoryKind::Dubins(path),
                from,
                to,
                length,
            };
        }
        let length = self.dist(&from, &to);
        Trajectory {
            kind: TrajectoryKind::Linear,
            from,
            to,
            length,
        }
    }

    /// State at `tau` along `traj`, endpoints returned exactly. Linear moves
    /// interpolate positions directly and angles along the shorter arc.
    pub fn evaluate(&self, traj: &Trajectory, tau: f64) -> State {
        if tau <= 0.0 {
            return traj.from.clone();
        }
        if tau >= 1.0 || traj.is_stationary() {
            return traj.to.clone();
        }
        match &traj.kind {
            TrajectoryKind::Dubins(p) => State(p.sample(tau * p.length()).to_vec()),
            TrajectoryKind::Linear => {
                let mask = self.scenario.angular_mask();
                let (p, q) = (&traj.from, &traj.to);
                (0..p.len())
                    .map(|k| {
                        if mask[k] {
                            wrap_angle(p[k] + tau * wrap_angle(q[k] - p[k]))
                        } else {
                            p[k] + tau * (q[k] - p[k])
                        }
                    })
                    .collect::<Vec<_>>()
                    .into()
            }
        }
    }

    /// Number of intervals needed so that no body point moves more than
    /// `delta` between consecutive samples.
    pub fn sample_count(&self, traj: &Trajectory, delta: f64) -> usize {
        let bound = self.displacement_bound(traj);
        ((bound / delta).ceil() as usize).max(1)
    }

    /// Sample states at `tau = k/n` for `k = 0..=n`.
    pub fn sample_states(&self, traj: &Trajectory, delta: f64) -> Vec<State> {
        if traj.is_stationary() {
            return vec![traj.from.clone()];
        }
        let n = self.sample_count(traj, delta);
        (0..=n)
            .map(|k| self.evaluate(traj, k as f64 / n as f64))
            .collect()
    }

    /// Bulge of a circular arc of length at most `delta` over its chord.
    fn arc_sagitta(&self, delta: f64) -> f64 {
        delta * delta / (8.0 * self.rho())
    }

    /// Capsules covering the region swept by the body along `traj`.
    ///
    /// Point robots moving in straight lines sweep one exact capsule. Dubins
    /// discs are covered by chord capsules widened by the arc sagitta. Other
    /// bodies are sampled at resolution `delta`.
    pub fn swept_capsules(&self, traj: &Trajectory, delta: f64) -> Vec<Capsule> {
        if traj.is_stationary() {
            return self.body(&traj.from);
        }
        match traj.kind {
            TrajectoryKind::Linear if self.is_point() => {
                let (a, b) = (self.body(&traj.from)[0].seg.a, self.body(&traj.to)[0].seg.a);
                vec![Capsule::new(a, b, self.radius)]
            }
            TrajectoryKind::Dubins(_) => {
                let r = self.radius + self.arc_sagitta(delta);
                let pts: Vec<Vec3> = self
                    .sample_states(traj, delta)
                    .iter()
                    .map(|s| Vec3::xy(s[0], s[1]))
                    .collect();
                pts.windows(2)
                    .map(|w| Capsule::new(w[0], w[1], r))
                    .collect()
            }
            TrajectoryKind::Linear => {
                // every intermediate body point lies within half a step of
                // the matching point of a sampled body
                let n = self.sample_count(traj, delta);
                let margin = 0.5 * self.displacement_bound(traj) / n as f64;
                self.sample_states(traj, delta)
                    .iter()
                    .flat_map(|s| self.body(s))
                    .map(|c| c.inflated(margin))
                    .collect()
            }
        }
    }

    /// Continuous check of a linear motion: an interval is safe when the
    /// clearances at its ends add up to more than the body can move inside
    /// it. Intervals that fail the test are bisected.
    fn certify_linear(&self, traj: &Trajectory, obstacles: &[SphereObstacle], delta: f64) -> bool {
        let n = self.sample_count(traj, delta);
        let step = self.displacement_bound(traj) / n as f64;
        let clearance = |tau: f64| self.clearance(&self.evaluate(traj, tau), obstacles);
        let mut prev = clearance(0.0);
        if prev < 0.0 {
            return false;
        }
        for k in 1..=n {
            let (ta, tb) = ((k - 1) as f64 / n as f64, k as f64 / n as f64);
            let cur = clearance(tb);
            if cur < 0.0
                || !self.certify_interval(&clearance, (ta, prev), (tb, cur), step, CERTIFY_DEPTH)
            {
                return false;
            }
            prev = cur;
        }
        true
    }

    fn certify_interval(
        &self,
        clearance: &dyn Fn(f64) -> f64,
        (ta, ca): (f64, f64),
        (tb, cb): (f64, f64),
        reach: f64,
        depth: u32,
    ) -> bool {
        if ca + cb > reach {
            return true;
        }
        if depth == 0 {
            return false;
        }
        let tm = 0.5 * (ta + tb);
        let cm = clearance(tm);
        cm >= 0.0
            && self.certify_interval(clearance, (ta, ca), (tm, cm), 0.5 * reach, depth - 1)
            && self.certify_interval(clearance, (tm, cm), (tb, cb), 0.5 * reach, depth - 1)
    }

    /// Whether the whole trajectory stays obstacle-free, inside the
    /// workspace and free of self-collision.
    pub fn motion_valid(
        &self,
        traj: &Trajectory,
        obstacles: &[SphereObstacle],
        delta: f64,
    ) -> bool {
        let dim = self.workspace_dim();
        if traj.is_stationary() {
            return self.is_valid(&traj.from, obstacles);
        }
        match traj.kind {
            TrajectoryKind::Linear if !self.is_point() => {
                self.certify_linear(traj, obstacles, delta)
            }
            // swept capsules cover the motion; the workspace is convex so the
            // same cover also settles containment
            _ => body_obstacle_clear(&self.swept_capsules(traj, delta), obstacles, dim),
        }
    }

    /// Local planner. Returns the trajectory when every state along it is
    /// valid; `connect(q, q)` always succeeds with a zero-length move.
    pub fn connect(
        &self,
        from: &[f64],
        to: &[f64],
        obstacles: &[SphereObstacle],
    ) -> Option<Trajectory> {
        let traj = self.trajectory(from, to);
        if traj.is_stationary() || self.motion_valid(&traj, obstacles, COLLISION_RESOLUTION) {
            Some(traj)
        } else {
            None
        }
    }

    pub fn can_connect(&self, from: &[f64], to: &[f64], obstacles: &[SphereObstacle]) -> bool {
        self.connect(from, to, obstacles).is_some()
    }

    /// Largest `tau` such that every prefix state stays within `eps` of the
    /// start.
    fn steer_horizon(&self, traj: &Trajectory, eps: f64) -> f64 {
        let d = self.dist(&traj.from, &traj.to);
        match traj.kind {
            TrajectoryKind::Linear => {
                if d <= eps {
                    1.0
                } else {
                    eps / d
                }
            }
            TrajectoryKind::Dubins(_) => {
                let within = |tau: f64| self.dist(&traj.from, &self.evaluate(traj, tau)) <= eps;
                let n = self.sample_count(traj, COLLISION_RESOLUTION);
                let mut good = 0.0;
                for k in 1..=n {
                    let tau = k as f64 / n as f64;
                    if !within(tau) {
                        let mut bad = tau;
                        for _ in 0..40 {
                            let mid = 0.5 * (good + bad);
                            if within(mid) {
                                good = mid;
                            } else {
                                bad = mid;
                            }
                        }
                        return good;
                    }
                    good = tau;
                }
                1.0
            }
        }
    }

    /// Move from `from` towards `target`, at most `eps` away, stopping at the
    /// last valid state of a `delta`-resolution walk. Returns `None` when
    /// even the first step is blocked.
    pub fn steer(
        &self,
        from: &[f64],
        target: &[f64],
        eps: f64,
        obstacles: &[SphereObstacle],
    ) -> Option<State> {
        if self.dist(from, target) <= eps && self.can_connect(from, target, obstacles) {
            return Some(State(target.to_vec()));
        }
        let traj = self.trajectory(from, target);
        let horizon = self.steer_horizon(&traj, eps);
        if horizon <= 0.0 {
            return None;
        }
        let reach = self.displacement_bound(&traj) * horizon;
        let n = ((reach / COLLISION_RESOLUTION).ceil() as usize).max(1);
        let tau_at = |k: usize| horizon * k as f64 / n as f64;
        let mut last = 0;
        for k in 1..=n {
            if !self.is_valid(&self.evaluate(&traj, tau_at(k)), obstacles) {
                break;
            }
            last = k;
        }
        // the grid walk can miss thin gaps between samples; confirm with a
        // real connect and retreat until it holds
        while last > 0 {
            let cand = self.evaluate(&traj, tau_at(last));
            if self.can_connect(from, &cand, obstacles) {
                return Some(cand);
            }
            last -= 1;
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use std::f64::consts::PI;

    fn wall_at(x: f64) -> Vec<SphereObstacle> {
        (0..=40)
            .map(|k| SphereObstacle {
                center: Vec3::xy(x + 0.05, k as f64 * 0.025),
                radius: 0.05,
            })
            .collect()
    }

    #[test]
    fn connect_same_state_is_zero_length() {
        let m = RobotModel::dubins2d(0.02, 0.1);
        let q = [0.5, 0.5, 1.0];
        let t = m.connect(&q, &q, &[]).unwrap();
        assert_eq!(t.length, 0.0);
        assert_eq!(m.evaluate(&t, 0.5).0, q.to_vec());
    }

    #[test]
    fn dubins_aligned_connect() {
        let m = RobotModel::dubins2d(0.01, 0.1);
        let t = m.connect(&[0.2, 0.5, 0.0], &[0.7, 0.5, 0.0], &[]).unwrap();
        assert!((t.length - 0.5).abs() < 1e-12);
    }

    #[test]
    fn linear_endpoints_exact() {
        let m = RobotModel::line2d(0.1, 0.01);
        let (a, b) = ([0.3, 0.3, 3.0], [0.6, 0.4, -3.0]);
        let t = m.trajectory(&a, &b);
        assert_eq!(m.evaluate(&t, 0.0).0, a.to_vec());
        assert_eq!(m.evaluate(&t, 1.0).0, b.to_vec());
        // shorter arc crosses pi
        let mid = m.evaluate(&t, 0.5);
        assert!(mid[2].abs() > 3.0);
    }

    #[test]
    fn steer_returns_target_when_close() {
        let m = RobotModel::point2d(0.02);
        let q = m.steer(&[0.5, 0.5], &[0.6, 0.5], 0.2, &[]).unwrap();
        assert_eq!(q.0, vec![0.6, 0.5]);
    }

    #[test]
    fn steer_truncates_to_eps() {
        let m = RobotModel::point2d(0.02);
        let q = m.steer(&[0.2, 0.5], &[0.6, 0.5], 0.2, &[]).unwrap();
        assert!((q[0] - 0.4).abs() < 1e-12 && (q[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn steer_stops_before_wall() {
        let m = RobotModel::point2d(0.02);
        // wall face at x = 0.5; start at 0.2
        let obs = wall_at(0.5);
        let q = m.steer(&[0.2, 0.5], &[0.9, 0.5], 1.0, &obs).unwrap();
        assert!(m.dist(&[0.2, 0.5], &q) <= 0.3);
        assert!(m.is_valid(&q, &obs));
        // the next grid point is blocked
        let traj = m.trajectory(&[0.2, 0.5], &[0.9, 0.5]);
        let n = m.sample_count(&traj, COLLISION_RESOLUTION);
        let step = 0.7 / n as f64;
        assert!(!m.is_valid(&[q[0] + step, 0.5], &obs));
    }

    #[test]
    fn steer_boxed_in_is_none() {
        let m = RobotModel::point2d(0.02);
        // leave less than one resolution step of room in every direction
        let obs: Vec<SphereObstacle> = (0..16)
            .map(|k| {
                let a = k as f64 * PI / 8.0;
                SphereObstacle {
                    center: Vec3::xy(0.5 + 0.07 * a.cos(), 0.5 + 0.07 * a.sin()),
                    radius: 0.0455,
                }
            })
            .collect();
        assert!(m.is_valid(&[0.5, 0.5], &obs));
        for target in [[0.9, 0.5], [0.5, 0.9], [0.1, 0.1]] {
            assert!(m.steer(&[0.5, 0.5], &target, 0.2, &obs).is_none());
        }
    }

    #[test]
    fn dubins_steer_within_eps() {
        let m = RobotModel::dubins2d(0.01, 0.05);
        let from = [0.3, 0.3, 0.0];
        let q = m.steer(&from, &[0.8, 0.7, 2.0], 0.1, &[]).unwrap();
        assert!(m.dist(&from, &q) <= 0.1 + 1e-9);
        assert!(m.can_connect(&from, &q, &[]));
    }
}
