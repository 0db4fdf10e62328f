//! Robot models for the eight benchmark scenarios.
//!
//! A [`RobotModel`] owns everything that depends on the body: the
//! configuration layout, forward kinematics into capsules, uniform sampling,
//! the weighted distance, and the local planner (see [`trajectory`]).

pub mod dubins;
pub mod trajectory;

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Deref, DerefMut};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::geometry::{
    body_obstacle_clear, capsule_clearance, capsules_intersect, segment_segment_distance, Capsule,
    SphereObstacle, Vec3, WorkspaceDim,
};

pub use trajectory::{Trajectory, TrajectoryKind};

/// Default trajectory sampling resolution in workspace units of body
/// displacement.
pub const COLLISION_RESOLUTION: f64 = 0.01;

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// A configuration vector. Positions are in workspace units, angles in
/// radians wrapped to `(-pi, pi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(pub Vec<f64>);

impl State {
    pub fn new(values: Vec<f64>) -> Self {
        State(values)
    }
}

impl Deref for State {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for State {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for State {
    fn from(v: Vec<f64>) -> Self {
        State(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Point2d,
    Point3d,
    Line2d,
    Capsule3d,
    Arm22,
    Arm33,
    Dubins2d,
    Snake2d,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Point2d,
        Scenario::Point3d,
        Scenario::Line2d,
        Scenario::Capsule3d,
        Scenario::Arm22,
        Scenario::Arm33,
        Scenario::Dubins2d,
        Scenario::Snake2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Point2d => "point2d",
            Scenario::Point3d => "point3d",
            Scenario::Line2d => "line2d",
            Scenario::Capsule3d => "capsule3d",
            Scenario::Arm22 => "arm22",
            Scenario::Arm33 => "arm33",
            Scenario::Dubins2d => "dubins2d",
            Scenario::Snake2d => "snake2d",
        }
    }

    pub fn dof(self) -> usize {
        match self {
            Scenario::Point2d | Scenario::Arm22 => 2,
            Scenario::Point3d | Scenario::Line2d | Scenario::Dubins2d => 3,
            Scenario::Capsule3d | Scenario::Arm33 | Scenario::Snake2d => 6,
        }
    }

    /// Which state components are angles.
    pub fn angular_mask(self) -> &'static [bool] {
        match self {
            Scenario::Point2d => &[false, false],
            Scenario::Point3d => &[false, false, false],
            Scenario::Line2d | Scenario::Dubins2d => &[false, false, true],
            Scenario::Capsule3d => &[false, false, false, true, true, true],
            Scenario::Arm22 => &[true, true],
            Scenario::Arm33 => &[true; 6],
            Scenario::Snake2d => &[false, false, true, true, true, true],
        }
    }

    pub fn workspace_dim(self) -> WorkspaceDim {
        match self {
            Scenario::Point3d | Scenario::Capsule3d | Scenario::Arm33 => WorkspaceDim::Three,
            _ => WorkspaceDim::Two,
        }
    }

    /// Number of link lengths the body carries.
    pub fn link_count(self) -> usize {
        match self {
            Scenario::Point2d | Scenario::Point3d | Scenario::Dubins2d => 0,
            Scenario::Line2d | Scenario::Capsule3d => 1,
            Scenario::Arm22 => 2,
            Scenario::Arm33 => 3,
            Scenario::Snake2d => 4,
        }
    }

    pub fn is_articulated(self) -> bool {
        matches!(self, Scenario::Arm22 | Scenario::Arm33 | Scenario::Snake2d)
    }

    pub fn has_root(self) -> bool {
        matches!(self, Scenario::Arm22 | Scenario::Arm33)
    }

    /// Typical characteristic length of the scenario's bodies; thresholds
    /// are scaled relative to it.
    fn nominal_length(self) -> f64 {
        match self {
            Scenario::Point2d | Scenario::Point3d => 1.0,
            Scenario::Line2d | Scenario::Capsule3d => 0.1,
            Scenario::Arm22 => 0.2,
            Scenario::Arm33 => 0.25,
            Scenario::Dubins2d => 0.075,
            Scenario::Snake2d => 0.18,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| ModelError::UnknownScenario(s.to_string()))
    }
}

/// One robot: scenario kind plus body and kinematic parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub scenario: Scenario,
    /// Body thickness (ball radius for point robots).
    pub radius: f64,
    /// Segment or link lengths, base to tip.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lengths: Vec<f64>,
    /// Fixed base of arm scenarios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<Vec3>,
    /// Minimum turning radius of Dubins robots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turning_radius: Option<f64>,
}

impl RobotModel {
    fn bare(scenario: Scenario, radius: f64) -> Self {
        RobotModel {
            scenario,
            radius,
            lengths: Vec::new(),
            root: None,
            turning_radius: None,
        }
    }

    pub fn point2d(radius: f64) -> Self {
        Self::bare(Scenario::Point2d, radius)
    }

    pub fn point3d(radius: f64) -> Self {
        Self::bare(Scenario::Point3d, radius)
    }

    pub fn line2d(length: f64, radius: f64) -> Self {
        RobotModel {
            lengths: vec![length],
            ..Self::bare(Scenario::Line2d, radius)
        }
    }

    pub fn capsule3d(length: f64, radius: f64) -> Self {
        RobotModel {
            lengths: vec![length],
            ..Self::bare(Scenario::Capsule3d, radius)
        }
    }

    pub fn arm22(root: Vec3, lengths: [f64; 2], radius: f64) -> Self {
        RobotModel {
            lengths: lengths.to_vec(),
            root: Some(root),
            ..Self::bare(Scenario::Arm22, radius)
        }
    }

    pub fn arm33(root: Vec3, lengths: [f64; 3], radius: f64) -> Self {
        RobotModel {
            lengths: lengths.to_vec(),
            root: Some(root),
            ..Self::bare(Scenario::Arm33, radius)
        }
    }

    pub fn dubins2d(radius: f64, turning_radius: f64) -> Self {
        RobotModel {
            turning_radius: Some(turning_radius),
            ..Self::bare(Scenario::Dubins2d, radius)
        }
    }

    pub fn snake2d(lengths: [f64; 4], radius: f64) -> Self {
        RobotModel {
            lengths: lengths.to_vec(),
            ..Self::bare(Scenario::Snake2d, radius)
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let sc = self.scenario;
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.radius) {
            return Err(ModelError::InvalidParameter(format!(
                "{sc}: radius must be > 0"
            )));
        }
        if self.lengths.len() != sc.link_count() || !self.lengths.iter().all(|&l| positive(l)) {
            return Err(ModelError::InvalidParameter(format!(
                "{sc}: expected {} positive lengths, got {:?}",
                sc.link_count(),
                self.lengths
            )));
        }
        if sc.has_root() != self.root.is_some() {
            return Err(ModelError::InvalidParameter(format!(
                "{sc}: root must be given iff the robot is an arm"
            )));
        }
        if let Some(root) = self.root {
            if !root.is_finite() {
                return Err(ModelError::InvalidParameter(format!(
                    "{sc}: root must be finite"
                )));
            }
        }
        match (sc, self.turning_radius) {
            (Scenario::Dubins2d, Some(rho)) if positive(rho) => Ok(()),
            (Scenario::Dubins2d, _) => Err(ModelError::InvalidParameter(
                "dubins2d: turning_radius must be > 0".into(),
            )),
            (_, None) => Ok(()),
            (_, Some(_)) => Err(ModelError::InvalidParameter(format!(
                "{sc}: turning_radius only applies to dubins2d"
            ))),
        }
    }

    pub fn dof(&self) -> usize {
        self.scenario.dof()
    }

    pub fn workspace_dim(&self) -> WorkspaceDim {
        self.scenario.workspace_dim()
    }

    pub fn is_dubins(&self) -> bool {
        self.scenario == Scenario::Dubins2d
    }

    /// Point bodies moving in straight lines sweep exact capsules.
    pub fn is_point(&self) -> bool {
        matches!(self.scenario, Scenario::Point2d | Scenario::Point3d)
    }

    /// Local planner gives the same answer in both directions.
    pub fn is_symmetric(&self) -> bool {
        !self.is_dubins()
    }

    fn rho(&self) -> f64 {
        self.turning_radius.unwrap_or(1.0)
    }

    /// Length used to make angles commensurable with positions: total body
    /// length, or the turning radius for Dubins robots.
    pub fn char_length(&self) -> f64 {
        match self.scenario {
            Scenario::Dubins2d => self.rho(),
            Scenario::Point2d | Scenario::Point3d => 2.0 * self.radius,
            _ => self.lengths.iter().sum(),
        }
    }

    /// Multiplier applied to the base vertex-spacing threshold.
    pub fn threshold_scale(&self) -> f64 {
        match self.scenario {
            Scenario::Point2d | Scenario::Point3d => 1.0,
            sc => self.char_length() / sc.nominal_length(),
        }
    }

    /// Forward kinematics: the body as a list of capsules.
    pub fn body(&self, q: &[f64]) -> Vec<Capsule> {
        assert_eq!(
            q.len(),
            self.dof(),
            "{}: state has wrong dimension",
            self.scenario
        );
        let r = self.radius;
        match self.scenario {
            Scenario::Point2d | Scenario::Dubins2d => vec![Capsule::ball(Vec3::xy(q[0], q[1]), r)],
            Scenario::Point3d => vec![Capsule::ball(Vec3::new(q[0], q[1], q[2]), r)],
            Scenario::Line2d => {
                let c = Vec3::xy(q[0], q[1]);
                let h = Vec3::xy(q[2].cos(), q[2].sin()) * (0.5 * self.lengths[0]);
                vec![Capsule::new(c - h, c + h, r)]
            }
            Scenario::Capsule3d => {
                let c = Vec3::new(q[0], q[1], q[2]);
                let (yaw, pitch) = (q[3], q[4]);
                let axis = Vec3::new(
                    pitch.cos() * yaw.cos(),
                    pitch.cos() * yaw.sin(),
                    pitch.sin(),
                );
                let h = axis * (0.5 * self.lengths[0]);
                vec![Capsule::new(c - h, c + h, r)]
            }
            Scenario::Arm22 => {
                let root = self.root.expect("arm root");
                let mut heading = 0.0;
                let mut base = root;
                let mut out = Vec::with_capacity(2);
                for (k, &l) in self.lengths.iter().enumerate() {
                    heading += q[k];
                    let tip = base + Vec3::xy(heading.cos(), heading.sin()) * l;
                    out.push(Capsule::new(base, tip, r));
                    base = tip;
                }
                out
            }
            Scenario::Arm33 => {
                let mut frame = Rot3::IDENTITY;
                let mut base = self.root.expect("arm root");
                let mut out = Vec::with_capacity(3);
                for (k, &l) in self.lengths.iter().enumerate() {
                    frame = frame
                        .mul(&Rot3::yaw(q[2 * k]))
                        .mul(&Rot3::pitch(q[2 * k + 1]));
                    let tip = base + frame.x_axis() * l;
                    out.push(Capsule::new(base, tip, r));
                    base = tip;
                }
                out
            }
            Scenario::Snake2d => {
                let mut heading = q[2];
                let mut base = Vec3::xy(q[0], q[1]);
                let mut out = Vec::with_capacity(4);
                for (k, &l) in self.lengths.iter().enumerate() {
                    if k > 0 {
                        heading += q[2 + k];
                    }
                    let tip = base + Vec3::xy(heading.cos(), heading.sin()) * l;
                    out.push(Capsule::new(base, tip, r));
                    base = tip;
                }
                out
            }
        }
    }

    /// Non-adjacent links overlap. Adjacent links share a joint and are
    /// exempt.
    pub fn self_collides(&self, body: &[Capsule]) -> bool {
        if !self.scenario.is_articulated() {
            return false;
        }
        for a in 0..body.len() {
            for b in a + 2..body.len() {
                if capsules_intersect(&body[a], &body[b]) {
                    return true;
                }
            }
        }
        false
    }

    /// Obstacle-free, inside the workspace, and not self-colliding.
    pub fn is_valid(&self, q: &[f64], obstacles: &[SphereObstacle]) -> bool {
        let body = self.body(q);
        body_obstacle_clear(&body, obstacles, self.workspace_dim()) && !self.self_collides(&body)
    }

    /// How far every body point may move before the state can become
    /// invalid. Links approach each other from both sides, so self-collision
    /// margins count half.
    pub fn clearance(&self, q: &[f64], obstacles: &[SphereObstacle]) -> f64 {
        let body = self.body(q);
        let dim = self.workspace_dim();
        let mut m = body
            .iter()
            .map(|c| capsule_clearance(c, obstacles, dim))
            .fold(f64::INFINITY, f64::min);
        if self.scenario.is_articulated() {
            for a in 0..body.len() {
                for b in a + 2..body.len() {
                    let gap = segment_segment_distance(&body[a].seg, &body[b].seg)
                        - body[a].radius
                        - body[b].radius;
                    m = m.min(0.5 * gap);
                }
            }
        }
        m
    }

    /// Uniform over the unit box for positions and `(-pi, pi]` for angles.
    /// The result is not checked against obstacles.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> State {
        self.scenario
            .angular_mask()
            .iter()
            .map(|&ang| {
                let u: f64 = rng.gen();
                if ang {
                    PI - TAU * u
                } else {
                    u
                }
            })
            .collect::<Vec<_>>()
            .into()
    }

    /// Weighted Euclidean distance with wrapped angular differences scaled
    /// by [`char_length`](Self::char_length).
    pub fn dist(&self, p: &[f64], q: &[f64]) -> f64 {
        debug_assert_eq!(p.len(), q.len());
        let c = self.char_length();
        let mask = self.scenario.angular_mask();
        let mut acc = 0.0;
        for k in 0..p.len() {
            let d = if mask[k] {
                c * wrap_angle(q[k] - p[k])
            } else {
                q[k] - p[k]
            };
            acc += d * d;
        }
        acc.sqrt()
    }

    /// Distance of the lever arm driven by each component: moving component
    /// `k` by `delta` moves no body point further than `lever[k] * |delta|`.
    /// Positional components have lever one and are combined in norm.
    fn angular_levers(&self) -> Vec<f64> {
        let l = &self.lengths;
        match self.scenario {
            Scenario::Line2d => vec![0.0, 0.0, 0.5 * l[0]],
            Scenario::Capsule3d => vec![0.0, 0.0, 0.0, 0.5 * l[0], 0.5 * l[0], 0.0],
            Scenario::Arm22 => vec![l[0] + l[1], l[1]],
            Scenario::Arm33 => {
                let tail = [l[0] + l[1] + l[2], l[1] + l[2], l[2]];
                vec![tail[0], tail[0], tail[1], tail[1], tail[2], tail[2]]
            }
            Scenario::Snake2d => {
                let total: f64 = l.iter().sum();
                vec![0.0, 0.0, total, l[1] + l[2] + l[3], l[2] + l[3], l[3]]
            }
            _ => vec![0.0; self.dof()],
        }
    }

    /// Upper bound on how far any body point moves along a trajectory.
    pub fn displacement_bound(&self, traj: &Trajectory) -> f64 {
        match &traj.kind {
            TrajectoryKind::Dubins(p) => p.length(),
            TrajectoryKind::Linear => {
                let mask = self.scenario.angular_mask();
                let levers = self.angular_levers();
                let mut pos2 = 0.0;
                let mut ang = 0.0;
                for k in 0..traj.from.len() {
                    if mask[k] {
                        ang += levers[k] * wrap_angle(traj.to[k] - traj.from[k]).abs();
                    } else {
                        let d = traj.to[k] - traj.from[k];
                        pos2 += d * d;
                    }
                }
                pos2.sqrt() + ang
            }
        }
    }

    /// Same configuration traversed backwards: Dubins robots flip their
    /// heading, every other model is its own reverse.
    pub fn reversed(&self, q: &State) -> State {
        if self.is_dubins() {
            State(vec![q[0], q[1], wrap_angle(q[2] + PI)])
        } else {
            q.clone()
        }
    }

    /// Componentwise equality up to `tol`, angles compared modulo 2pi.
    pub fn states_close(&self, p: &[f64], q: &[f64], tol: f64) -> bool {
        p.len() == q.len()
            && self
                .scenario
                .angular_mask()
                .iter()
                .enumerate()
                .all(|(k, &ang)| {
                    let d = if ang {
                        wrap_angle(q[k] - p[k])
                    } else {
                        q[k] - p[k]
                    };
                    d.abs() <= tol
                })
    }

    /// Arm roots are fixed and drawn as boxes; the second component is the
    /// state dimension check used by instance loading.
    pub fn check_state(&self, q: &[f64]) -> Result<(), ModelError> {
        if q.len() != self.dof() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dof(),
                got: q.len(),
            });
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidParameter(
                "state has non-finite components".into(),
            ));
        }
        Ok(())
    }
}

/// Row-major 3x3 rotation used by the spatial arm.
#[derive(Clone, Copy, Debug)]
struct Rot3([[f64; 3]; 3]);

impl Rot3 {
    const IDENTITY: Rot3 = Rot3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    fn yaw(a: f64) -> Rot3 {
        let (s, c) = a.sin_cos();
        Rot3([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Rotation about the local y axis that lifts +x towards +z.
    fn pitch(a: f64) -> Rot3 {
        let (s, c) = a.sin_cos();
        Rot3([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])
    }

    fn mul(&self, o: &Rot3) -> Rot3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Rot3(m)
    }

    fn x_axis(&self) -> Vec3 {
        Vec3::new(self.0[0][0], self.0[1][0], self.0[2][0])
    }
}
