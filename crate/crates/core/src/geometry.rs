//! Exact closed-form geometric kernels.
//!
//! Everything lives in the unit box `[0, 1]^3`. Planar scenarios use the
//! `z = 0` slice, so a single [`Vec3`] type serves both dimensions.
//!
//! Contact is strict throughout: two bodies whose distance equals the sum
//! of their radii are *not* colliding.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    /// Planar point (z = 0).
    pub const fn xy(x: f64, y: f64) -> Self {
        Vec3 { x, y, z: 0.0 }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn dist(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Vec3, t: f64) -> Vec3 {
        self + (o - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Closed segment from `a` to `b`. `a == b` is a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: Vec3,
    pub b: Vec3,
}

impl Segment {
    pub const fn new(a: Vec3, b: Vec3) -> Self {
        Segment { a, b }
    }

    pub const fn point(p: Vec3) -> Self {
        Segment { a: p, b: p }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.a.lerp(self.b, t)
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }
}

/// Segment swept by a ball: the exact body of a point robot moving in a
/// straight line, and of every link primitive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Capsule {
    pub seg: Segment,
    pub radius: f64,
}

impl Capsule {
    pub const fn new(a: Vec3, b: Vec3, radius: f64) -> Self {
        Capsule {
            seg: Segment { a, b },
            radius,
        }
    }

    pub const fn ball(center: Vec3, radius: f64) -> Self {
        Capsule {
            seg: Segment::point(center),
            radius,
        }
    }

    pub fn aabb(&self) -> Aabb {
        let r = Vec3::new(self.radius, self.radius, self.radius);
        Aabb {
            min: self.seg.a.min(self.seg.b) - r,
            max: self.seg.a.max(self.seg.b) + r,
        }
    }

    pub fn inflated(&self, margin: f64) -> Capsule {
        Capsule {
            seg: self.seg,
            radius: self.radius + margin,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereObstacle {
    pub center: Vec3,
    pub radius: f64,
}

/// Axis-aligned box used as a broad-phase filter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3 {
            x: f64::INFINITY,
            y: f64::INFINITY,
            z: f64::INFINITY,
        },
        max: Vec3 {
            x: f64::NEG_INFINITY,
            y: f64::NEG_INFINITY,
            z: f64::NEG_INFINITY,
        },
    };

    pub fn union(self, o: Aabb) -> Aabb {
        Aabb {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    /// Closed overlap test; callers follow up with an exact strict test.
    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x
            && o.min.x <= self.max.x
            && self.min.y <= o.max.y
            && o.min.y <= self.max.y
            && self.min.z <= o.max.z
            && o.min.z <= self.max.z
    }
}

/// Whether a body lives in the plane or in space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WorkspaceDim {
    Two,
    Three,
}

impl WorkspaceDim {
    pub fn count(self) -> usize {
        match self {
            WorkspaceDim::Two => 2,
            WorkspaceDim::Three => 3,
        }
    }
}

pub fn point_segment_distance(p: Vec3, s: &Segment) -> f64 {
    let d = s.b - s.a;
    let len2 = d.norm2();
    if len2 == 0.0 {
        return p.dist(s.a);
    }
    let t = ((p - s.a).dot(d) / len2).clamp(0.0, 1.0);
    p.dist(s.at(t))
}

/// Minimum distance between two closed segments in 2D or 3D.
///
/// Minimizes `|s1(s) - s2(t)|` over the unit square by first solving the
/// unconstrained problem and then clamping one parameter at a time; the
/// objective is a convex quadratic, so clamping followed by re-projection of
/// the other parameter reaches the constrained minimum.
pub fn segment_segment_distance(s1: &Segment, s2: &Segment) -> f64 {
    let d1 = s1.b - s1.a;
    let d2 = s2.b - s2.a;
    let r = s1.a - s2.a;
    let a = d1.norm2();
    let e = d2.norm2();
    let f = d2.dot(r);

    if a == 0.0 && e == 0.0 {
        return r.norm();
    }
    let mut near_parallel = false;
    let (s, t);
    if a == 0.0 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(r);
        if e == 0.0 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(d2);
            let denom = a * e - b * b;
            near_parallel = denom <= 1e-12 * a * e;
            // Parallel: any s works, pick the start and let the clamping
            // below settle t.
            let s0 = if near_parallel {
                0.0
            } else {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            };
            let t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            } else {
                t = t0;
                s = s0;
            }
        }
    }
    let d = s1.at(s).dist(s2.at(t));
    if near_parallel {
        // the minimum of a parallel pair is always attained at an endpoint
        d.min(point_segment_distance(s1.a, s2))
            .min(point_segment_distance(s1.b, s2))
            .min(point_segment_distance(s2.a, s1))
            .min(point_segment_distance(s2.b, s1))
    } else {
        d
    }
}

/// Strict overlap: touching capsules do not intersect.
pub fn capsules_intersect(c1: &Capsule, c2: &Capsule) -> bool {
    segment_segment_distance(&c1.seg, &c2.seg) < c1.radius + c2.radius
}

/// Capsule lies inside the unit box once inflated by its radius.
pub fn capsule_in_workspace(c: &Capsule, dim: WorkspaceDim) -> bool {
    let r = c.radius;
    let inside = |p: Vec3| {
        let coords = p.to_array();
        coords[..dim.count()]
            .iter()
            .all(|&v| v - r >= 0.0 && v + r <= 1.0)
    };
    inside(c.seg.a) && inside(c.seg.b)
}

pub fn capsule_obstacle_clear(c: &Capsule, obstacles: &[SphereObstacle]) -> bool {
    obstacles
        .iter()
        .all(|o| point_segment_distance(o.center, &c.seg) >= c.radius + o.radius)
}

/// Obstacle-free test for a body made of capsules: every primitive must be
/// disjoint from every obstacle sphere and fully contained in the workspace.
pub fn body_obstacle_clear(
    body: &[Capsule],
    obstacles: &[SphereObstacle],
    dim: WorkspaceDim,
) -> bool {
    body.iter()
        .all(|c| capsule_in_workspace(c, dim) && capsule_obstacle_clear(c, obstacles))
}

/// Signed margin before a capsule touches an obstacle or leaves the
/// workspace. Non-negative exactly when the capsule is clear.
pub fn capsule_clearance(c: &Capsule, obstacles: &[SphereObstacle], dim: WorkspaceDim) -> f64 {
    let r = c.radius;
    let mut m = f64::INFINITY;
    for p in [c.seg.a, c.seg.b] {
        for &v in &p.to_array()[..dim.count()] {
            m = m.min(v - r).min(1.0 - r - v);
        }
    }
    for o in obstacles {
        m = m.min(point_segment_distance(o.center, &c.seg) - r - o.radius);
    }
    m
}
