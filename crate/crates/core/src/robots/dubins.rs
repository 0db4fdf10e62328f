//! Shortest bounded-curvature paths between oriented planar poses.
//!
//! Arc and straight lengths are kept in units of the turning radius, the
//! usual normalization where the start pose sits at the origin and the
//! curvature is one.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DubinsWord {
    LSL,
    LSR,
    RSL,
    RSR,
    RLR,
    LRL,
}

impl DubinsWord {
    pub const ALL: [DubinsWord; 6] = [
        DubinsWord::LSL,
        DubinsWord::LSR,
        DubinsWord::RSL,
        DubinsWord::RSR,
        DubinsWord::RLR,
        DubinsWord::LRL,
    ];

    fn segments(self) -> [Turn; 3] {
        use Turn::*;
        match self {
            DubinsWord::LSL => [Left, Straight, Left],
            DubinsWord::LSR => [Left, Straight, Right],
            DubinsWord::RSL => [Right, Straight, Left],
            DubinsWord::RSR => [Right, Straight, Right],
            DubinsWord::RLR => [Right, Left, Right],
            DubinsWord::LRL => [Left, Right, Left],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Turn {
    Left,
    Straight,
    Right,
}

/// Pose as `[x, y, heading]`.
pub type Pose = [f64; 3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DubinsPath {
    pub start: Pose,
    pub rho: f64,
    pub word: DubinsWord,
    /// Normalized segment lengths.
    pub params: [f64; 3],
}

fn mod2pi(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid may round up to exactly TAU for tiny negative inputs
    if r >= TAU - 1e-12 {
        0.0
    } else {
        r
    }
}

/// Normalized inputs shared by every word: pose angles relative to the
/// chord direction and the chord length in turning radii.
struct Frame {
    alpha: f64,
    beta: f64,
    d: f64,
}

impl Frame {
    fn new(q0: Pose, q1: Pose, rho: f64) -> Self {
        let dx = q1[0] - q0[0];
        let dy = q1[1] - q0[1];
        let d = (dx * dx + dy * dy).sqrt() / rho;
        let theta = if d > 0.0 { mod2pi(dy.atan2(dx)) } else { 0.0 };
        Frame {
            alpha: mod2pi(q0[2] - theta),
            beta: mod2pi(q1[2] - theta),
            d,
        }
    }
}

fn word_params(word: DubinsWord, f: &Frame) -> Option<[f64; 3]> {
    let (a, b, d) = (f.alpha, f.beta, f.d);
    let (sa, sb, ca, cb) = (a.sin(), b.sin(), a.cos(), b.cos());
    let c_ab = (a - b).cos();
    let d_sq = d * d;
    match word {
        DubinsWord::LSL => {
            let tmp0 = d + sa - sb;
            let p_sq = 2.0 + d_sq - 2.0 * c_ab + 2.0 * d * (sa - sb);
            if p_sq < 0.0 {
                return None;
            }
            let tmp1 = (cb - ca).atan2(tmp0);
            Some([mod2pi(tmp1 - a), p_sq.sqrt(), mod2pi(b - tmp1)])
        }
        DubinsWord::RSR => {
            let tmp0 = d - sa + sb;
            let p_sq = 2.0 + d_sq - 2.0 * c_ab + 2.0 * d * (sb - sa);
            if p_sq < 0.0 {
                return None;
            }
            let tmp1 = (ca - cb).atan2(tmp0);
            Some([mod2pi(a - tmp1), p_sq.sqrt(), mod2pi(tmp1 - b)])
        }
        DubinsWord::LSR => {
            let p_sq = -2.0 + d_sq + 2.0 * c_ab + 2.0 * d * (sa + sb);
            if p_sq < 0.0 {
                return None;
            }
            let p = p_sq.sqrt();
            let tmp0 = (-ca - cb).atan2(d + sa + sb) - (-2.0f64).atan2(p);
            Some([mod2pi(tmp0 - a), p, mod2pi(tmp0 - b)])
        }
        DubinsWord::RSL => {
            let p_sq = -2.0 + d_sq + 2.0 * c_ab - 2.0 * d * (sa + sb);
            if p_sq < 0.0 {
                return None;
            }
            let p = p_sq.sqrt();
            let tmp0 = (ca + cb).atan2(d - sa - sb) - 2.0f64.atan2(p);
            Some([mod2pi(a - tmp0), p, mod2pi(b - tmp0)])
        }
        DubinsWord::RLR => {
            let tmp0 = (6.0 - d_sq + 2.0 * c_ab + 2.0 * d * (sa - sb)) / 8.0;
            if tmp0.abs() > 1.0 {
                return None;
            }
            let phi = (ca - cb).atan2(d - sa + sb);
            let p = mod2pi(TAU - tmp0.acos());
            let t = mod2pi(a - phi + mod2pi(p / 2.0));
            Some([t, p, mod2pi(a - b - t + mod2pi(p))])
        }
        DubinsWord::LRL => {
            let tmp0 = (6.0 - d_sq + 2.0 * c_ab + 2.0 * d * (sb - sa)) / 8.0;
            if tmp0.abs() > 1.0 {
                return None;
            }
            let phi = (ca - cb).atan2(d + sa - sb);
            let p = mod2pi(TAU - tmp0.acos());
            let t = mod2pi(-a - phi + p / 2.0);
            Some([t, p, mod2pi(b - a - t + mod2pi(p))])
        }
    }
}

fn advance(t: f64, q: Pose, turn: Turn) -> Pose {
    match turn {
        Turn::Left => [
            q[0] + (q[2] + t).sin() - q[2].sin(),
            q[1] - (q[2] + t).cos() + q[2].cos(),
            q[2] + t,
        ],
        Turn::Right => [
            q[0] - (q[2] - t).sin() + q[2].sin(),
            q[1] + (q[2] - t).cos() - q[2].cos(),
            q[2] - t,
        ],
        Turn::Straight => [q[0] + q[2].cos() * t, q[1] + q[2].sin() * t, q[2]],
    }
}

impl DubinsPath {
    /// Path following a specific word, if that word is feasible.
    pub fn with_word(q0: Pose, q1: Pose, rho: f64, word: DubinsWord) -> Option<DubinsPath> {
        let frame = Frame::new(q0, q1, rho);
        word_params(word, &frame).map(|params| DubinsPath {
            start: q0,
            rho,
            word,
            params,
        })
    }

    /// Shortest of the six candidate words; ties keep the earlier word in
    /// [`DubinsWord::ALL`].
    pub fn shortest(q0: Pose, q1: Pose, rho: f64) -> DubinsPath {
        let frame = Frame::new(q0, q1, rho);
        let mut best: Option<DubinsPath> = None;
        for word in DubinsWord::ALL {
            if let Some(params) = word_params(word, &frame) {
                let cand = DubinsPath {
                    start: q0,
                    rho,
                    word,
                    params,
                };
                if best.as_ref().is_none_or(|b| cand.length() < b.length()) {
                    best = Some(cand);
                }
            }
        }
        // LSL and RSR are feasible for every pair of poses
        best.expect("at least one Dubins word is always feasible")
    }

    pub fn length(&self) -> f64 {
        (self.params[0] + self.params[1] + self.params[2]) * self.rho
    }

    /// Pose reached after travelling arc length `s` (clamped to the path).
    pub fn sample(&self, s: f64) -> Pose {
        let t = (s / self.rho).clamp(0.0, self.params.iter().sum());
        let segs = self.word.segments();
        let origin = [0.0, 0.0, self.start[2]];
        let q = if t < self.params[0] {
            advance(t, origin, segs[0])
        } else {
            let q1 = advance(self.params[0], origin, segs[0]);
            if t < self.params[0] + self.params[1] {
                advance(t - self.params[0], q1, segs[1])
            } else {
                let q2 = advance(self.params[1], q1, segs[1]);
                advance(t - self.params[0] - self.params[1], q2, segs[2])
            }
        };
        let mut h = mod2pi(q[2]);
        if h > PI {
            h -= TAU;
        }
        [
            q[0] * self.rho + self.start[0],
            q[1] * self.rho + self.start[1],
            h,
        ]
    }
}
