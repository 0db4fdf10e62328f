//! SVG pictures of instances, solutions and roadmaps. 3D scenes are drawn
//! as a top-down orthographic projection onto the xy plane.

use std::fmt::Write as _;

use crate::geometry::{Capsule, Vec3};
use crate::instance::{Instance, Solution};
use crate::roadmap::RoadmapDoc;
use crate::robots::{RobotModel, State};

const SIZE: f64 = 600.0;
const MARGIN: f64 = 20.0;
const SAMPLE: f64 = 0.02;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
    "#bcbd22", "#7f7f7f",
];

pub fn robot_color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn px(x: f64) -> f64 {
    MARGIN + x * SIZE
}

fn py(y: f64) -> f64 {
    MARGIN + (1.0 - y) * SIZE
}

fn len(r: f64) -> f64 {
    r * SIZE
}

/// Workspace point that represents a state in roadmap and path drawings:
/// the tip for fixed-root arms, the first body primitive's centre otherwise.
pub fn anchor(model: &RobotModel, q: &[f64]) -> Vec3 {
    let body = model.body(q);
    if model.scenario.has_root() {
        body.last().expect("non-empty body").seg.b
    } else {
        let s = body[0].seg;
        (s.a + s.b) * 0.5
    }
}

fn polyline(out: &mut String, class: &str, style: &str, pts: &[Vec3]) {
    let _ = write!(out, r#"<polyline class="{class}" {style} points=""#);
    for (k, p) in pts.iter().enumerate() {
        let sep = if k == 0 { "" } else { " " };
        let _ = write!(out, "{sep}{:.2},{:.2}", px(p.x), py(p.y));
    }
    out.push_str("\"/>\n");
}

fn capsule(out: &mut String, class: &str, style: &str, c: &Capsule) {
    let (a, b) = (c.seg.a, c.seg.b);
    if a == b {
        let _ = writeln!(
            out,
            r#"<circle class="{class}" {style} cx="{:.2}" cy="{:.2}" r="{:.2}"/>"#,
            px(a.x),
            py(a.y),
            len(c.radius)
        );
    } else {
        let _ = writeln!(
            out,
            r#"<line class="{class}" {style} stroke-width="{:.2}" stroke-linecap="round" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
            len(2.0 * c.radius).max(0.5),
            px(a.x),
            py(a.y),
            px(b.x),
            py(b.y)
        );
    }
}

/// Anchor points along the local-planner trajectory from `a` to `b`.
fn motion_points(model: &RobotModel, a: &[f64], b: &[f64]) -> Vec<Vec3> {
    let traj = model.trajectory(a, b);
    model
        .sample_states(&traj, SAMPLE)
        .iter()
        .map(|s| anchor(model, s))
        .collect()
}

fn body(out: &mut String, class: &str, model: &RobotModel, q: &State, color: &str, fill: bool) {
    for c in model.body(q) {
        let style = if c.seg.a == c.seg.b {
            if fill {
                format!(r#"fill="{color}" fill-opacity="0.6" stroke="none""#)
            } else {
                format!(r#"fill="none" stroke="{color}" stroke-width="1.5""#)
            }
        } else {
            let op = if fill { "0.6" } else { "0.25" };
            format!(r#"stroke="{color}" stroke-opacity="{op}""#)
        };
        capsule(out, class, &style, &c);
    }
}

/// Deterministic SVG of the instance with optional solution and roadmaps.
/// Roadmap vertices carry class `rm-vertex` and roadmap edges `rm-edge`, one
/// element per vertex and per edge entry of each roadmap.
pub fn render(
    instance: &Instance,
    solution: Option<&Solution>,
    roadmaps: Option<&[RoadmapDoc]>,
) -> String {
    let full = SIZE + 2.0 * MARGIN;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}">"#
    );
    let _ = writeln!(out, r#"<title>{}</title>"#, escape(&instance.id));
    let _ = writeln!(
        out,
        r#"<rect class="frame" x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="white" stroke="black"/>"#
    );

    let models = instance.models();
    if let Some(rms) = roadmaps {
        out.push_str("<g class=\"roadmaps\">\n");
        for (model, rm) in models.iter().zip(rms) {
            for &(u, v, _) in &rm.edges {
                let pts = motion_points(model, &rm.vertices[u as usize], &rm.vertices[v as usize]);
                polyline(
                    &mut out,
                    "rm-edge",
                    r##"fill="none" stroke="#cccccc" stroke-width="0.6""##,
                    &pts,
                );
            }
            for q in &rm.vertices {
                let p = anchor(model, q);
                let _ = writeln!(
                    out,
                    r##"<circle class="rm-vertex" cx="{:.2}" cy="{:.2}" r="1.2" fill="#999999"/>"##,
                    px(p.x),
                    py(p.y)
                );
            }
        }
        out.push_str("</g>\n");
    }

    out.push_str("<g class=\"obstacles\">\n");
    for o in &instance.obstacles {
        let _ = writeln!(
            out,
            r#"<circle class="obstacle" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="black"/>"#,
            px(o.center.x),
            py(o.center.y),
            len(o.radius)
        );
    }
    out.push_str("</g>\n");

    if let Some(sol) = solution {
        out.push_str("<g class=\"paths\">\n");
        for (i, (model, path)) in models.iter().zip(&sol.paths).enumerate() {
            let mut pts = vec![anchor(model, &path[0])];
            for w in path.windows(2) {
                if w[0] != w[1] {
                    pts.extend(motion_points(model, &w[0], &w[1]).into_iter().skip(1));
                }
            }
            let style = format!(
                r#"fill="none" stroke="{}" stroke-width="1.2""#,
                robot_color(i)
            );
            polyline(&mut out, "path", &style, &pts);
        }
        out.push_str("</g>\n");
    }

    out.push_str("<g class=\"robots\">\n");
    for (i, r) in instance.robots.iter().enumerate() {
        body(&mut out, "start", &r.model, &r.start, robot_color(i), true);
        body(&mut out, "goal", &r.model, &r.goal, robot_color(i), false);
    }
    out.push_str("</g>\n</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{gen_instance, DensityProfile};
    use crate::robots::Scenario;

    #[test]
    fn empty_instance_has_frame_only() {
        let inst = Instance {
            id: "empty".into(),
            scenario: Scenario::Point2d,
            robots: vec![],
            obstacles: vec![],
            seed: 0,
        };
        let svg = render(&inst, None, None);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("class=\"frame\""));
        assert!(!svg.contains("<circle") && !svg.contains("<polyline"));
    }

    #[test]
    fn render_is_deterministic_for_3d() {
        let inst = gen_instance(Scenario::Capsule3d, 3, 1, DensityProfile::Standard).unwrap();
        assert_eq!(render(&inst, None, None), render(&inst, None, None));
        assert_eq!(
            render(&inst, None, None)
                .matches("class=\"obstacle\"")
                .count(),
            inst.obstacles.len()
        );
    }

    #[test]
    fn arm_anchor_is_tip() {
        let m = RobotModel::arm22(Vec3::xy(0.5, 0.5), [0.2, 0.1], 0.01);
        let p = anchor(&m, &[0.0, 0.0]);
        assert!((p.x - 0.8).abs() < 1e-12 && (p.y - 0.5).abs() < 1e-12);
    }
}
