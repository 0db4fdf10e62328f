mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mrmp::geometry::{SphereObstacle, Vec3};
use mrmp::roadmap::{init_roadmap, InitConfig, Roadmap, VertexId};
use mrmp::robots::{RobotModel, State};

#[test]
fn goal_dist_matches_bellman_ford() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let m = RobotModel::point2d(0.01);
    let mut reachable = 0;
    for k in 0..100 {
        let size = if k == 0 { 50 } else { rng.gen_range(2..=50) };
        let p = rng.gen_range(0.02..0.3);
        let (s, g) = (
            common::sample_inside(&m, &mut rng),
            common::sample_inside(&m, &mut rng),
        );
        let rm = common::random_roadmap(&m, s, g, size, p, &mut rng);
        let oracle = common::bellman_ford_goal_dist(&rm);
        assert_eq!(rm.goal_dists(), &oracle[..], "roadmap {k}");
        reachable += oracle.iter().filter(|d| d.is_finite()).count();
        // Bellman condition
        for u in 0..rm.len() as VertexId {
            if u == rm.goal_id() {
                assert_eq!(rm.goal_dist(u), 0.0);
                continue;
            }
            let best = rm
                .out_edges(u)
                .iter()
                .map(|e| e.weight + rm.goal_dist(e.other))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(rm.goal_dist(u), best);
        }
    }
    assert!(reachable > 500);
}

#[test]
fn nearest_matches_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let m = RobotModel::line2d(0.1, 0.01);
    let mut rm = Roadmap::new(m.sample(&mut rng), m.sample(&mut rng));
    while rm.len() < 1000 {
        rm.push_vertex(m.sample(&mut rng));
    }
    for _ in 0..100 {
        let q = m.sample(&mut rng);
        let mut best = (0, f64::INFINITY);
        for id in 0..rm.len() {
            let d = m.dist(rm.state(id as VertexId), &q);
            if d < best.1 {
                best = (id as VertexId, d);
            }
        }
        assert_eq!(rm.nearest(&m, &q), best);
    }
}

#[test]
fn init_in_empty_space_is_near_straight() {
    let m = RobotModel::point2d(0.02);
    let mut good = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, g) = (
            common::sample_inside(&m, &mut rng),
            common::sample_inside(&m, &mut rng),
        );
        let cfg = InitConfig {
            eps: 0.2,
            budget: 100_000,
            deadline: None,
        };
        let rm = init_roadmap(&m, &s, &g, &[], &mut rng, cfg).expect("empty space");
        let straight = m.dist(&s, &g);
        if rm.goal_dist(rm.start_id()) <= 1.5 * straight + 1e-12 {
            good += 1;
        }
    }
    assert!(good >= 95, "{good}/100");
}

fn obstacles(rng: &mut impl Rng) -> Vec<SphereObstacle> {
    (0..5)
        .map(|_| SphereObstacle {
            center: Vec3::xy(rng.gen(), rng.gen()),
            radius: rng.gen_range(0.03..0.12),
        })
        .collect()
}

fn free_state(m: &RobotModel, obs: &[SphereObstacle], rng: &mut impl Rng) -> State {
    loop {
        let q = m.sample(rng);
        if m.is_valid(&q, obs) {
            return q;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    /// Random insertion sequences keep every vertex free, every edge
    /// connectable, never shrink the graph, and leave goal distances as
    /// upper bounds of the exact ones until the next rebuild.
    #[test]
    fn add_vertex_sequences_stay_consistent(seed in any::<u64>(), dubins in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = if dubins { RobotModel::dubins2d(0.02, 0.08) } else { RobotModel::line2d(0.08, 0.01) };
        let obs = obstacles(&mut rng);
        let (s, g) = (free_state(&m, &obs, &mut rng), free_state(&m, &obs, &mut rng));
        let mut rm = Roadmap::endpoints_only(&m, &obs, s, g, 0.3);
        rm.check_consistency(&m, &obs).map_err(TestCaseError::fail)?;
        for step in 0..80 {
            let (v, e) = (rm.len(), rm.edge_count());
            let from = rng.gen_range(0..rm.len()) as VertexId;
            let target = m.sample(&mut rng);
            if let Some(q) = m.steer(rm.state(from), &target, 0.2, &obs) {
                let theta = rng.gen_range(0.0..0.05);
                rm.add_vertex(&m, &obs, q, from, theta, 0.2);
            }
            prop_assert!(rm.len() >= v && rm.edge_count() >= e);
            let exact = common::bellman_ford_goal_dist(&rm);
            for (u, d) in exact.iter().enumerate() {
                prop_assert!(rm.goal_dist(u as VertexId) >= *d - 1e-12, "stale value below exact at {}", u);
            }
            if step % 20 == 19 {
                rm.rebuild_goal_dist();
                prop_assert_eq!(rm.goal_dists(), &common::bellman_ford_goal_dist(&rm)[..]);
            }
        }
        rm.check_consistency(&m, &obs).map_err(TestCaseError::fail)?;
    }
}
