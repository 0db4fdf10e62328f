mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mrmp::bench::{gen_instance, verify, DensityProfile};
use mrmp::postprocess::{
    build_tpg, earliest_schedule, path_length, schedule_time, total_traveling_time,
    SimpleTemporalNetwork, StnEdge,
};
use mrmp::robots::{RobotModel, Scenario};
use mrmp::sssp::{solve, SsspParams};

fn random_dag(events: usize, p: f64, rng: &mut impl Rng) -> SimpleTemporalNetwork {
    // random labels so edge order is not topological
    let mut perm: Vec<usize> = (0..events).collect();
    for i in (1..events).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let mut edges = Vec::new();
    for a in 0..events {
        for b in a + 1..events {
            if rng.gen_bool(p) {
                let duration = if rng.gen_bool(0.2) {
                    0.0
                } else {
                    rng.gen_range(0.0..1.0)
                };
                edges.push(StnEdge {
                    from: perm[a],
                    to: perm[b],
                    duration,
                });
            }
        }
    }
    for i in (1..edges.len()).rev() {
        edges.swap(i, rng.gen_range(0..=i));
    }
    SimpleTemporalNetwork { events, edges }
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9)
}

#[test]
fn schedule_matches_longest_path_on_fifty_event_dag() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..50 {
        let stn = random_dag(50, 0.1, &mut rng);
        assert!(close(
            &earliest_schedule(&stn),
            &common::longest_path_oracle(&stn)
        ));
    }
}

#[test]
fn zero_duration_cycle_is_simultaneous() {
    let stn = SimpleTemporalNetwork {
        events: 4,
        edges: vec![
            StnEdge {
                from: 0,
                to: 1,
                duration: 1.5,
            },
            StnEdge {
                from: 1,
                to: 2,
                duration: 0.0,
            },
            StnEdge {
                from: 2,
                to: 1,
                duration: 0.0,
            },
            StnEdge {
                from: 2,
                to: 3,
                duration: 2.0,
            },
        ],
    };
    assert_eq!(earliest_schedule(&stn), vec![0.0, 1.5, 1.5, 3.5]);
    assert_eq!(common::longest_path_oracle(&stn), vec![0.0, 1.5, 1.5, 3.5]);
}

fn models_of(inst: &mrmp::instance::Instance) -> Vec<RobotModel> {
    inst.robots.iter().map(|r| r.model.clone()).collect()
}

#[test]
fn solver_schedules_respect_every_edge_and_smoothing_helps() {
    let params = SsspParams {
        time_limit: 5.0,
        ..Default::default()
    };
    let mut checked = 0;
    for (k, sc) in [
        Scenario::Point2d,
        Scenario::Line2d,
        Scenario::Arm22,
        Scenario::Dubins2d,
    ]
    .into_iter()
    .enumerate()
    {
        for seed in 0..3u64 {
            let inst =
                gen_instance(sc, 3, 600 + 10 * k as u64 + seed, DensityProfile::Standard).unwrap();
            let Ok(res) = solve(&inst, &params) else {
                continue;
            };
            let models = models_of(&inst);
            let stn = build_tpg(&res.solution, &models).to_stn();
            let t = earliest_schedule(&stn);
            assert!(close(&t, &common::longest_path_oracle(&stn)), "{sc}");
            for e in &stn.edges {
                assert!(
                    t[e.to] >= t[e.from] + e.duration - 1e-9,
                    "{sc}: edge {e:?} violated"
                );
            }

            let before = schedule_time(&res.solution, &models);
            let (smoothed, tt) = total_traveling_time(&res.solution, &models, &inst.obstacles, 5);
            assert!(tt.raw <= before + 1e-9, "{sc}: {} > {before}", tt.raw);
            assert!((tt.normalized * models.len() as f64 - tt.raw).abs() < 1e-9);
            assert!(
                verify(&inst, &smoothed).is_empty(),
                "{sc}: smoothed output invalid"
            );
            for (i, m) in models.iter().enumerate() {
                assert!(
                    path_length(m, &smoothed.paths[i])
                        <= path_length(m, &res.solution.paths[i]) + 1e-9
                );
            }
            checked += 1;
        }
    }
    assert!(checked >= 8, "{checked}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn schedule_is_least_feasible(seed in any::<u64>(), events in 1usize..40, p in 0.0..0.4f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stn = random_dag(events, p, &mut rng);
        let t = earliest_schedule(&stn);
        for e in &stn.edges {
            prop_assert!(t[e.to] >= t[e.from] + e.duration - 1e-12);
        }
        prop_assert!(t.iter().all(|&x| x >= 0.0));
        // every positive time is tight on some incoming edge
        for v in 0..events {
            if t[v] > 0.0 {
                prop_assert!(stn.edges.iter().any(|e| e.to == v && (t[e.from] + e.duration - t[v]).abs() <= 1e-12));
            }
        }
    }
}
