mod common;

use std::sync::Arc;

use common::oracle::{cost_meters, floyd_warshall, random_small_map};
use pointnav::navsim::{
    geodesic_distance, observe, sample_episode, Action, GridMap, NavConfig, NavEnv, Pose,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn dijkstra_matches_floyd_warshall() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in 0..50 {
        let map = random_small_map(&mut rng, m);
        let all = floyd_warshall(&map);
        let free = map.free_cells();
        for &a in &free {
            for &b in &free {
                let got = geodesic_distance(&map, map.cell_center(a), map.cell_center(b)).unwrap();
                let want = all[a][b].map(|c| cost_meters(c, map.cell_size()));
                assert_eq!(got, want, "map {m} cells {a} -> {b}");
            }
        }
    }
}

#[test]
fn u_shaped_wall() {
    let text = "cell_size=0.25\n########\n#......#\n#.####.#\n#.#..#.#\n#.#..#.#\n#......#\n########\n";
    let map = GridMap::parse("u", text).unwrap();
    let all = floyd_warshall(&map);
    let inside = map.index(3, 3);
    let outside = map.index(1, 1);
    let got = geodesic_distance(&map, map.cell_center(inside), map.cell_center(outside)).unwrap();
    assert_eq!(got, all[inside][outside].map(|c| cost_meters(c, 0.25)));
}

#[test]
fn generated_maps_are_mostly_connected() {
    let map = GridMap::generate(3, 16, 16, 0.15).unwrap();
    let labels = map.components();
    let free = map.free_cells();
    // Flood fill from scratch and compare with the component labels.
    let mut seen = vec![false; map.num_cells()];
    let mut best = 0;
    for &s in &free {
        if seen[s] {
            continue;
        }
        let mut stack = vec![s];
        seen[s] = true;
        let mut size = 0;
        while let Some(c) = stack.pop() {
            size += 1;
            assert_eq!(labels[c], labels[s]);
            let (x, y) = map.coords(c);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if !map.is_blocked(nx, ny) {
                        let n = map.index(nx as usize, ny as usize);
                        if !seen[n] {
                            seen[n] = true;
                            stack.push(n);
                        }
                    }
                }
            }
        }
        best = best.max(size);
    }
    assert!(2 * best >= free.len(), "largest region {best} of {}", free.len());
}

fn open_map() -> Arc<GridMap> {
    Arc::new(GridMap::generate(7, 8, 8, 0.0).unwrap())
}

#[test]
fn open_map_has_free_interior() {
    let map = open_map();
    assert_eq!(map.free_cells().len(), 36);
}

#[test]
fn reward_examples() {
    let map = open_map();
    let start = Pose::new(0.375, 0.375, 0.0);
    let ep = pointnav::navsim::Episode::new(&map, start, (1.625, 0.375), 500).unwrap();
    let mut env = NavEnv::new(NavConfig::default(), map.clone(), ep.clone()).unwrap();
    let r = env.step(Action::MoveForward).unwrap();
    assert!((r.reward - 0.24).abs() < 1e-12);
    let r = env.step(Action::Stop).unwrap();
    assert!(r.done && !r.success);
    assert_eq!(r.reward, 0.0);
    assert!(env.step(Action::TurnLeft).is_err());

    let near = pointnav::navsim::Episode::new(&map, Pose::new(1.5, 0.375, 0.0), (1.625, 0.375), 500);
    // Same cell as the goal: the shortest path is zero but the episode is valid.
    let mut env = NavEnv::new(NavConfig::default(), map, near.unwrap()).unwrap();
    let r = env.step(Action::Stop).unwrap();
    assert!(r.success);
    assert_eq!(r.reward, 2.5);
}

#[test]
fn observation_frame_examples() {
    let map = open_map();
    let pose = Pose::new(0.375, 1.0, 0.0);
    let ahead = observe(&map, &pose, (2.375, 1.0), &Default::default());
    assert!((ahead.goal_polar.0 - 2.0).abs() < 1e-12);
    assert_eq!(ahead.goal_polar.1, 0.0);
    let behind = observe(&map, &Pose::new(1.375, 1.0, 0.0), (0.375, 1.0), &Default::default());
    assert_eq!(behind.goal_polar.1, std::f64::consts::PI);
}

fn random_walk(seed: u64, steps: usize) -> (NavEnv, f64, f64) {
    let map = Arc::new(GridMap::generate(seed, 12, 12, 0.2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ep = sample_episode(&map, &mut rng, 0.5, 1000).unwrap();
    let start_geo = ep.shortest_path_length;
    let mut env = NavEnv::new(NavConfig::default(), map, ep).unwrap();
    let mut shaped = 0.0;
    for _ in 0..steps {
        let a = [Action::MoveForward, Action::MoveForward, Action::TurnLeft, Action::TurnRight]
            [rng.gen_range(0..4)];
        let r = env.step(a).unwrap();
        shaped += r.reward + NavConfig::default().slack_penalty;
        let p = env.pose();
        assert!(env.map().is_free_point(p.x, p.y));
        assert!((0.0..std::f64::consts::TAU).contains(&p.heading));
        assert!(r.observation.depth.iter().all(|&d| (0.0..=5.0).contains(&d)));
        let th = r.observation.goal_polar.1;
        assert!(th > -std::f64::consts::PI && th <= std::f64::consts::PI);
    }
    (env, start_geo, shaped)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn geodesic_is_symmetric_and_triangular(seed in 0u64..1000) {
        let map = GridMap::generate(seed, 10, 10, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let free = map.free_cells();
        for _ in 0..20 {
            let [a, b, c] = [0, 1, 2].map(|_| map.cell_center(free[rng.gen_range(0..free.len())]));
            let ab = geodesic_distance(&map, a, b).unwrap();
            prop_assert_eq!(ab, geodesic_distance(&map, b, a).unwrap());
            if let (Some(ab), Some(bc), Some(ac)) = (
                ab,
                geodesic_distance(&map, b, c).unwrap(),
                geodesic_distance(&map, a, c).unwrap(),
            ) {
                prop_assert!(ac <= ab + bc + 1e-12);
            }
        }
    }

    #[test]
    fn walks_stay_free_and_rewards_telescope(seed in 0u64..1000, steps in 1usize..200) {
        let (env, start_geo, shaped) = random_walk(seed, steps);
        prop_assert!((shaped - (start_geo - env.geodesic_to_goal())).abs() < 1e-9);
    }

    #[test]
    fn observe_is_pure(seed in 0u64..1000, x in 0.3f64..2.7, y in 0.3f64..2.7, h in 0.0f64..std::f64::consts::TAU) {
        let map = GridMap::generate(seed, 12, 12, 0.2).unwrap();
        let pose = Pose::new(x, y, h);
        let a = observe(&map, &pose, (1.0, 1.0), &Default::default());
        let b = observe(&map.clone(), &pose, (1.0, 1.0), &Default::default());
        prop_assert_eq!(a, b);
    }
}
