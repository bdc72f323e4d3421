mod support;

use gridnav_core::costmap::{build_static_costmap, INSCRIBED, LETHAL, UNKNOWN};
use gridnav_core::global_planner::{plan, PlannerConfig};
use gridnav_core::local_planner::{compute_cmd, DwaConfig, DwaInput};
use gridnav_core::world::{disc_cells, raycast, CellState, Disc};
use gridnav_core::{LocalPlanError, PlanError, Point2, RobotParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::oracles::*;

#[test]
fn raycast_matches_slab_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let grid = random_grid(&mut rng, 25, 18, 0.1, 0.08, 0.05);
        let g = grid.geometry;
        for _ in 0..50 {
            let o = Point2::new(
                rng.random_range(g.origin.x + 1e-3..g.max_x() - 1e-3),
                rng.random_range(g.origin.y + 1e-3..g.max_y() - 1e-3),
            );
            let a = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let range = rng.random_range(0.1..4.0);
            let got = raycast(&grid, o, a, range).unwrap();
            let want = raycast_oracle(&grid, o, a, range);
            match (got, want) {
                (Some(x), Some(y)) => assert!((x - y).abs() < 1e-9, "{x} vs {y}"),
                (None, None) => {}
                other => panic!("mismatch {other:?} at {o:?} angle {a}"),
            }
        }
    }
}

#[test]
fn costmap_matches_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for params in [TEST_INFLATION, gridnav_core::costmap::InflationParams::default()] {
        for _ in 0..25 {
            let res = [0.05, 0.1, 0.15][rng.random_range(0..3)];
            let grid = random_grid(&mut rng, 30, 30, res, 0.05, 0.05);
            let costmap = build_static_costmap(&grid, params).unwrap();
            assert_eq!(costmap.costs(), costmap_oracle(&grid, &params).as_slice());
        }
    }
}

#[test]
fn inflation_is_monotone_in_obstacle_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10 {
        let grid = random_grid(&mut rng, 24, 24, 0.05, 0.03, 0.0);
        let costmap = build_static_costmap(&grid, Default::default()).unwrap();
        let mut pairs: Vec<(f64, u8)> = Vec::new();
        for r in 0..24 {
            for c in 0..24 {
                if grid.get(c, r) == CellState::Free {
                    pairs.push((obstacle_distance(&grid, c, r), costmap.cost(c, r)));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pairs.windows(2) {
            assert!(w[0].1 >= w[1].1, "{:?} then {:?}", w[0], w[1]);
            assert!(w[0].1 < LETHAL);
        }
    }
}

#[test]
fn astar_cost_equals_dijkstra() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cfg = PlannerConfig::default();
    let mut solvable = 0;
    for _ in 0..60 {
        let grid = random_grid(&mut rng, 20, 20, 0.1, 0.2, 0.0);
        let costmap = build_static_costmap(&grid, TEST_INFLATION).unwrap();
        let (Some(s), Some(t)) = (random_free_cell(&mut rng, &costmap), random_free_cell(&mut rng, &costmap)) else {
            continue;
        };
        let g = costmap.geometry;
        let oracle = dijkstra_units(&costmap, s, t, cfg.cost_weight);
        match plan(&costmap, g.cell_center(s.0, s.1), g.cell_center(t.0, t.1), &cfg) {
            Ok(path) => {
                solvable += 1;
                assert_eq!(Some(path.cost_units), oracle);
            }
            Err(PlanError::NoPath) => assert_eq!(oracle, None),
            Err(e) => panic!("unexpected {e}"),
        }
    }
    assert!(solvable > 20);
}

#[test]
fn dwa_matches_bruteforce() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let robot = RobotParams::default();
    let cfg = DwaConfig::default();
    for _ in 0..40 {
        let scene = random_dwa_scene(&mut rng, &robot);
        let input = DwaInput {
            pose: scene.pose,
            twist: scene.twist,
            goal: scene.goal,
            path: &scene.path,
            costmap: &scene.costmap,
        };
        let got = compute_cmd(&input, &robot, &cfg);
        let want = dwa_bruteforce(
            scene.pose,
            scene.twist,
            scene.goal.position(),
            &scene.path,
            &scene.costmap,
            &robot,
            &cfg,
        );
        match (got, want) {
            (Ok(d), Some((i, cmd))) => {
                assert_eq!(d.index, i);
                assert_eq!(d.cmd, cmd);
            }
            (Err(LocalPlanError::Blocked), None) => {}
            (got, want) => panic!("{got:?} vs {want:?}"),
        }
    }
}

#[test]
fn disc_rasterization_matches_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..100 {
        let grid = random_grid(&mut rng, 30, 20, 0.1, 0.0, 0.0);
        let g = grid.geometry;
        let disc = Disc {
            center: Point2::new(
                rng.random_range(g.origin.x - 0.5..g.max_x() + 0.5),
                rng.random_range(g.origin.y - 0.5..g.max_y() + 0.5),
            ),
            radius: rng.random_range(0.0..0.8),
        };
        let mut got = disc_cells(&g, &disc);
        got.sort_by_key(|&(c, r)| (r, c));
        assert_eq!(got, disc_oracle(&g, disc.center, disc.radius));
    }
}

#[test]
fn special_costs_survive_inflation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let grid = random_grid(&mut rng, 30, 30, 0.05, 0.1, 0.1);
    let costmap = build_static_costmap(&grid, Default::default()).unwrap();
    for r in 0..30 {
        for c in 0..30 {
            match grid.get(c, r) {
                CellState::Occupied => assert_eq!(costmap.cost(c, r), LETHAL),
                CellState::Unknown => assert_eq!(costmap.cost(c, r), UNKNOWN),
                CellState::Free => assert!(costmap.cost(c, r) <= INSCRIBED),
            }
        }
    }
}
