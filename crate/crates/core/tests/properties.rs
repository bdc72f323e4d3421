mod support;

use std::f64::consts::PI;

use gridnav_core::costmap::{build_static_costmap, InflationParams, LocalCostmap, LocalWindow, INSCRIBED};
use gridnav_core::global_planner::{octile_units, plan, simplify, PlannerConfig};
use gridnav_core::kinematics::{normalize_angle, rollout, step};
use gridnav_core::localization::{estimate_pose, CameraParams, EstimatorConfig, Observation, PoseSource};
use gridnav_core::metrics::{summarize, ErrorSeries};
use gridnav_core::world::{simulate_scan, Landmark, LandmarkMap, LidarParams};
use gridnav_core::{Point2, Pose2D, Twist};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use support::oracles::*;

fn angle() -> impl Strategy<Value = f64> {
    -PI..PI
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalized_angles_stay_in_half_open_range(a in -1e4f64..1e4) {
        let n = normalize_angle(a);
        prop_assert!(n > -PI && n <= PI);
        let turns = (a - n) / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn straight_steps_are_exact(x in -5.0f64..5.0, y in -5.0f64..5.0, th in angle(), v in 0.0f64..0.3) {
        let p = step(Pose2D::new(x, y, th), Twist::new(v, 0.0), 0.1);
        prop_assert_eq!(p.x, x + v * 0.1 * th.cos());
        prop_assert_eq!(p.y, y + v * 0.1 * th.sin());
        prop_assert_eq!(p.theta, th);
    }

    #[test]
    fn stepping_commutes_with_rigid_motion(
        th in angle(), v in 0.0f64..0.3, w in -0.2f64..0.2,
        fx in -3.0f64..3.0, fy in -3.0f64..3.0, fth in angle(),
    ) {
        let frame = Pose2D::new(fx, fy, fth);
        let local = Pose2D::new(0.4, -0.7, th);
        let a = frame.compose(&step(local, Twist::new(v, w), 0.1));
        let b = step(frame.compose(&local), Twist::new(v, w), 0.1);
        prop_assert!((a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12);
        prop_assert!(normalize_angle(a.theta - b.theta).abs() < 1e-12);
    }

    #[test]
    fn rollout_has_steps_plus_one_poses(n in 0usize..40, v in 0.0f64..0.3, w in -0.2f64..0.2) {
        let r = rollout(Pose2D::default(), Twist::new(v, w), 0.1, n);
        prop_assert_eq!(r.len(), n + 1);
        prop_assert_eq!(r[0], Pose2D::default());
    }

    #[test]
    fn compose_inverse_is_identity(x in -5.0f64..5.0, y in -5.0f64..5.0, th in angle()) {
        let p = Pose2D::new(x, y, th);
        let id = p.compose(&p.inverse());
        prop_assert!(id.x.abs() < 1e-12 && id.y.abs() < 1e-12 && id.theta.abs() < 1e-12);
    }

    #[test]
    fn wider_inflation_never_lowers_cost(seed in any::<u64>(), extra in 0.0f64..0.4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = random_grid(&mut rng, 20, 20, 0.05, 0.04, 0.02);
        let narrow = InflationParams::default();
        let wide = InflationParams { inflation_radius: narrow.inflation_radius + extra, ..narrow };
        let a = build_static_costmap(&grid, narrow).unwrap();
        let b = build_static_costmap(&grid, wide).unwrap();
        for (x, y) in a.costs().iter().zip(b.costs()) {
            prop_assert!(y >= x);
        }
    }

    #[test]
    fn simplify_is_idempotent_and_keeps_endpoints(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = random_grid(&mut rng, 20, 20, 0.1, 0.15, 0.0);
        let costmap = build_static_costmap(&grid, TEST_INFLATION).unwrap();
        let (Some(s), Some(t)) = (random_free_cell(&mut rng, &costmap), random_free_cell(&mut rng, &costmap)) else {
            return Ok(());
        };
        let g = costmap.geometry;
        let Ok(path) = plan(&costmap, g.cell_center(s.0, s.1), g.cell_center(t.0, t.1), &PlannerConfig::default()) else {
            return Ok(());
        };
        let once = simplify(&path, &costmap);
        prop_assert_eq!(&simplify(&once, &costmap), &once);
        prop_assert_eq!(once.start(), path.start());
        prop_assert_eq!(once.goal(), path.goal());
        prop_assert!(once.len() <= path.len());
    }

    #[test]
    fn astar_paths_are_connected_and_admissible(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = random_grid(&mut rng, 20, 20, 0.1, 0.2, 0.0);
        let costmap = build_static_costmap(&grid, TEST_INFLATION).unwrap();
        let (Some(s), Some(t)) = (random_free_cell(&mut rng, &costmap), random_free_cell(&mut rng, &costmap)) else {
            return Ok(());
        };
        let g = costmap.geometry;
        let Ok(path) = plan(&costmap, g.cell_center(s.0, s.1), g.cell_center(t.0, t.1), &PlannerConfig::default()) else {
            return Ok(());
        };
        let cells: Vec<(usize, usize)> = path.waypoints.iter().map(|p| g.world_to_cell(*p).unwrap()).collect();
        prop_assert_eq!(cells[0], s);
        prop_assert_eq!(*cells.last().unwrap(), t);
        for w in cells.windows(2) {
            let dc = w[0].0.abs_diff(w[1].0);
            let dr = w[0].1.abs_diff(w[1].1);
            prop_assert!(dc <= 1 && dr <= 1 && dc + dr > 0);
            prop_assert!(costmap.cost(w[1].0, w[1].1) < INSCRIBED);
        }
        prop_assert!(path.cost_units >= octile_units(s.0.abs_diff(t.0) as u64, s.1.abs_diff(t.1) as u64));
    }

    #[test]
    fn local_update_is_confined_to_window(seed in any::<u64>(), x in 0.6f64..2.4, y in 0.6f64..2.4, th in angle()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut grid = random_grid(&mut rng, 60, 60, 0.05, 0.0, 0.0);
        grid.geometry.origin = Point2::new(0.0, 0.0);
        let base = build_static_costmap(&grid, InflationParams::default()).unwrap();
        // The scan comes from a world with extra clutter the static map lacks.
        let mut truth = random_grid(&mut rng, 60, 60, 0.05, 0.02, 0.0);
        truth.geometry.origin = Point2::new(0.0, 0.0);
        let window = LocalWindow { side: 1.5, persistence: 3 };
        let pose = Pose2D::new(x, y, th);
        let scan = simulate_scan(&truth, pose, &LidarParams::default(), 0.0, &mut rng).unwrap();

        let mut local = LocalCostmap::new(base.clone(), window);
        let rect = local.update(&scan, pose).unwrap();
        let g = base.geometry;
        for r in 0..g.height {
            for c in 0..g.width {
                if !rect.contains(c as i64, r as i64) {
                    prop_assert_eq!(local.costmap().cost(c, r), base.cost(c, r));
                }
            }
        }
        let once = local.costmap().clone();
        local.update(&scan, pose);
        prop_assert_eq!(local.costmap(), &once);
    }

    #[test]
    fn noise_free_observations_recover_pose(
        x in 1.0f64..9.0, y in 1.0f64..9.0, th in angle(),
        ex in -0.2f64..0.2, ey in -0.2f64..0.2, eth in -0.1f64..0.1,
        n in 3usize..10, seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cam = CameraParams::default();
        let truth = Pose2D::new(x, y, th);
        let camera = cam.camera_pose(truth);
        let mut map = LandmarkMap::new();
        let mut obs = Vec::new();
        for id in 0..n as u32 {
            let b = rng.random_range(-0.7..0.7);
            let r = rng.random_range(1.0..6.0);
            let lm = Point2::new(camera.x + r * (camera.theta + b).cos(), camera.y + r * (camera.theta + b).sin());
            map.insert(Landmark { id, position: lm }).unwrap();
            obs.push(Observation { landmark_id: id, bearing: b, range: r, stamp: 0.0 });
        }
        let prior = Pose2D::new(x + ex, y + ey, th + eth);
        let est = estimate_pose(&obs, &map, prior, &cam, &EstimatorConfig::default(), 0.0);
        prop_assert_eq!(est.source, PoseSource::Visual);
        prop_assert!(est.pose.position().distance(&truth.position()) < 1e-6);
        prop_assert!(normalize_angle(est.pose.theta - th).abs() < 1e-6);
    }

    #[test]
    fn summary_max_bounds_rms_bounds_mean(values in prop::collection::vec(-1.0f64..1.0, 1..50)) {
        let mut s = ErrorSeries::default();
        for (i, v) in values.iter().enumerate() {
            s.t.push(i as f64);
            s.ex.push(*v);
            s.ey.push(-v);
            s.e_norm.push(v.abs() * 2f64.sqrt());
            s.etheta.push(0.0);
        }
        let sum = summarize(&s).unwrap();
        for c in [sum.ex, sum.ey, sum.e_norm] {
            prop_assert!(c.max + 1e-12 >= c.rms);
            prop_assert!(c.rms + 1e-12 >= c.mean.abs());
        }
    }
}

#[test]
fn euler_error_halves_with_step() {
    let coarse = euler_arc_error(0.3, 0.2, 0.02, 10.0);
    let fine = euler_arc_error(0.3, 0.2, 0.01, 10.0);
    assert!(fine <= 0.55 * coarse, "{fine} vs {coarse}");
    assert!(fine > 0.0);
}
