use flowsched_core::gridmap::{generate_map, MapGenConfig};
use flowsched_core::sim::{run, run_world, Outcome, Trajectory, World};
use flowsched_core::{GridMap, NullClock, PlannerKind, SimConfig, Vec2};

/// Smallest pairwise distance over every logged frame.
fn logged_min_distance(tr: &Trajectory) -> f64 {
    let mut best = f64::INFINITY;
    for f in &tr.frames {
        for i in 0..f.len() {
            for j in i + 1..f.len() {
                best = best.min(f[i].distance(f[j]));
            }
        }
    }
    best
}

#[test]
fn antipodal_circle_exchange_keeps_distance() {
    let map = GridMap::empty(30, 30, 1.0).unwrap();
    let cfg = SimConfig {
        trace_period: Some(0.01),
        ..SimConfig::default()
    };
    let world = World::build(&map, &cfg).unwrap();
    let c = Vec2::new(15.0, 15.0);
    let n = 10;
    let starts: Vec<Vec2> = (0..n)
        .map(|i| {
            let a = i as f64 * std::f64::consts::TAU / n as f64;
            c + Vec2::new(a.cos(), a.sin()) * 8.0
        })
        .collect();
    let goals: Vec<Vec2> = starts.iter().map(|&p| c + (c - p)).collect();
    let r = run_world(&world, &starts, &goals, &cfg, &NullClock).unwrap();
    assert_eq!(r.metrics.outcome, Outcome::Completed);
    let tr = r.trajectory.unwrap();
    assert_eq!(tr.frames.len() as f64, (r.metrics.makespan / 0.01).round() + 1.0);
    let d = logged_min_distance(&tr);
    assert!(d >= 0.36, "closest approach {d}");
    assert!((d - r.metrics.min_pair_distance).abs() < 1e-12);
}

#[test]
fn lone_robot_crosses_corridor_at_full_speed() {
    let map = GridMap::empty(3, 12, 1.0).unwrap();
    let cfg = SimConfig::default();
    let world = World::build(&map, &cfg).unwrap();
    for planner in PlannerKind::ALL {
        let cfg = SimConfig { planner, ..cfg.clone() };
        let r = run_world(&world, &[Vec2::new(1.5, 1.0)], &[Vec2::new(1.5, 11.0)], &cfg, &NullClock).unwrap();
        assert_eq!(r.metrics.outcome, Outcome::Completed);
        let t = r.metrics.makespan;
        assert!((t - 10.0 / 3.0).abs() <= 1.0, "{planner}: {t}");
        // never faster than the straight line allows, up to the tolerance
        assert!(t >= (10.0 - cfg.arrival_tolerance()) / 3.0 - 1e-9);
    }
}

#[test]
fn small_forest_run_is_safe_for_network_and_grid_planners() {
    let map = generate_map(&MapGenConfig::desk_forest(1)).unwrap();
    for planner in [PlannerKind::Frsp, PlannerKind::Astar] {
        let cfg = SimConfig {
            planner,
            trace_period: Some(0.01),
            ..SimConfig::default()
        };
        let r = run(&map, 10, &cfg, &NullClock).unwrap();
        assert_eq!(r.metrics.outcome, Outcome::Completed, "{planner}");
        assert_eq!(r.metrics.arrived, 10);
        let tr = r.trajectory.unwrap();
        assert!(logged_min_distance(&tr) >= 0.36);
        for f in &tr.frames {
            assert!(f.iter().all(|&p| map.is_free(p)));
        }
        for i in 0..10 {
            let d = r.starts[i].distance(r.goals[i]);
            let t = r.metrics.arrival_time[i];
            assert!(t >= (d - cfg.arrival_tolerance()) / cfg.limits.v_max - 1e-9);
            assert!(r.metrics.path_length[i] >= d - cfg.arrival_tolerance() - 1e-9);
        }
    }
}

#[test]
fn runs_are_reproducible() {
    let map = generate_map(&MapGenConfig::desk_maze(2)).unwrap();
    let cfg = SimConfig::default();
    let a = run(&map, 20, &cfg, &NullClock).unwrap();
    let b = run(&map, 20, &cfg, &NullClock).unwrap();
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.starts, b.starts);
}
