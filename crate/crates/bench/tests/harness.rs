use std::process::Command;

use flowsched::bench::{run_benchmark, summarize, MapSource, RunSpec};
use flowsched::core::gridmap::{generate_map, MapGenConfig};
use flowsched::core::{PlannerKind, SimConfig};
use flowsched::mapfile::save_map;
use flowsched::results::load_rows;

fn small(out: Option<std::path::PathBuf>) -> RunSpec {
    RunSpec {
        maps: vec![MapSource::Generated(MapGenConfig::desk_forest(1))],
        robot_counts: vec![5],
        planners: vec![PlannerKind::Frsp],
        repetitions: 1,
        output_dir: out,
        timing: false,
        trace: false,
        snapshot: false,
        sim: SimConfig::default(),
    }
}

#[test]
fn one_of_each_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_benchmark(&small(Some(dir.path().into()))).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(load_rows(&dir.path().join("results.csv")).unwrap().len(), 1);
    assert_eq!(report.rows[0].status, "completed");
}

#[test]
fn row_count_includes_failed_runs() {
    // 2000 robots do not fit in the start band: every planner gets an error row
    let spec = RunSpec {
        maps: vec![
            MapSource::Generated(MapGenConfig::desk_forest(1)),
            MapSource::Generated(MapGenConfig::desk_maze(1)),
        ],
        robot_counts: vec![3, 2000],
        planners: vec![PlannerKind::Frsp, PlannerKind::Astar],
        repetitions: 2,
        ..small(None)
    };
    let report = run_benchmark(&spec).unwrap();
    assert_eq!(report.rows.len(), 2 * 2 * 2 * 2);
    let errors: Vec<_> = report.rows.iter().filter(|r| r.status == "error").collect();
    assert_eq!(errors.len(), 8);
    assert!(errors.iter().all(|r| r.n == 2000 && !r.error.is_empty()));
    assert!(!report.any_safety_failure());
}

#[test]
fn summary_is_recomputable_from_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = RunSpec {
        robot_counts: vec![4, 8],
        planners: vec![PlannerKind::Frsp, PlannerKind::Astar, PlannerKind::Greedy],
        repetitions: 2,
        timing: true,
        ..small(Some(dir.path().into()))
    };
    let report = run_benchmark(&spec).unwrap();
    let rows = load_rows(&dir.path().join("results.csv")).unwrap();
    let again = summarize(&rows);
    assert_eq!(again, report.summary);
    let text = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert_eq!(text, again.render());
}

#[test]
fn traces_and_snapshots_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let spec = RunSpec {
        trace: true,
        snapshot: true,
        ..small(Some(dir.path().into()))
    };
    run_benchmark(&spec).unwrap();
    let traces = dir.path().join("traces");
    assert!(traces.join("forest-1_frsp_n5_s0.csv").is_file());
    assert!(traces.join("forest-1_frsp_n5_s0.sched.txt").is_file());
    let snaps = dir.path().join("snapshots");
    assert!(snaps.join("forest-1.svg").is_file());
    let svg = std::fs::read_to_string(snaps.join("forest-1_frsp_n5_s0.svg")).unwrap();
    assert_eq!(svg.matches("class=\"trace\"").count(), 5);
}

#[test]
fn binary_reads_config_and_map_files() {
    let dir = tempfile::tempdir().unwrap();
    let map = generate_map(&MapGenConfig::with_size(
        flowsched::core::MapFamily::Forest { obstacle_density: 0.1 },
        4,
        (20.0, 30.0),
    ))
    .unwrap();
    let map_path = dir.path().join("small.map");
    save_map(&map, &map_path).unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!("map = {}\nrobots = 3\nplanner = frsp,greedy\nreps = 5 # overridden\n", map_path.display()),
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_flowsched"))
        .arg("--config")
        .arg(&cfg)
        .args(["--reps", "1", "--no-timing", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let rows = load_rows(&out.join("results.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.map == "small" && r.family == "file"));
    assert!(String::from_utf8_lossy(&status.stdout).contains("Mean makespan"));
}

#[test]
fn binary_rejects_unknown_planner() {
    let out = Command::new(env!("CARGO_BIN_EXE_flowsched"))
        .args(["--planner", "dijkstra"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
