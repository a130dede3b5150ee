//! Experiment grid: every map × robot count × repetition × planner.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use flowsched_core::gridmap::{generate_map, MapFamily, MapGenConfig};
use flowsched_core::sim::{placements, run_world, Outcome, SimRun, World};
use flowsched_core::{Clock, GridMap, NullClock, PlannerKind, SimConfig};

use crate::clock::StdClock;
use crate::mapfile::load_map;
use crate::results::{save_rows, RunRow};
use crate::svg::{render_snapshot, Layers};
use crate::trace::{schedule_trace, trajectory_csv};

#[derive(Debug, Clone, PartialEq)]
pub enum MapSource {
    Generated(MapGenConfig),
    File(PathBuf),
}

impl MapSource {
    pub fn label(&self) -> String {
        match self {
            MapSource::Generated(c) => format!("{}-{}", family_name(&c.family), c.seed),
            MapSource::File(p) => p
                .file_stem()
                .map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned()),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            MapSource::Generated(c) => family_name(&c.family),
            MapSource::File(_) => "file",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            MapSource::Generated(c) => c.seed,
            MapSource::File(_) => 0,
        }
    }

    pub fn load(&self) -> anyhow::Result<GridMap> {
        Ok(match self {
            MapSource::Generated(c) => generate_map(c)?,
            MapSource::File(p) => load_map(p)?,
        })
    }
}

fn family_name(f: &MapFamily) -> &'static str {
    match f {
        MapFamily::Forest { .. } => "forest",
        MapFamily::Maze { .. } => "maze",
    }
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub maps: Vec<MapSource>,
    pub robot_counts: Vec<usize>,
    pub planners: Vec<PlannerKind>,
    /// Robot placement seeds `0..repetitions`.
    pub repetitions: u32,
    pub output_dir: Option<PathBuf>,
    /// Measure planner wall-clock time. Off makes the CSV reproducible byte
    /// for byte.
    pub timing: bool,
    /// Write a trajectory log and schedule trace per run.
    pub trace: bool,
    /// Write SVG snapshots.
    pub snapshot: bool,
    pub sim: SimConfig,
}

impl RunSpec {
    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(!self.maps.is_empty(), "no maps given");
        anyhow::ensure!(!self.robot_counts.is_empty(), "no robot counts given");
        anyhow::ensure!(!self.planners.is_empty(), "no planners given");
        anyhow::ensure!(self.repetitions > 0, "repetitions must be positive");
        anyhow::ensure!(self.robot_counts.iter().all(|&n| n > 0), "robot counts must be positive");
        self.sim.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<RunRow>,
    pub summary: Summary,
}

impl BenchReport {
    pub fn any_safety_failure(&self) -> bool {
        self.rows.iter().any(RunRow::is_safety_failure)
    }
}

fn status_of(run: &SimRun) -> &'static str {
    match run.metrics.outcome {
        Outcome::Completed => "completed",
        Outcome::Dnf => "dnf",
        Outcome::SafetyViolation => "safety",
    }
}

fn row_for(src: &MapSource, seed: u64, planner: PlannerKind, n: usize, run: &SimRun, cfg: &SimConfig) -> RunRow {
    let m = &run.metrics;
    let safe = m.is_safe(cfg.limits.r_min, cfg.safety_factor);
    let (search, select, allocate) = (m.mean_search_s(), m.mean_select_s(), m.mean_allocate_s());
    RunRow {
        map: src.label(),
        family: src.family().into(),
        map_seed: src.seed(),
        seed,
        planner: planner.as_str().into(),
        n,
        status: if safe { status_of(run) } else { "safety" }.into(),
        makespan: m.makespan,
        arrived: m.arrived,
        dnf: m.arrived < n,
        min_distance: m.min_pair_distance,
        min_clearance: m.min_obstacle_clearance,
        penetrations: m.penetrations,
        sched_calls: m.sched_calls,
        search_s: search,
        select_s: select,
        allocate_s: allocate,
        total_s: search + select + allocate,
        stranded: m.stranded,
        reroutes: m.reroutes,
        incumbent_calls: m.incumbent_calls,
        fallback_calls: m.fallback_calls,
        mean_path_length: m.path_length.iter().sum::<f64>() / n as f64,
        error: String::new(),
    }
}

fn error_row(src: &MapSource, seed: u64, planner: PlannerKind, n: usize, err: &dyn std::fmt::Display) -> RunRow {
    RunRow {
        map: src.label(),
        family: src.family().into(),
        map_seed: src.seed(),
        seed,
        planner: planner.as_str().into(),
        n,
        status: "error".into(),
        makespan: f64::NAN,
        arrived: 0,
        dnf: true,
        min_distance: f64::NAN,
        min_clearance: f64::NAN,
        penetrations: 0,
        sched_calls: 0,
        search_s: 0.0,
        select_s: 0.0,
        allocate_s: 0.0,
        total_s: 0.0,
        stranded: 0,
        reroutes: 0,
        incumbent_calls: 0,
        fallback_calls: 0,
        mean_path_length: f64::NAN,
        error: err.to_string(),
    }
}

/// Runs the whole grid. Failed runs become rows; only unreadable maps and
/// output errors abort.
pub fn run_benchmark(spec: &RunSpec) -> anyhow::Result<BenchReport> {
    spec.validate()?;
    if let Some(dir) = &spec.output_dir {
        fs::create_dir_all(dir)?;
        if spec.trace {
            fs::create_dir_all(dir.join("traces"))?;
        }
        if spec.snapshot {
            fs::create_dir_all(dir.join("snapshots"))?;
        }
    }
    let std_clock = StdClock::new();
    let clock: &dyn Clock = if spec.timing { &std_clock } else { &NullClock };
    let mut rows = Vec::new();
    for src in &spec.maps {
        let map = src.load()?;
        let label = src.label();
        let world = World::build(&map, &spec.sim)?;
        if spec.snapshot {
            if let Some(dir) = &spec.output_dir {
                let layers = Layers {
                    cells: Some(&world.cells),
                    network: Some(&world.graph),
                    trace: None,
                };
                fs::write(dir.join("snapshots").join(format!("{label}.svg")), render_snapshot(&map, layers))?;
            }
        }
        for &n in &spec.robot_counts {
            for rep in 0..spec.repetitions as u64 {
                let mut cfg = spec.sim.clone();
                cfg.seed = rep;
                if spec.trace {
                    cfg.trace_period = Some(0.1);
                }
                let placed = placements(&world, n, &cfg);
                for &planner in &spec.planners {
                    let (starts, goals) = match &placed {
                        Ok(p) => p,
                        Err(e) => {
                            rows.push(error_row(src, rep, planner, n, e));
                            continue;
                        }
                    };
                    cfg.planner = planner;
                    log::info!("{label} n={n} seed={rep} {planner}");
                    match run_world(&world, starts, goals, &cfg, clock) {
                        Ok(run) => {
                            let row = row_for(src, rep, planner, n, &run, &cfg);
                            if row.is_safety_failure() {
                                if let Some(v) = &run.metrics.violation {
                                    log::error!(
                                        "{label} n={n} seed={rep} {planner}: robots {:?} at {:.3} m, t={:.2}s",
                                        v.robots,
                                        v.distance,
                                        v.time
                                    );
                                }
                            }
                            if let Some(dir) = &spec.output_dir {
                                write_run_artifacts(dir, spec, &map, &world, &run, &format!("{label}_{planner}_n{n}_s{rep}"))?;
                            }
                            rows.push(row);
                        }
                        Err(e) => rows.push(error_row(src, rep, planner, n, &e)),
                    }
                }
            }
        }
    }
    let summary = summarize(&rows);
    if let Some(dir) = &spec.output_dir {
        save_rows(&dir.join("results.csv"), &rows)?;
        fs::write(dir.join("summary.txt"), summary.render())?;
    }
    Ok(BenchReport { rows, summary })
}

fn write_run_artifacts(dir: &Path, spec: &RunSpec, map: &GridMap, world: &World, run: &SimRun, stem: &str) -> anyhow::Result<()> {
    let Some(tr) = &run.trajectory else {
        return Ok(());
    };
    fs::write(dir.join("traces").join(format!("{stem}.csv")), trajectory_csv(tr))?;
    if !run.schedule.is_empty() {
        fs::write(dir.join("traces").join(format!("{stem}.sched.txt")), schedule_trace(&run.schedule))?;
    }
    if spec.snapshot {
        let layers = Layers {
            cells: None,
            network: Some(&world.graph),
            trace: Some(tr),
        };
        fs::write(dir.join("snapshots").join(format!("{stem}.svg")), render_snapshot(map, layers))?;
    }
    Ok(())
}

/// Mean makespan per planner for one (family, n) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MakespanRow {
    pub family: String,
    pub n: usize,
    pub mean: BTreeMap<String, f64>,
    pub dnf: BTreeMap<String, usize>,
    /// Percent by which the FRSP mean undercuts each baseline's mean.
    pub improvement: BTreeMap<String, f64>,
}

/// Mean per-call compute time of the FRSP planner for one (family, n) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ComputeRow {
    pub family: String,
    pub n: usize,
    pub search_s: f64,
    pub select_s: f64,
    pub allocate_s: f64,
    pub sum_s: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub makespan: Vec<MakespanRow>,
    pub compute: Vec<ComputeRow>,
}

/// `(a - f) / a` in percent.
pub fn improvement(baseline: f64, frsp: f64) -> f64 {
    (baseline - frsp) / baseline * 100.0
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Summary tables from result rows alone. Error rows are skipped; unfinished
/// runs count with their elapsed time.
pub fn summarize(rows: &[RunRow]) -> Summary {
    let mut groups: BTreeMap<(String, usize), Vec<&RunRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.status != "error") {
        groups.entry((r.family.clone(), r.n)).or_default().push(r);
    }
    let mut s = Summary::default();
    for ((family, n), rs) in groups {
        let mut by_planner: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut dnf: BTreeMap<String, usize> = BTreeMap::new();
        for r in &rs {
            by_planner.entry(r.planner.clone()).or_default().push(r.makespan);
            *dnf.entry(r.planner.clone()).or_default() += usize::from(r.dnf);
        }
        let means: BTreeMap<String, f64> = by_planner.iter().map(|(k, v)| (k.clone(), mean(v))).collect();
        let mut imp = BTreeMap::new();
        if let Some(&f) = means.get("frsp") {
            for (k, &a) in &means {
                if k != "frsp" {
                    imp.insert(k.clone(), improvement(a, f));
                }
            }
        }
        s.makespan.push(MakespanRow {
            family: family.clone(),
            n,
            mean: means,
            dnf,
            improvement: imp,
        });

        let frsp: Vec<&&RunRow> = rs.iter().filter(|r| r.planner == "frsp").collect();
        if !frsp.is_empty() {
            let col = |f: fn(&RunRow) -> f64| mean(&frsp.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (search_s, select_s, allocate_s) = (col(|r| r.search_s), col(|r| r.select_s), col(|r| r.allocate_s));
            s.compute.push(ComputeRow {
                family,
                n,
                search_s,
                select_s,
                allocate_s,
                sum_s: search_s + select_s + allocate_s,
                runs: frsp.len(),
            });
        }
    }
    s
}

impl Summary {
    pub fn render(&self) -> String {
        let mut out = String::from("Mean makespan (s)\n");
        let order: Vec<&str> = PlannerKind::ALL.iter().map(|p| p.as_str()).collect();
        let _ = write!(out, "{:<8} {:>5}", "family", "n");
        for p in &order {
            let _ = write!(out, " {p:>9}");
        }
        for p in order.iter().filter(|p| **p != "frsp") {
            let _ = write!(out, " {:>10}", format!("vs {p}"));
        }
        out.push('\n');
        for r in &self.makespan {
            let _ = write!(out, "{:<8} {:>5}", r.family, r.n);
            for p in &order {
                match r.mean.get(*p) {
                    Some(m) => {
                        let mark = if r.dnf.get(*p).copied().unwrap_or(0) > 0 { "*" } else { " " };
                        let _ = write!(out, " {:>8.2}{mark}", m);
                    }
                    None => {
                        let _ = write!(out, " {:>9}", "-");
                    }
                }
            }
            for p in order.iter().filter(|p| **p != "frsp") {
                match r.improvement.get(*p) {
                    Some(v) => {
                        let _ = write!(out, " {:>9.2}%", v);
                    }
                    None => {
                        let _ = write!(out, " {:>10}", "-");
                    }
                }
            }
            out.push('\n');
        }
        if self.makespan.iter().any(|r| r.dnf.values().any(|&d| d > 0)) {
            out.push_str("(* some runs unfinished)\n");
        }
        out.push_str("\nFRSP compute time per call (s)\n");
        let _ = writeln!(
            out,
            "{:<8} {:>5} {:>10} {:>10} {:>10} {:>10}",
            "family", "n", "search", "select", "allocate", "sum"
        );
        for r in &self.compute {
            let _ = writeln!(
                out,
                "{:<8} {:>5} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
                r.family, r.n, r.search_s, r.select_s, r.allocate_s, r.sum_s
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(family: &str, planner: &str, n: usize, makespan: f64) -> RunRow {
        RunRow {
            map: format!("{family}-1"),
            family: family.into(),
            map_seed: 1,
            seed: 0,
            planner: planner.into(),
            n,
            status: "completed".into(),
            makespan,
            arrived: n,
            dnf: false,
            min_distance: 0.4,
            min_clearance: 0.3,
            penetrations: 0,
            sched_calls: 2,
            search_s: 0.5,
            select_s: 0.25,
            allocate_s: 0.125,
            total_s: 0.875,
            stranded: 0,
            reroutes: 0,
            incumbent_calls: 0,
            fallback_calls: 0,
            mean_path_length: 50.0,
            error: String::new(),
        }
    }

    #[test]
    fn improvement_formula() {
        assert!((improvement(100.0, 90.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn summary_means_and_error_rows() {
        let mut bad = row("forest", "astar", 10, 0.0);
        bad.status = "error".into();
        let rows = vec![
            row("forest", "frsp", 10, 90.0),
            row("forest", "frsp", 10, 92.0),
            row("forest", "astar", 10, 100.0),
            row("forest", "astar", 10, 100.0),
            bad,
        ];
        let s = summarize(&rows);
        assert_eq!(s.makespan.len(), 1);
        let r = &s.makespan[0];
        assert_eq!(r.mean["frsp"], 91.0);
        assert_eq!(r.mean["astar"], 100.0);
        assert!((r.improvement["astar"] - 9.0).abs() < 1e-12);
        assert_eq!(s.compute[0].sum_s, 0.875);
        assert_eq!(s.compute[0].runs, 2);
        assert!(s.render().contains("9.00%"));
    }

    #[test]
    fn empty_lists_are_rejected() {
        let spec = RunSpec {
            maps: vec![],
            robot_counts: vec![10],
            planners: vec![PlannerKind::Frsp],
            repetitions: 1,
            output_dir: None,
            timing: false,
            trace: false,
            snapshot: false,
            sim: SimConfig::default(),
        };
        assert!(spec.validate().is_err());
        let spec = RunSpec {
            maps: vec![MapSource::Generated(MapGenConfig::desk_forest(1))],
            robot_counts: vec![0],
            ..spec
        };
        assert!(spec.validate().is_err());
    }
}
