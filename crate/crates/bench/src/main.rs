use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use flowsched::bench::run_benchmark;
use flowsched::config::{parse_size, split_list, Settings};
use flowsched::core::PlannerKind;

/// Runs swarm crossing experiments and writes results.csv and summary.txt.
#[derive(Debug, Parser)]
#[command(name = "flowsched", version)]
struct Cli {
    /// Map files, comma separated.
    #[arg(long, value_delimiter = ',')]
    map: Option<Vec<PathBuf>>,
    /// Generated map families (forest, maze), comma separated.
    #[arg(long, value_delimiter = ',')]
    gen: Option<Vec<String>>,
    /// Map generator seeds.
    #[arg(long, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    /// Generated map size in meters, `WxH`.
    #[arg(long, value_parser = parse_size)]
    size: Option<(f64, f64)>,
    /// Planners: frsp, astar, greedy, runcost.
    #[arg(long, value_delimiter = ',')]
    planner: Option<Vec<PlannerKind>>,
    /// Swarm sizes.
    #[arg(long, value_delimiter = ',')]
    robots: Option<Vec<usize>>,
    /// Robot placement seeds per (map, size): 0..reps.
    #[arg(long)]
    reps: Option<u32>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write SVG snapshots.
    #[arg(long)]
    snapshot: bool,
    /// Write trajectory and schedule traces.
    #[arg(long)]
    trace: bool,
    /// Record zero compute times so results are reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
    /// `key = value` settings file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Cli {
    fn settings(self) -> anyhow::Result<Settings> {
        let file = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        let gen = self
            .gen
            .map(|g| g.iter().flat_map(|s| split_list(s).map(String::from).collect::<Vec<_>>()).collect());
        Ok(file.merged(Settings {
            map: self.map,
            gen,
            seed: self.seed,
            size: self.size,
            planner: self.planner,
            robots: self.robots,
            reps: self.reps,
            out: self.out,
            snapshot: self.snapshot.then_some(true),
            trace: self.trace.then_some(true),
            timing: self.no_timing.then_some(false),
        }))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = cli.settings().and_then(|s| Ok(s.into_spec()?)).and_then(|spec| {
        let report = run_benchmark(&spec)?;
        print!("{}", report.summary.render());
        Ok(report)
    });
    match result {
        Ok(report) => {
            let errors = report.rows.iter().filter(|r| r.status == "error").count();
            if errors > 0 {
                eprintln!("{errors} run(s) failed to start, see the error column");
            }
            if report.any_safety_failure() {
                eprintln!("safety violation in at least one run");
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
