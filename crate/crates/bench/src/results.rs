//! Results CSV: one row per run.
//!
//! | column | meaning |
//! |---|---|
//! | `map` | map label, `forest-1` for generated maps or the file stem |
//! | `family` | `forest`, `maze` or `file` |
//! | `map_seed` | generator seed, 0 for files |
//! | `seed` | robot placement seed |
//! | `planner` | `frsp`, `astar`, `greedy` or `runcost` |
//! | `n` | robot count |
//! | `status` | `completed`, `dnf`, `safety` or `error` |
//! | `makespan` | seconds until the last arrival, or elapsed time when unfinished |
//! | `arrived` | robots that reached their goal |
//! | `dnf` | `true` unless every robot arrived |
//! | `min_distance` | closest robot pair over the run, meters |
//! | `min_clearance` | closest approach of a robot center to an obstacle, meters |
//! | `penetrations` | robot-steps inside an obstacle |
//! | `sched_calls` | planner calls |
//! | `search_s`, `select_s`, `allocate_s` | mean seconds per call, 0 with timing off |
//! | `total_s` | their sum |
//! | `stranded` | robot-calls without a candidate path |
//! | `reroutes` | plan switches |
//! | `incumbent_calls`, `fallback_calls` | calls where the solver stopped early |
//! | `mean_path_length` | meters travelled, averaged over robots |
//! | `error` | message for `error` rows, empty otherwise |

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub map: String,
    pub family: String,
    pub map_seed: u64,
    pub seed: u64,
    pub planner: String,
    pub n: usize,
    pub status: String,
    pub makespan: f64,
    pub arrived: usize,
    pub dnf: bool,
    pub min_distance: f64,
    pub min_clearance: f64,
    pub penetrations: usize,
    pub sched_calls: usize,
    pub search_s: f64,
    pub select_s: f64,
    pub allocate_s: f64,
    pub total_s: f64,
    pub stranded: usize,
    pub reroutes: usize,
    pub incumbent_calls: usize,
    pub fallback_calls: usize,
    pub mean_path_length: f64,
    pub error: String,
}

impl RunRow {
    pub fn is_safety_failure(&self) -> bool {
        self.status == "safety"
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[RunRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> csv::Result<Vec<RunRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn save_rows(path: &Path, rows: &[RunRow]) -> csv::Result<()> {
    write_rows(File::create(path)?, rows)
}

pub fn load_rows(path: &Path) -> csv::Result<Vec<RunRow>> {
    read_rows(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn row(planner: &str, makespan: f64) -> RunRow {
        RunRow {
            map: "forest-1".into(),
            family: "forest".into(),
            map_seed: 1,
            seed: 0,
            planner: planner.into(),
            n: 10,
            status: "completed".into(),
            makespan,
            arrived: 10,
            dnf: false,
            min_distance: 0.43,
            min_clearance: 0.22,
            penetrations: 0,
            sched_calls: 3,
            search_s: 0.1 + 0.2,
            select_s: 0.0,
            allocate_s: 1e-5,
            total_s: 0.3,
            stranded: 0,
            reroutes: 1,
            incumbent_calls: 0,
            fallback_calls: 0,
            mean_path_length: 52.5,
            error: String::new(),
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = vec![row("frsp", 25.37), row("astar", f64::INFINITY)];
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("map,family,map_seed,seed,planner,n,status,makespan"));
        assert_eq!(read_rows(&buf[..]).unwrap(), rows);
    }
}
