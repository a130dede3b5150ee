//! Trajectory logs (`t,robot,x,y` per robot and sample) and the per-call
//! schedule trace.

use std::fmt::Write as _;

use flowsched_core::sim::{ScheduleRecord, Trajectory};
use flowsched_core::Vec2;

pub fn trajectory_csv(tr: &Trajectory) -> String {
    let mut out = String::from("t,robot,x,y\n");
    for (t, frame) in tr.times.iter().zip(&tr.frames) {
        for (i, p) in frame.iter().enumerate() {
            let _ = writeln!(out, "{t},{i},{},{}", p.x, p.y);
        }
    }
    out
}

#[derive(Debug, thiserror::Error)]
#[error("trajectory line {line}: {msg}")]
pub struct TraceError {
    pub line: usize,
    pub msg: &'static str,
}

/// Inverse of [`trajectory_csv`]. Samples must be grouped by time with robots
/// in order.
pub fn parse_trajectory(text: &str) -> Result<Trajectory, TraceError> {
    let mut tr = Trajectory::default();
    for (i, raw) in text.lines().enumerate().skip(1) {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 4 {
            return Err(TraceError { line, msg: "expected 4 fields" });
        }
        let bad = |_| TraceError { line, msg: "bad number" };
        let t: f64 = f[0].parse().map_err(bad)?;
        let robot: usize = f[1].parse().map_err(|_| TraceError { line, msg: "bad robot id" })?;
        let p = Vec2::new(f[2].parse().map_err(bad)?, f[3].parse().map_err(bad)?);
        if robot == 0 {
            tr.times.push(t);
            tr.frames.push(Vec::new());
        }
        match tr.frames.last_mut() {
            Some(frame) if frame.len() == robot => frame.push(p),
            _ => return Err(TraceError { line, msg: "robots out of order" }),
        }
    }
    if tr.times.len() > 1 {
        tr.period = tr.times[1] - tr.times[0];
    }
    Ok(tr)
}

/// One line per call: time, robots, candidates, objective, status and the
/// search / select / allocate seconds.
pub fn schedule_trace(records: &[ScheduleRecord]) -> String {
    let mut out = String::from("t robots candidates objective status search_s select_s allocate_s\n");
    for r in records {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            r.time,
            r.robots,
            r.candidates,
            r.objective,
            r.status.as_str(),
            r.search_s,
            r.select_s,
            r.allocate_s
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_round_trip() {
        let tr = Trajectory {
            period: 0.1,
            times: vec![0.0, 0.1],
            frames: vec![
                vec![Vec2::new(1.0, 2.0), Vec2::new(3.0, 4.0)],
                vec![Vec2::new(1.5, 2.25), Vec2::new(3.0, 4.125)],
            ],
        };
        let back = parse_trajectory(&trajectory_csv(&tr)).unwrap();
        assert_eq!(back, tr);
        assert!(parse_trajectory("t,robot,x,y\n0,1,0,0\n").is_err());
    }
}
