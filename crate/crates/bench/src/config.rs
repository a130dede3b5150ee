//! Run settings shared by the command line and `key = value` config files.
//!
//! ```text
//! # comments start with '#'
//! gen = forest,maze
//! seed = 1,2,3
//! robots = 10,50,100
//! planner = frsp,astar
//! reps = 3
//! out = results
//! ```
//!
//! Keys match the long command-line flags. Values given on the command line
//! replace the file's.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use flowsched_core::gridmap::MapGenConfig;
use flowsched_core::{PlannerKind, SimConfig};

use crate::bench::{MapSource, RunSpec};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{key}: {msg}")]
    Value { key: &'static str, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub map: Option<Vec<PathBuf>>,
    pub gen: Option<Vec<String>>,
    pub seed: Option<Vec<u64>>,
    pub size: Option<(f64, f64)>,
    pub planner: Option<Vec<PlannerKind>>,
    pub robots: Option<Vec<usize>>,
    pub reps: Option<u32>,
    pub out: Option<PathBuf>,
    pub snapshot: Option<bool>,
    pub trace: Option<bool>,
    pub timing: Option<bool>,
}

pub fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

fn list<T: FromStr>(key: &'static str, v: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    split_list(v)
        .map(|x| {
            x.parse().map_err(|e: T::Err| ConfigError::Value {
                key,
                msg: format!("`{x}`: {e}"),
            })
        })
        .collect()
}

/// `WxH` in meters.
pub fn parse_size(s: &str) -> Result<(f64, f64), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("`{s}` is not WxH"))?;
    let w: f64 = w.trim().parse().map_err(|e| format!("`{w}`: {e}"))?;
    let h: f64 = h.trim().parse().map_err(|e| format!("`{h}`: {e}"))?;
    if !(w > 0.0 && h > 0.0) {
        return Err(format!("`{s}` must be positive"));
    }
    Ok((w, h))
}

fn boolean(key: &'static str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::Value {
            key,
            msg: format!("`{v}` is not a boolean"),
        }),
    }
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ConfigError::Parse { line: i + 1, msg };
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got `{line}`")))?;
            let v = v.trim();
            match k.trim() {
                "map" => s.map = Some(split_list(v).map(PathBuf::from).collect()),
                "gen" => s.gen = Some(split_list(v).map(String::from).collect()),
                "seed" => s.seed = Some(list("seed", v)?),
                "size" => {
                    s.size = Some(parse_size(v).map_err(|msg| ConfigError::Value { key: "size", msg })?)
                }
                "planner" => s.planner = Some(list("planner", v)?),
                "robots" => s.robots = Some(list("robots", v)?),
                "reps" => {
                    s.reps = Some(v.parse().map_err(|e| ConfigError::Value {
                        key: "reps",
                        msg: format!("`{v}`: {e}"),
                    })?)
                }
                "out" => s.out = Some(PathBuf::from(v)),
                "snapshot" => s.snapshot = Some(boolean("snapshot", v)?),
                "trace" => s.trace = Some(boolean("trace", v)?),
                "timing" => s.timing = Some(boolean("timing", v)?),
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Fields set in `over` win.
    pub fn merged(self, over: Settings) -> Settings {
        Settings {
            map: over.map.or(self.map),
            gen: over.gen.or(self.gen),
            seed: over.seed.or(self.seed),
            size: over.size.or(self.size),
            planner: over.planner.or(self.planner),
            robots: over.robots.or(self.robots),
            reps: over.reps.or(self.reps),
            out: over.out.or(self.out),
            snapshot: over.snapshot.or(self.snapshot),
            trace: over.trace.or(self.trace),
            timing: over.timing.or(self.timing),
        }
    }

    /// Defaults: forest maps with seed 1, 10 robots, all planners, one rep.
    pub fn into_spec(self) -> Result<RunSpec, ConfigError> {
        let mut maps: Vec<MapSource> = self.map.unwrap_or_default().into_iter().map(MapSource::File).collect();
        let gens = match (&self.gen, maps.is_empty()) {
            (Some(g), _) => g.clone(),
            (None, true) => vec!["forest".into()],
            (None, false) => vec![],
        };
        let seeds = self.seed.unwrap_or_else(|| vec![1]);
        for g in &gens {
            for &seed in &seeds {
                let mut cfg = match g.to_ascii_lowercase().as_str() {
                    "forest" => MapGenConfig::desk_forest(seed),
                    "maze" => MapGenConfig::desk_maze(seed),
                    _ => {
                        return Err(ConfigError::Value {
                            key: "gen",
                            msg: format!("unknown family `{g}` (expected forest or maze)"),
                        })
                    }
                };
                if let Some(size) = self.size {
                    cfg = MapGenConfig::with_size(cfg.family, seed, size);
                }
                maps.push(MapSource::Generated(cfg));
            }
        }
        Ok(RunSpec {
            maps,
            robot_counts: self.robots.unwrap_or_else(|| vec![10]),
            planners: self.planner.unwrap_or_else(|| PlannerKind::ALL.to_vec()),
            repetitions: self.reps.unwrap_or(1),
            output_dir: self.out,
            timing: self.timing.unwrap_or(true),
            trace: self.trace.unwrap_or(false),
            snapshot: self.snapshot.unwrap_or(false),
            sim: SimConfig::default(),
        })
    }
}
