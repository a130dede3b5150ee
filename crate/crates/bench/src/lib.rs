//! Std companion to `flowsched-core`: map and result files, dumps, SVG
//! snapshots and the benchmark driver behind the `flowsched` binary.

pub use flowsched_core as core;

pub mod bench;
pub mod clock;
pub mod config;
pub mod dump;
pub mod mapfile;
pub mod results;
pub mod svg;
pub mod trace;
