//! Flow-inspired real-time scheduling for robot swarms crossing obstacle-rich
//! 2-D maps.
//!
//! The pipeline is:
//!
//! 1. [`gridmap`]: occupancy grids, plus forest and maze generators.
//! 2. [`decomposition`]: Boustrophedon cells and their shared boundaries.
//! 3. [`network`]: passage positions, capacity-annotated nodes and links.
//! 4. [`scheduler`] and [`miqp`]: per-call path set search, congestion-aware
//!    path selection and greedy waypoint allocation.
//! 5. [`motion`]: single-integrator robots under reciprocal velocity obstacles.
//! 6. [`sim`] and [`baselines`]: the closed-loop experiment and the
//!    comparison planners.
//!
//! The crate is `no_std` (it needs `alloc`). Wall-clock measurement is
//! injected through [`clock::Clock`] so the std companion crate decides how
//! time is read.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod clock;
pub mod decomposition;
pub mod geom;
pub mod gridmap;
pub mod miqp;
pub mod motion;
pub mod network;
pub mod scheduler;
pub mod sim;

pub use clock::{Clock, NullClock};
pub use decomposition::{decompose, BoundarySegment, Cell, CellId, CellSet};
pub use geom::Vec2;
pub use gridmap::{GridMap, MapFamily, MapGenConfig};
pub use miqp::{Assignment, BinaryQuadraticProgram, SolveStatus};
pub use network::{build_network, Link, LinkId, NetGraph, NodeId, PathNode, PathPos, PosId};
pub use scheduler::{ControlPlan, PathCandidate, RobotSchedState, Weights};
pub use sim::{Metrics, PlannerKind, SimConfig};
