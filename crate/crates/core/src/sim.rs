//! Closed-loop experiment: motion at `avoid_hz`, planning at `sched_hz`.
//!
//! Planner wall time is measured through a [`Clock`] but never consumes
//! simulated time. Robots that arrive stay in the avoidance loop holding
//! their goal point, so later robots can still push past them.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::{self, BaselineError};
use crate::clock::Clock;
use crate::decomposition::{decompose, CellId, CellSet, DecompositionError};
use crate::geom::{floor, Rect, Vec2};
use crate::gridmap::GridMap;
use crate::miqp::{SolveLimits, SolveStatus};
use crate::motion::{integrate, Avoidance, MotionLimits, ObstacleField, RobotState, Steering};
use crate::network::{build_network, NetGraph, NetworkError, NetworkParams};
use crate::scheduler::{
    adopt_plan, allocate_positions, effective_cell, on_waypoint_reached, ControlPlan,
    RobotInput, RobotSchedState, SchedError, Scheduler, Weights,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlannerKind {
    Frsp,
    Astar,
    Greedy,
    RunCost,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 4] = [
        PlannerKind::Frsp,
        PlannerKind::Astar,
        PlannerKind::Greedy,
        PlannerKind::RunCost,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlannerKind::Frsp => "frsp",
            PlannerKind::Astar => "astar",
            PlannerKind::Greedy => "greedy",
            PlannerKind::RunCost => "runcost",
        }
    }

    fn uses_scheduler(self) -> bool {
        matches!(self, PlannerKind::Frsp | PlannerKind::RunCost)
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown planner `{0}` (expected frsp, astar, greedy or runcost)")]
pub struct UnknownPlanner(pub String);

impl FromStr for PlannerKind {
    type Err = UnknownPlanner;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlannerKind::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownPlanner(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Integration step, seconds.
    pub h: f64,
    pub avoid_hz: u32,
    pub sched_hz: u32,
    /// Scheduler weights for [`PlannerKind::Frsp`]; RunCost always uses
    /// `(0, 0, 1)`.
    pub weights: Weights,
    pub limits: MotionLimits,
    pub alpha: f64,
    pub n_b: u32,
    pub planner: PlannerKind,
    /// `None` means ten times the slowest robot's straight-line time.
    pub max_sim_time: Option<f64>,
    /// Shifts the start and goal lattices inside their bands.
    pub seed: u64,
    pub solver: SolveLimits,
    /// Waypoint and goal tolerance in units of `r_min`.
    pub arrival_factor: f64,
    /// Runs abort when two robots come closer than this many `r_min`.
    pub safety_factor: f64,
    /// Position log period, seconds.
    pub trace_period: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            h: 0.01,
            avoid_hz: 100,
            sched_hz: 1,
            weights: Weights::FRSP,
            limits: MotionLimits::default(),
            alpha: 2.0,
            n_b: 4,
            planner: PlannerKind::Frsp,
            max_sim_time: None,
            seed: 0,
            solver: SolveLimits::default(),
            arrival_factor: 1.5,
            safety_factor: 0.9,
            trace_period: None,
        }
    }
}

impl SimConfig {
    pub fn arrival_tolerance(&self) -> f64 {
        self.arrival_factor * self.limits.r_min
    }

    pub fn network_params(&self) -> NetworkParams {
        NetworkParams {
            alpha: self.alpha,
            r_min: self.limits.r_min,
            n_b: self.n_b,
        }
    }

    fn steps_per_call(&self) -> u64 {
        (self.avoid_hz / self.sched_hz).max(1) as u64
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self.h > 0.0
            && self.avoid_hz > 0
            && self.sched_hz > 0
            && self.avoid_hz >= self.sched_hz
            && (self.h * self.avoid_hz as f64 - 1.0).abs() < 1e-9
            && self.limits.is_valid()
            && self.arrival_factor > 0.0
            && self.safety_factor > 0.0
            && self.limits.obstacle_time_horizon > self.h;
        if ok {
            Ok(())
        } else {
            Err(SimError::Config("inconsistent rates or limits"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(&'static str),
    #[error("band holds {capacity} lattice points, {requested} requested")]
    BandCapacity { capacity: usize, requested: usize },
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("robot {robot}: {source}")]
    Planning {
        robot: usize,
        #[source]
        source: BaselineError,
    },
    #[error(transparent)]
    Scheduler(#[from] SchedError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    /// Not every robot arrived before `max_sim_time`.
    Dnf,
    SafetyViolation,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::Dnf => "dnf",
            Outcome::SafetyViolation => "safety",
        }
    }
}

/// What tripped a safety abort.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyDiagnostic {
    pub time: f64,
    /// Offending robot pair, or `(robot, robot)` for an obstacle hit.
    pub robots: (usize, usize),
    pub distance: f64,
    pub positions: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub outcome: Outcome,
    /// Time the last robot arrived; the elapsed time for unfinished runs.
    pub makespan: f64,
    pub arrived: usize,
    pub sched_calls: usize,
    /// Wall-clock sums over all planner calls.
    pub search_s: f64,
    pub select_s: f64,
    pub allocate_s: f64,
    pub min_pair_distance: f64,
    pub min_obstacle_clearance: f64,
    pub penetrations: usize,
    /// Robot-calls left without a candidate path.
    pub stranded: usize,
    pub fallback_calls: usize,
    pub incumbent_calls: usize,
    pub reroutes: usize,
    pub path_length: Vec<f64>,
    pub arrival_time: Vec<f64>,
    pub violation: Option<SafetyDiagnostic>,
}

impl Metrics {
    fn empty(n: usize) -> Self {
        Metrics {
            outcome: Outcome::Completed,
            makespan: 0.0,
            arrived: 0,
            sched_calls: 0,
            search_s: 0.0,
            select_s: 0.0,
            allocate_s: 0.0,
            min_pair_distance: f64::INFINITY,
            min_obstacle_clearance: f64::INFINITY,
            penetrations: 0,
            stranded: 0,
            fallback_calls: 0,
            incumbent_calls: 0,
            reroutes: 0,
            path_length: vec![0.0; n],
            arrival_time: vec![f64::NAN; n],
            violation: None,
        }
    }

    fn per_call(&self, total: f64) -> f64 {
        if self.sched_calls == 0 {
            0.0
        } else {
            total / self.sched_calls as f64
        }
    }

    pub fn mean_search_s(&self) -> f64 {
        self.per_call(self.search_s)
    }

    pub fn mean_select_s(&self) -> f64 {
        self.per_call(self.select_s)
    }

    pub fn mean_allocate_s(&self) -> f64 {
        self.per_call(self.allocate_s)
    }

    pub fn is_safe(&self, r_min: f64, safety_factor: f64) -> bool {
        self.penetrations == 0
            && self.violation.is_none()
            && !(self.min_pair_distance < safety_factor * r_min)
    }
}

/// One line of the schedule trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleRecord {
    pub time: f64,
    pub robots: usize,
    pub candidates: usize,
    pub objective: f64,
    pub status: SolveStatus,
    pub search_s: f64,
    pub select_s: f64,
    pub allocate_s: f64,
    /// Remaining network distance summed over planned robots after the call.
    pub remaining: f64,
    pub reroutes: usize,
    /// Robots before the network, on a link, in the goal cell, arrived.
    pub phases: [usize; 4],
}

/// Positions of every robot sampled at a fixed period.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub period: f64,
    pub times: Vec<f64>,
    pub frames: Vec<Vec<Vec2>>,
}

#[derive(Debug, Clone)]
pub struct SimRun {
    pub metrics: Metrics,
    pub schedule: Vec<ScheduleRecord>,
    pub trajectory: Option<Trajectory>,
    pub starts: Vec<Vec2>,
    pub goals: Vec<Vec2>,
}

/// Decomposition and network for a map, built once per run.
#[derive(Debug, Clone)]
pub struct World {
    pub map: GridMap,
    pub cells: CellSet,
    pub graph: NetGraph,
    pub field: ObstacleField,
}

impl World {
    pub fn build(map: &GridMap, cfg: &SimConfig) -> Result<Self, SimError> {
        let cells = decompose(map)?;
        let graph = build_network(&cells, cfg.network_params())?;
        let field = ObstacleField::new(map, &cfg.limits);
        Ok(World {
            map: map.clone(),
            cells,
            graph,
            field,
        })
    }
}

/// Start and goal bands used by the generators: the bottom and top
/// `min(0.15 h, 8)` meters, full width.
pub fn default_bands(map: &GridMap) -> (Rect, Rect) {
    let b = map.bounds();
    let band = (b.height() * 0.15).min(8.0);
    (
        Rect::new(b.min.x, b.min.y, b.max.x, b.min.y + band),
        Rect::new(b.min.x, b.max.y - band, b.max.x, b.max.y),
    )
}

/// `n` lattice points with spacing `spacing`, filled row by row from the
/// band's top edge. Partial rows are centered. `jitter` in `[0, 1)^2` shifts
/// the lattice by up to one spacing along each axis. Points that are blocked
/// or closer than `clearance` to an obstacle are skipped.
pub fn place_robots(
    map: &GridMap,
    field: &ObstacleField,
    n: usize,
    band: &Rect,
    spacing: f64,
    clearance: f64,
    jitter: (f64, f64),
) -> Result<Vec<Vec2>, SimError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let margin = (spacing * 0.5).max(clearance);
    let (lo_x, hi_x) = (band.min.x + margin, band.max.x - margin);
    let (lo_y, hi_y) = (band.min.y + margin, band.max.y - margin);
    if hi_x < lo_x || hi_y < lo_y {
        return Err(SimError::BandCapacity {
            capacity: 0,
            requested: n,
        });
    }
    let xs: Vec<f64> = (0..)
        .map(|c| lo_x + (c as f64 + jitter.0) * spacing)
        .take_while(|&x| x <= hi_x + 1e-9)
        .collect();
    let mut out = Vec::with_capacity(n);
    let mut r = 0;
    loop {
        let y = hi_y - (r as f64 + jitter.1) * spacing;
        if y < lo_y - 1e-9 {
            break;
        }
        r += 1;
        let row: Vec<Vec2> = xs
            .iter()
            .map(|&x| Vec2::new(x, y))
            .filter(|&p| map.is_free(p) && field.clearance(p) >= clearance)
            .collect();
        let take = row.len().min(n - out.len());
        if take == 0 {
            continue;
        }
        // center the occupied block when the row is partial
        let start = (row.len() - take) / 2;
        out.extend_from_slice(&row[start..start + take]);
        if out.len() == n {
            return Ok(out);
        }
    }
    Err(SimError::BandCapacity {
        capacity: out.len(),
        requested: n,
    })
}

/// Largest goal lattice spacing, as a multiple of the start spacing.
const GOAL_SPREAD: f64 = 2.0;

/// Steps between refreshes of the steering aim point.
const STEER_EVERY: u64 = 10;

/// Per-robot plan bookkeeping.
enum Route {
    Network {
        state: RobotSchedState,
        plan: ControlPlan,
    },
    Waypoints {
        points: Vec<Vec2>,
        next: usize,
    },
}

impl Route {
    fn target(&self, g: &NetGraph, goal: Vec2) -> Vec2 {
        match self {
            Route::Network { plan, .. } => plan.target(g),
            Route::Waypoints { points, next } => points.get(*next).copied().unwrap_or(goal),
        }
    }
}

fn remaining_distance(g: &NetGraph, pos: Vec2, plan: &ControlPlan) -> f64 {
    let mut d = 0.0;
    let mut cur = pos;
    for &p in &plan.path_pos {
        let q = g.pos(p).position;
        d += cur.distance(q);
        cur = q;
    }
    d + cur.distance(plan.final_goal)
}

/// Minimum distance over all pairs, by a sweep along x limited to `cap`.
fn min_pair(positions: &[Vec2], order: &mut Vec<usize>, cap: f64) -> (f64, usize, usize) {
    order.clear();
    order.extend(0..positions.len());
    order.sort_by(|&a, &b| positions[a].x.total_cmp(&positions[b].x).then(a.cmp(&b)));
    let mut best = (cap, usize::MAX, usize::MAX);
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if positions[j].x - positions[i].x >= best.0 {
                break;
            }
            let d = positions[i].distance(positions[j]);
            if d < best.0 {
                best = (d, i.min(j), i.max(j));
            }
        }
    }
    best
}

/// Runs one experiment on a prebuilt world with explicit start and goal
/// points. Robot `i` travels from `starts[i]` to `goals[i]`.
pub fn run_world(
    world: &World,
    starts: &[Vec2],
    goals: &[Vec2],
    cfg: &SimConfig,
    clock: &dyn Clock,
) -> Result<SimRun, SimError> {
    cfg.validate()?;
    if starts.len() != goals.len() {
        return Err(SimError::Config("start and goal counts differ"));
    }
    let n = starts.len();
    let g0 = &world.graph;
    let mut graph = g0.clone();
    let tol = cfg.arrival_tolerance();
    let lim = &cfg.limits;
    let mut metrics = Metrics::empty(n);
    let mut schedule = Vec::new();
    let mut trajectory = cfg.trace_period.map(|period| Trajectory {
        period,
        ..Trajectory::default()
    });
    if n == 0 {
        return Ok(SimRun {
            metrics,
            schedule,
            trajectory,
            starts: Vec::new(),
            goals: Vec::new(),
        });
    }

    let lower_bound = starts
        .iter()
        .zip(goals)
        .map(|(s, g)| s.distance(*g) / lim.v_max)
        .fold(0.0, f64::max);
    let max_time = cfg.max_sim_time.unwrap_or(10.0 * lower_bound).max(cfg.h);
    let max_steps = floor(max_time / cfg.h + 0.5) as u64;
    let per_call = cfg.steps_per_call();
    let trace_every = cfg
        .trace_period
        .map(|p| (floor(p / cfg.h + 0.5) as u64).max(1));

    let mut robots: Vec<RobotState> = starts
        .iter()
        .enumerate()
        .map(|(i, &p)| RobotState::at(i, p))
        .collect();
    let cell_of = |p: Vec2| world.cells.locate(p);
    let mut routes: Vec<Route> = Vec::with_capacity(n);
    match cfg.planner {
        PlannerKind::Astar => {
            for i in 0..n {
                let points = baselines::astar_plan(&world.map, starts[i], goals[i])
                    .map_err(|source| SimError::Planning { robot: i, source })?;
                routes.push(Route::Waypoints { points, next: 0 });
            }
        }
        PlannerKind::Frsp | PlannerKind::RunCost | PlannerKind::Greedy => {
            for i in 0..n {
                let start_cell = cell_of(starts[i]).ok_or(SimError::Config("start not free"))?;
                let goal_cell = cell_of(goals[i]).ok_or(SimError::Config("goal not free"))?;
                routes.push(Route::Network {
                    state: RobotSchedState::new(i, start_cell, goal_cell),
                    plan: ControlPlan::direct(goals[i]),
                });
            }
        }
    }
    if cfg.planner == PlannerKind::Greedy {
        assign_greedy(world, starts, goals, &mut routes, &mut metrics)?;
    }

    let weights = match cfg.planner {
        PlannerKind::RunCost => Weights::RUN_COST,
        _ => cfg.weights,
    };
    let mut scheduler = Scheduler::new(weights, cfg.solver);
    let mut avoidance = Avoidance::new();
    let mut order = Vec::new();
    let mut positions: Vec<Vec2> = starts.to_vec();
    let mut targets = vec![Vec2::ZERO; n];
    let mut arrived = vec![false; n];
    let mut steering = Steering::new();
    let mut aims = vec![(Vec2::new(f64::NAN, f64::NAN), Vec2::ZERO); n];
    let radius = lim.agent_radius();

    let (d0, _, _) = min_pair(&positions, &mut order, f64::INFINITY);
    metrics.min_pair_distance = d0;
    for &p in &positions {
        metrics.min_obstacle_clearance = metrics.min_obstacle_clearance.min(world.field.clearance(p));
    }
    if let Some(tr) = trajectory.as_mut() {
        tr.times.push(0.0);
        tr.frames.push(positions.clone());
    }

    let mut step: u64 = 0;
    loop {
        let now = step as f64 * cfg.h;
        if cfg.planner.uses_scheduler() && step % per_call == 0 {
            let rec = plan_call(
                &mut scheduler,
                &mut graph,
                &mut routes,
                &robots,
                goals,
                &arrived,
                now,
                clock,
                &mut metrics,
            )?;
            schedule.push(rec);
        }

        let resteer = step % STEER_EVERY == 0;
        for i in 0..n {
            let raw = if arrived[i] {
                goals[i]
            } else {
                routes[i].target(&graph, goals[i])
            };
            if resteer || raw != aims[i].0 {
                let aim = steering.aim(&world.map, positions[i], raw, 0.5 * radius);
                aims[i] = (raw, aim);
            }
            targets[i] = aims[i].1;
        }
        let vel = avoidance.step(&robots, &targets, &world.field, lim, cfg.h);
        for i in 0..n {
            let next = integrate(&robots[i], vel[i], cfg.h);
            metrics.path_length[i] += next.position.distance(robots[i].position);
            robots[i] = RobotState {
                arrived: arrived[i],
                ..next
            };
            positions[i] = next.position;
        }
        step += 1;
        let t = step as f64 * cfg.h;

        // safety
        let (d, a, b) = min_pair(&positions, &mut order, metrics.min_pair_distance);
        if d < metrics.min_pair_distance {
            metrics.min_pair_distance = d;
        }
        let mut hit = None;
        for (i, &p) in positions.iter().enumerate() {
            let c = world.field.clearance(p);
            metrics.min_obstacle_clearance = metrics.min_obstacle_clearance.min(c);
            if !world.map.is_free(p) {
                metrics.penetrations += 1;
                hit.get_or_insert((i, c));
            }
        }
        let unsafe_pair = a != usize::MAX && d < cfg.safety_factor * lim.r_min;
        if unsafe_pair || hit.is_some() {
            let (robots_hit, distance) = match hit {
                Some((i, c)) if !unsafe_pair => ((i, i), c),
                _ => ((a, b), d),
            };
            log::warn!(
                "safety violation at t={:.2}s: robots {:?} at {:.3} m",
                t,
                robots_hit,
                distance
            );
            metrics.violation = Some(SafetyDiagnostic {
                time: t,
                robots: robots_hit,
                distance,
                positions: positions.clone(),
            });
            metrics.outcome = Outcome::SafetyViolation;
            metrics.makespan = t;
            break;
        }

        // waypoint events and arrivals
        for i in 0..n {
            let p = positions[i];
            match &mut routes[i] {
                Route::Network { state, plan } => {
                    let physical = cell_of(p);
                    state.c_now = effective_cell(physical, state.d_pre, &graph, state.c_now);
                    while let Some(&head) = plan.path_nodes.first() {
                        let reached = graph.pos(plan.path_pos[0]).position.distance(p) <= tol
                            || physical == Some(graph.node(head).above);
                        if !reached {
                            break;
                        }
                        on_waypoint_reached(state, plan, &graph, physical)?;
                    }
                }
                Route::Waypoints { points, next } => {
                    while *next + 1 < points.len() && points[*next].distance(p) <= tol {
                        *next += 1;
                    }
                }
            }
            if !arrived[i] && p.distance(goals[i]) <= tol {
                arrived[i] = true;
                metrics.arrival_time[i] = t;
                metrics.arrived += 1;
            }
        }

        if let (Some(tr), Some(every)) = (trajectory.as_mut(), trace_every) {
            if step % every == 0 {
                tr.times.push(t);
                tr.frames.push(positions.clone());
            }
        }

        if metrics.arrived == n {
            metrics.outcome = Outcome::Completed;
            metrics.makespan = metrics.arrival_time.iter().copied().fold(0.0, f64::max);
            break;
        }
        if step >= max_steps {
            metrics.outcome = Outcome::Dnf;
            metrics.makespan = t;
            break;
        }
    }

    Ok(SimRun {
        metrics,
        schedule,
        trajectory,
        starts: starts.to_vec(),
        goals: goals.to_vec(),
    })
}

fn assign_greedy(
    world: &World,
    starts: &[Vec2],
    goals: &[Vec2],
    routes: &mut [Route],
    metrics: &mut Metrics,
) -> Result<(), SimError> {
    let g = &world.graph;
    // robots sharing start and goal cells share one path set
    let mut groups: Vec<((CellId, CellId), Vec<usize>)> = Vec::new();
    for (i, r) in routes.iter().enumerate() {
        if let Route::Network { state, .. } = r {
            let key = (state.start_cell, state.goal_cell);
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, v)) => v.push(i),
                None => groups.push((key, vec![i])),
            }
        }
    }
    for ((from, to), members) in groups {
        if from == to {
            continue;
        }
        let centroid = |pts: &mut dyn Iterator<Item = Vec2>| {
            let (mut s, mut c) = (Vec2::ZERO, 0.0);
            for p in pts {
                s += p;
                c += 1.0;
            }
            s / c
        };
        let entry = centroid(&mut members.iter().map(|&i| starts[i]));
        let exit = centroid(&mut members.iter().map(|&i| goals[i]));
        let paths = baselines::greedy_paths(g, from, to, entry, exit);
        if paths.is_empty() {
            metrics.stranded += members.len();
            continue;
        }
        let member_starts: Vec<Vec2> = members.iter().map(|&i| starts[i]).collect();
        let picks = baselines::greedy_assign(g, &paths, &member_starts);
        for (k, &i) in members.iter().enumerate() {
            let nodes = paths[picks[k]].nodes.clone();
            if let Route::Network { state, plan } = &mut routes[i] {
                *plan = ControlPlan {
                    path_pos: allocate_positions(&nodes, g, starts[i]),
                    path_nodes: nodes,
                    final_goal: goals[i],
                };
                adopt_plan(state, plan, g);
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn plan_call(
    scheduler: &mut Scheduler,
    graph: &mut NetGraph,
    routes: &mut [Route],
    robots: &[RobotState],
    goals: &[Vec2],
    arrived: &[bool],
    now: f64,
    clock: &dyn Clock,
    metrics: &mut Metrics,
) -> Result<ScheduleRecord, SimError> {
    let mut phases = [0usize; 4];
    let mut links = Vec::new();
    let mut active = Vec::new();
    for (i, r) in routes.iter().enumerate() {
        let Route::Network { state, .. } = r else {
            continue;
        };
        let phase = if arrived[i] {
            3
        } else if state.in_goal_cell() {
            2
        } else if state.link.is_some() {
            1
        } else {
            0
        };
        phases[phase] += 1;
        if let Some(l) = state.link {
            links.push(l);
        }
        if !arrived[i] {
            active.push(i);
        }
    }
    graph.recount_occupancy(links);

    let states: Vec<RobotSchedState> = active
        .iter()
        .map(|&i| match &routes[i] {
            Route::Network { state, .. } => state.clone(),
            Route::Waypoints { .. } => unreachable!(),
        })
        .collect();
    let inputs: Vec<RobotInput<'_>> = active
        .iter()
        .zip(&states)
        .map(|(&i, state)| RobotInput {
            state,
            position: robots[i].position,
            goal: goals[i],
        })
        .collect();
    let out = scheduler.schedule(&inputs, graph, clock)?;

    let mut reroutes = 0;
    let mut remaining = 0.0;
    for (k, plan) in out.plans {
        let i = active[k];
        if let Route::Network { state, plan: old } = &mut routes[i] {
            if !old.path_nodes.is_empty() && !old.path_nodes.ends_with(&plan.path_nodes) {
                reroutes += 1;
            }
            remaining += remaining_distance(graph, robots[i].position, &plan);
            *old = plan;
            adopt_plan(state, old, graph);
        }
    }
    metrics.stranded += out.stranded.len();
    metrics.sched_calls += 1;
    metrics.reroutes += reroutes;
    metrics.search_s += out.stats.search_s;
    metrics.select_s += out.stats.select_s;
    metrics.allocate_s += out.stats.allocate_s;
    match out.stats.status {
        SolveStatus::Fallback => metrics.fallback_calls += 1,
        SolveStatus::Incumbent => metrics.incumbent_calls += 1,
        SolveStatus::Optimal => {}
    }
    Ok(ScheduleRecord {
        time: now,
        robots: out.stats.robots,
        candidates: out.stats.candidates,
        objective: out.stats.objective,
        status: out.stats.status,
        search_s: out.stats.search_s,
        select_s: out.stats.select_s,
        allocate_s: out.stats.allocate_s,
        remaining,
        reroutes,
        phases,
    })
}

/// Places `n` robots in the default bands and runs the experiment. Robot `i`
/// starts at the `i`-th start lattice point (front row first) and heads for
/// the `i`-th goal lattice point (far row first).
pub fn run(map: &GridMap, n: usize, cfg: &SimConfig, clock: &dyn Clock) -> Result<SimRun, SimError> {
    let world = World::build(map, cfg)?;
    let (starts, goals) = placements(&world, n, cfg)?;
    run_world(&world, &starts, &goals, cfg, clock)
}

/// Start and goal points for `n` robots in the default bands.
pub fn placements(world: &World, n: usize, cfg: &SimConfig) -> Result<(Vec<Vec2>, Vec<Vec2>), SimError> {
    let (start_band, goal_band) = default_bands(&world.map);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let j1 = (rng.gen::<f64>(), rng.gen::<f64>());
    let j2 = (rng.gen::<f64>(), rng.gen::<f64>());
    let spacing = cfg.alpha * cfg.limits.r_min;
    let clearance = cfg.limits.agent_radius();
    let mut starts = place_robots(&world.map, &world.field, n, &start_band, spacing, clearance, j1)?;
    // A goal lattice at the start spacing turns into a wall once its outer
    // rows fill up, so goals are spread as far as the band allows.
    let mut goals = None;
    let mut k = 0;
    while goals.is_none() {
        let s = (GOAL_SPREAD - 0.05 * k as f64).max(1.0) * spacing;
        match place_robots(&world.map, &world.field, n, &goal_band, s, clearance, j2) {
            Ok(g) => goals = Some(g),
            Err(e) if s <= spacing => return Err(e),
            Err(_) => k += 1,
        }
    }
    let mut goals = goals.unwrap_or_default();
    // pair by column so that lateral travel stays short; within a column the
    // front start goes to the far goal
    starts.sort_by(|a, b| a.x.total_cmp(&b.x).then(b.y.total_cmp(&a.y)));
    goals.sort_by(|a, b| a.x.total_cmp(&b.x).then(b.y.total_cmp(&a.y)));
    Ok((starts, goals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::NullClock;

    fn small_cfg(planner: PlannerKind) -> SimConfig {
        SimConfig {
            planner,
            ..SimConfig::default()
        }
    }

    #[test]
    fn planner_names_round_trip() {
        for p in PlannerKind::ALL {
            assert_eq!(p.as_str().parse::<PlannerKind>().unwrap(), p);
        }
        assert!("dijkstra".parse::<PlannerKind>().is_err());
    }

    #[test]
    fn zero_robots_is_immediate() {
        let map = GridMap::empty(10, 20, 1.0).unwrap();
        let run = run(&map, 0, &small_cfg(PlannerKind::Frsp), &NullClock).unwrap();
        assert_eq!(run.metrics.makespan, 0.0);
        assert_eq!(run.metrics.sched_calls, 0);
        assert_eq!(run.metrics.outcome, Outcome::Completed);
    }

    #[test]
    fn lattice_fills_rows_from_the_top() {
        let map = GridMap::empty(40, 10, 1.0).unwrap();
        let field = ObstacleField::new(&map, &MotionLimits::default());
        let band = Rect::new(0.0, 0.0, 40.0, 8.0);
        let pts = place_robots(&map, &field, 4, &band, 0.8, 0.22, (0.5, 0.0)).unwrap();
        assert!(pts.iter().all(|p| p.y == pts[0].y));
        assert!((pts[0].y - 7.6).abs() < 1e-9);

        let narrow = Rect::new(0.0, 0.0, 3.2, 8.0);
        let pts = place_robots(&map, &field, 10, &narrow, 0.8, 0.22, (0.0, 0.0)).unwrap();
        let mut rows: Vec<usize> = Vec::new();
        let mut last = f64::NAN;
        for p in &pts {
            if p.y != last {
                rows.push(0);
                last = p.y;
            }
            *rows.last_mut().unwrap() += 1;
        }
        assert_eq!(rows, vec![4, 4, 2]);
    }

    #[test]
    fn band_capacity_is_checked() {
        let map = GridMap::empty(4, 4, 1.0).unwrap();
        let field = ObstacleField::new(&map, &MotionLimits::default());
        let band = Rect::new(0.0, 0.0, 4.0, 1.0);
        assert!(matches!(
            place_robots(&map, &field, 50, &band, 0.8, 0.22, (0.0, 0.0)),
            Err(SimError::BandCapacity { .. })
        ));
    }

    #[test]
    fn invalid_rates_rejected() {
        let cfg = SimConfig {
            avoid_hz: 50,
            ..SimConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
