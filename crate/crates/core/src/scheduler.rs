//! Per-robot network state, next-go-to path sets, path selection and greedy
//! waypoint allocation.
//!
//! A scheduling call snapshots every robot's state, searches candidate paths
//! from the upper boundary of its current cell to the lower boundary of its
//! goal cell, selects one candidate per robot by solving a one-hot binary
//! quadratic program, and turns each selection into a [`ControlPlan`].

use alloc::vec;
use alloc::vec::Vec;

use crate::clock::Clock;
use crate::decomposition::CellId;
use crate::geom::Vec2;
use crate::miqp::{self, BinaryQuadraticProgram, MiqpError, QuadTerm, SolveLimits, SolveStatus};
use crate::network::{LinkId, NetGraph, NodeId, PosId, ShortestPaths};

/// The state tuple `(c_now, d_pre, d_nex, l)` plus the cells the robot
/// starts and ends in.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotSchedState {
    pub robot_id: usize,
    pub c_now: CellId,
    pub d_pre: Option<NodeId>,
    pub d_nex: Option<NodeId>,
    /// Link `d_pre -> d_nex` when both are set.
    pub link: Option<LinkId>,
    pub goal_cell: CellId,
    pub start_cell: CellId,
}

impl RobotSchedState {
    pub fn new(robot_id: usize, start_cell: CellId, goal_cell: CellId) -> Self {
        RobotSchedState {
            robot_id,
            c_now: start_cell,
            d_pre: None,
            d_nex: None,
            link: None,
            goal_cell,
            start_cell,
        }
    }

    pub fn in_goal_cell(&self) -> bool {
        self.c_now == self.goal_cell
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlPlan {
    pub path_nodes: Vec<NodeId>,
    /// `path_pos[k]` is a member of `path_nodes[k]`.
    pub path_pos: Vec<PosId>,
    pub final_goal: Vec2,
}

impl ControlPlan {
    pub fn direct(goal: Vec2) -> Self {
        ControlPlan {
            path_nodes: Vec::new(),
            path_pos: Vec::new(),
            final_goal: goal,
        }
    }

    /// Point the robot currently steers toward.
    pub fn target(&self, g: &NetGraph) -> Vec2 {
        match self.path_pos.first() {
            Some(&p) => g.pos(p).position,
            None => self.final_goal,
        }
    }

    pub fn is_direct(&self) -> bool {
        self.path_nodes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathCandidate {
    pub node_list: Vec<NodeId>,
    /// Entry distance + link lengths + exit distance to the goal point.
    pub length: f64,
    pub fir: Option<LinkId>,
    pub sec: Option<LinkId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl Weights {
    pub const FRSP: Weights = Weights {
        k1: 1.0,
        k2: 0.5,
        k3: 0.5,
    };
    pub const RUN_COST: Weights = Weights {
        k1: 0.0,
        k2: 0.0,
        k3: 1.0,
    };

    pub fn is_valid(&self) -> bool {
        let all = [self.k1, self.k2, self.k3];
        all.iter().all(|k| *k >= 0.0 && k.is_finite()) && all.iter().any(|k| *k > 0.0)
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights::FRSP
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchedError {
    #[error("robot {robot} has no path from {cell} to its goal cell")]
    Stranded { robot: usize, cell: CellId },
    #[error("robot {robot}: waypoint node {node} does not follow the current state")]
    Inconsistent { robot: usize, node: NodeId },
    #[error("invalid weights")]
    BadWeights,
    #[error(transparent)]
    Solver(#[from] MiqpError),
}

/// Cell a robot counts as being in. Right after passing a node the robot can
/// still sit just below its boundary; the node's upper cell wins then.
pub fn effective_cell(
    physical: Option<CellId>,
    d_pre: Option<NodeId>,
    g: &NetGraph,
    fallback: CellId,
) -> CellId {
    let Some(cell) = physical else {
        return fallback;
    };
    match d_pre {
        Some(n) if g.node(n).below == cell => g.node(n).above,
        _ => cell,
    }
}

/// Shortest-path trees keyed by source node; the network is static so trees
/// stay valid for the whole run.
#[derive(Debug, Clone, Default)]
pub struct PathCache {
    trees: Vec<Option<ShortestPaths>>,
}

impl PathCache {
    pub fn new() -> Self {
        PathCache::default()
    }

    pub fn tree(&mut self, g: &NetGraph, source: NodeId) -> &ShortestPaths {
        if self.trees.len() < g.nodes.len() {
            self.trees.resize(g.nodes.len(), None);
        }
        self.trees[source.index()].get_or_insert_with(|| ShortestPaths::from_source(g, source))
    }
}

fn make_candidate(g: &NetGraph, nodes: Vec<NodeId>, from: Vec2, goal: Vec2) -> PathCandidate {
    let first = g.node(nodes[0]).position;
    let last = g.node(nodes[nodes.len() - 1]).position;
    let links = g.path_length(&nodes).unwrap_or(f64::INFINITY);
    let fir = (nodes.len() >= 2)
        .then(|| g.link_between(nodes[0], nodes[1]))
        .flatten();
    let sec = (nodes.len() >= 3)
        .then(|| g.link_between(nodes[1], nodes[2]))
        .flatten();
    PathCandidate {
        length: from.distance(first) + links + last.distance(goal),
        node_list: nodes,
        fir,
        sec,
    }
}

/// `{ Dijkstra(i, j) | i in UP(c_now), j in DN(goal_cell) }`, unreachable
/// pairs dropped. Distinct `(i, j)` pairs give distinct node lists, so no
/// deduplication pass is needed. A robot already in its goal cell gets one
/// empty candidate.
pub fn path_set_search(
    robot: &RobotSchedState,
    position: Vec2,
    goal: Vec2,
    g: &NetGraph,
    cache: &mut PathCache,
) -> Result<Vec<PathCandidate>, SchedError> {
    if robot.in_goal_cell() {
        return Ok(vec![PathCandidate {
            node_list: Vec::new(),
            length: position.distance(goal),
            fir: None,
            sec: None,
        }]);
    }
    let mut out: Vec<PathCandidate> = Vec::new();
    for &i in g.up(robot.c_now) {
        let tree = cache.tree(g, i);
        for &j in g.dn(robot.goal_cell) {
            let nodes = tree.path_to(j);
            if nodes.is_empty() {
                continue;
            }
            out.push(make_candidate(g, nodes, position, goal));
        }
    }
    if out.is_empty() {
        return Err(SchedError::Stranded {
            robot: robot.robot_id,
            cell: robot.c_now,
        });
    }
    Ok(out)
}

/// One term per distinct link, `scale * (S_l + Num(l) - Cap(l))^2`.
fn link_terms(
    g: &NetGraph,
    k: f64,
    by_link: &mut [(LinkId, usize)],
    out: &mut Vec<QuadTerm>,
) {
    if k == 0.0 {
        return;
    }
    by_link.sort_by_key(|&(l, v)| (l, v));
    let mut i = 0;
    while i < by_link.len() {
        let l = by_link[i].0;
        let mut vars = Vec::new();
        while i < by_link.len() && by_link[i].0 == l {
            vars.push(by_link[i].1);
            i += 1;
        }
        let link = g.link(l);
        let cap = link.capacity as f64;
        out.push(QuadTerm {
            vars,
            offset: link.occupancy as f64 - cap,
            scale: k / (cap * cap),
        });
    }
}

/// Builds the path-selection program. Group `r` holds one variable per
/// candidate of `candidates[r]`, numbered consecutively.
pub fn assemble_problem(
    candidates: &[Vec<PathCandidate>],
    g: &NetGraph,
    w: &Weights,
) -> BinaryQuadraticProgram {
    let mut groups = Vec::with_capacity(candidates.len());
    let mut linear = Vec::new();
    let mut fir = Vec::new();
    let mut sec = Vec::new();
    for cands in candidates {
        let mut group = Vec::with_capacity(cands.len());
        for c in cands {
            let v = linear.len();
            group.push(v);
            linear.push(w.k3 * c.length);
            if let Some(l) = c.fir {
                fir.push((l, v));
            }
            if let Some(l) = c.sec {
                sec.push((l, v));
            }
        }
        groups.push(group);
    }
    let mut quad = Vec::new();
    link_terms(g, w.k1, &mut fir, &mut quad);
    link_terms(g, w.k2, &mut sec, &mut quad);
    BinaryQuadraticProgram {
        groups,
        linear,
        quad,
    }
}

/// Chosen candidate index per group, with the solver result.
pub fn select_paths(
    problem: &BinaryQuadraticProgram,
    limits: &SolveLimits,
    clock: &dyn Clock,
) -> Result<(Vec<usize>, miqp::Assignment), MiqpError> {
    let a = miqp::solve(problem, limits, clock)?;
    let picks = a
        .chosen
        .iter()
        .zip(&problem.groups)
        .map(|(v, group)| v - group[0])
        .collect();
    Ok((picks, a))
}

/// Nearest member of each node in turn, starting from `from`; lowest id wins
/// ties.
pub fn allocate_positions(nodes: &[NodeId], g: &NetGraph, from: Vec2) -> Vec<PosId> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut cur = from;
    for &n in nodes {
        let mut best: Option<(PosId, f64)> = None;
        for &p in &g.node(n).members {
            let d = g.pos(p).position.distance(cur);
            if best.map_or(true, |(bp, bd)| d < bd || (d == bd && p < bp)) {
                best = Some((p, d));
            }
        }
        let (p, _) = best.expect("path node without members");
        out.push(p);
        cur = g.pos(p).position;
    }
    out
}

/// Points `state` at the head of a freshly published plan.
pub fn adopt_plan(state: &mut RobotSchedState, plan: &ControlPlan, g: &NetGraph) {
    state.d_nex = plan.path_nodes.first().copied();
    state.link = match (state.d_pre, state.d_nex) {
        (Some(a), Some(b)) => g.link_between(a, b),
        _ => None,
    };
}

/// Pops the reached waypoint and advances `(d_pre, d_nex, l)`; `c_now` is
/// refreshed from `physical`. Link occupancies are recounted by the caller.
pub fn on_waypoint_reached(
    state: &mut RobotSchedState,
    plan: &mut ControlPlan,
    g: &NetGraph,
    physical: Option<CellId>,
) -> Result<(), SchedError> {
    if plan.path_nodes.is_empty() {
        return Ok(());
    }
    let node = plan.path_nodes.remove(0);
    plan.path_pos.remove(0);
    if state.d_nex.is_some_and(|n| n != node) {
        return Err(SchedError::Inconsistent {
            robot: state.robot_id,
            node,
        });
    }
    state.d_pre = Some(node);
    state.d_nex = plan.path_nodes.first().copied();
    state.link = match state.d_nex {
        Some(next) => Some(g.link_between(node, next).ok_or(SchedError::Inconsistent {
            robot: state.robot_id,
            node: next,
        })?),
        None => None,
    };
    state.c_now = effective_cell(physical, state.d_pre, g, g.node(node).above);
    Ok(())
}

/// Summary of one scheduling call, the columns of the schedule trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleStats {
    pub robots: usize,
    pub candidates: usize,
    pub objective: f64,
    pub status: SolveStatus,
    pub search_s: f64,
    pub select_s: f64,
    pub allocate_s: f64,
}

impl ScheduleStats {
    pub fn total_s(&self) -> f64 {
        self.search_s + self.select_s + self.allocate_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleOutput {
    /// `(robot index, plan)` for every robot that received a plan.
    pub plans: Vec<(usize, ControlPlan)>,
    /// Robots with no candidate path; they keep their previous plan.
    pub stranded: Vec<usize>,
    /// Candidates each planned robot chose, by robot index (empty for
    /// goal-cell robots).
    pub chosen: Vec<(usize, PathCandidate)>,
    pub stats: ScheduleStats,
}

/// Input view of one robot for a scheduling call.
#[derive(Debug, Clone, Copy)]
pub struct RobotInput<'a> {
    pub state: &'a RobotSchedState,
    pub position: Vec2,
    pub goal: Vec2,
}

/// The full search -> select -> allocate pipeline. `g` must carry fresh
/// occupancies.
#[derive(Debug, Clone)]
pub struct Scheduler {
    pub weights: Weights,
    pub limits: SolveLimits,
    cache: PathCache,
}

impl Scheduler {
    pub fn new(weights: Weights, limits: SolveLimits) -> Self {
        Scheduler {
            weights,
            limits,
            cache: PathCache::new(),
        }
    }

    /// Next-go-to path set of one robot, through the shared cache.
    pub fn candidates(
        &mut self,
        robot: &RobotInput<'_>,
        g: &NetGraph,
    ) -> Result<Vec<PathCandidate>, SchedError> {
        path_set_search(robot.state, robot.position, robot.goal, g, &mut self.cache)
    }

    pub fn schedule(
        &mut self,
        robots: &[RobotInput<'_>],
        g: &NetGraph,
        clock: &dyn Clock,
    ) -> Result<ScheduleOutput, SchedError> {
        if !self.weights.is_valid() {
            return Err(SchedError::BadWeights);
        }
        let t0 = clock.now();
        let mut plans = Vec::new();
        let mut stranded = Vec::new();
        let mut transit = Vec::new();
        let mut sets = Vec::new();
        for (i, r) in robots.iter().enumerate() {
            if r.state.in_goal_cell() {
                plans.push((i, ControlPlan::direct(r.goal)));
                continue;
            }
            match self.candidates(r, g) {
                Ok(c) => {
                    transit.push(i);
                    sets.push(c);
                }
                Err(SchedError::Stranded { .. }) => stranded.push(i),
                Err(e) => return Err(e),
            }
        }
        let t1 = clock.now();

        let problem = assemble_problem(&sets, g, &self.weights);
        let (picks, assignment) = select_paths(&problem, &self.limits, clock)?;
        let t2 = clock.now();

        let mut chosen = Vec::with_capacity(transit.len());
        for (k, &i) in transit.iter().enumerate() {
            let cand = sets[k].swap_remove(picks[k]);
            let r = &robots[i];
            let path_pos = allocate_positions(&cand.node_list, g, r.position);
            plans.push((
                i,
                ControlPlan {
                    path_nodes: cand.node_list.clone(),
                    path_pos,
                    final_goal: r.goal,
                },
            ));
            chosen.push((i, cand));
        }
        plans.sort_by_key(|(i, _)| *i);
        let t3 = clock.now();

        Ok(ScheduleOutput {
            plans,
            stranded,
            chosen,
            stats: ScheduleStats {
                robots: transit.len(),
                candidates: problem.num_vars(),
                objective: assignment.objective,
                status: assignment.status,
                search_s: t1 - t0,
                select_s: t2 - t1,
                allocate_s: t3 - t2,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::NullClock;
    use crate::network::NodeSpec;

    /// Four stacked nodes V1..V4 (ids 0..3) between cells 0..4, one link per
    /// cell 1..3. V2 and V3 carry three positions, V4 two.
    fn ladder() -> NetGraph {
        let specs = vec![
            NodeSpec {
                members: vec![Vec2::new(2.0, 1.0)],
                below: CellId(0),
                above: CellId(1),
            },
            NodeSpec {
                members: vec![
                    Vec2::new(1.0, 3.0),
                    Vec2::new(2.0, 3.0),
                    Vec2::new(3.0, 3.0),
                ],
                below: CellId(1),
                above: CellId(2),
            },
            NodeSpec {
                members: vec![
                    Vec2::new(1.2, 5.0),
                    Vec2::new(2.2, 5.0),
                    Vec2::new(3.2, 5.0),
                ],
                below: CellId(2),
                above: CellId(3),
            },
            NodeSpec {
                members: vec![Vec2::new(2.0, 7.0), Vec2::new(3.0, 7.0)],
                below: CellId(3),
                above: CellId(4),
            },
        ];
        let links = [
            (NodeId(0), NodeId(1), 3),
            (NodeId(1), NodeId(2), 3),
            (NodeId(2), NodeId(3), 2),
        ];
        NetGraph::from_parts(5, &specs, &links).unwrap()
    }

    #[test]
    fn nearest_member_allocation() {
        let g = ladder();
        let pos = allocate_positions(&[NodeId(1)], &g, Vec2::new(2.9, 2.0));
        assert_eq!(g.pos(pos[0]).position.x, 3.0);
        // equidistant members: lowest id
        let pos = allocate_positions(&[NodeId(3)], &g, Vec2::new(2.5, 6.0));
        assert_eq!(pos, vec![g.node(NodeId(3)).members[0]]);
    }

    #[test]
    fn waypoint_transition_follows_state_tuple() {
        let mut g = ladder();
        let mut state = RobotSchedState {
            robot_id: 0,
            c_now: CellId(1),
            d_pre: Some(NodeId(0)),
            d_nex: Some(NodeId(1)),
            link: Some(LinkId(0)),
            goal_cell: CellId(4),
            start_cell: CellId(0),
        };
        let nodes = vec![NodeId(1), NodeId(2), NodeId(3)];
        let mut plan = ControlPlan {
            path_pos: allocate_positions(&nodes, &g, Vec2::new(3.2, 2.0)),
            path_nodes: nodes,
            final_goal: Vec2::new(3.0, 9.0),
        };
        // P23, P33, P42 are the last members of V2, V3 and V4
        assert_eq!(plan.path_pos, vec![PosId(3), PosId(6), PosId(8)]);
        g.recount_occupancy(state.link);
        assert_eq!(g.link(LinkId(0)).occupancy, 1);

        // robot still a hair below the boundary of V2
        on_waypoint_reached(&mut state, &mut plan, &g, Some(CellId(1))).unwrap();
        assert_eq!(state.c_now, CellId(2));
        assert_eq!(state.d_pre, Some(NodeId(1)));
        assert_eq!(state.d_nex, Some(NodeId(2)));
        assert_eq!(state.link, Some(LinkId(1)));
        assert_eq!(plan.path_nodes, vec![NodeId(2), NodeId(3)]);
        assert_eq!(plan.path_pos, vec![PosId(6), PosId(8)]);
        g.recount_occupancy(state.link);
        assert_eq!(g.link(LinkId(1)).occupancy, 1);
        assert_eq!(g.link(LinkId(0)).occupancy, 0);
    }

    #[test]
    fn plan_exhaustion_heads_to_goal() {
        let g = ladder();
        let mut state = RobotSchedState {
            robot_id: 0,
            c_now: CellId(3),
            d_pre: Some(NodeId(2)),
            d_nex: Some(NodeId(3)),
            link: Some(LinkId(2)),
            goal_cell: CellId(4),
            start_cell: CellId(0),
        };
        let goal = Vec2::new(2.0, 9.0);
        let mut plan = ControlPlan {
            path_nodes: vec![NodeId(3)],
            path_pos: vec![PosId(7)],
            final_goal: goal,
        };
        on_waypoint_reached(&mut state, &mut plan, &g, Some(CellId(4))).unwrap();
        assert!(plan.is_direct());
        assert_eq!(plan.target(&g), goal);
        assert_eq!(state.link, None);
        assert!(state.in_goal_cell());
    }

    #[test]
    fn inconsistent_pop_is_reported() {
        let g = ladder();
        let mut state = RobotSchedState {
            d_nex: Some(NodeId(2)),
            ..RobotSchedState::new(3, CellId(1), CellId(4))
        };
        let mut plan = ControlPlan {
            path_nodes: vec![NodeId(1)],
            path_pos: vec![PosId(1)],
            final_goal: Vec2::ZERO,
        };
        assert!(matches!(
            on_waypoint_reached(&mut state, &mut plan, &g, None),
            Err(SchedError::Inconsistent { robot: 3, .. })
        ));
    }

    #[test]
    fn fir_term_hand_value() {
        // Cap = 4, Num = 1, two robots on the link: (2 + 1 - 4)^2 / 16
        let specs = vec![
            NodeSpec {
                members: vec![Vec2::new(0.0, 0.0); 4],
                below: CellId(0),
                above: CellId(1),
            },
            NodeSpec {
                members: vec![Vec2::new(0.0, 1.0); 4],
                below: CellId(1),
                above: CellId(2),
            },
        ];
        let mut g = NetGraph::from_parts(3, &specs, &[(NodeId(0), NodeId(1), 4)]).unwrap();
        g.recount_occupancy([LinkId(0)]);
        let cand = PathCandidate {
            node_list: vec![NodeId(0), NodeId(1)],
            length: 0.0,
            fir: Some(LinkId(0)),
            sec: None,
        };
        let p = assemble_problem(
            &[vec![cand.clone()], vec![cand]],
            &g,
            &Weights {
                k1: 1.0,
                k2: 0.0,
                k3: 0.0,
            },
        );
        assert_eq!(p.quad.len(), 1);
        assert_eq!(p.evaluate(&[0, 1]), 0.0625);
    }

    #[test]
    fn running_term_alone() {
        let g = ladder();
        let cand = PathCandidate {
            node_list: vec![NodeId(3)],
            length: 5.0,
            fir: None,
            sec: None,
        };
        let w = Weights {
            k1: 1.0,
            k2: 0.5,
            k3: 0.5,
        };
        let p = assemble_problem(&[vec![cand]], &g, &w);
        assert!(p.quad.is_empty());
        let (picks, a) = select_paths(&p, &SolveLimits::UNBOUNDED, &NullClock).unwrap();
        assert_eq!(picks, vec![0]);
        assert_eq!(a.objective, 2.5);
    }

    #[test]
    fn shared_first_and_second_links() {
        // p1 = [V1,V2,V3,V4], p2 = [V1,V2,V3,V6], p3 = [V5,V2,V3,V6]
        let n = |x: f64, y: f64, below: u32| NodeSpec {
            members: vec![Vec2::new(x, y)],
            below: CellId(below),
            above: CellId(below + 1),
        };
        let specs = vec![
            n(0.0, 0.0, 0), // V1
            n(1.0, 1.0, 1), // V2
            n(1.0, 2.0, 2), // V3
            n(0.0, 3.0, 3), // V4
            n(2.0, 0.0, 0), // V5
            n(2.0, 3.0, 3), // V6
        ];
        let links = [
            (NodeId(0), NodeId(1), 1), // L1
            (NodeId(1), NodeId(2), 1), // L2
            (NodeId(2), NodeId(3), 1), // L3
            (NodeId(4), NodeId(1), 1), // L4
            (NodeId(2), NodeId(5), 1), // L5
        ];
        let g = NetGraph::from_parts(5, &specs, &links).unwrap();
        let goal = Vec2::new(1.0, 4.0);
        let paths = [
            vec![NodeId(0), NodeId(1), NodeId(2), NodeId(3)],
            vec![NodeId(0), NodeId(1), NodeId(2), NodeId(5)],
            vec![NodeId(4), NodeId(1), NodeId(2), NodeId(5)],
        ];
        let cands: Vec<PathCandidate> = paths
            .iter()
            .map(|p| make_candidate(&g, p.clone(), Vec2::ZERO, goal))
            .collect();
        let p = assemble_problem(&[cands], &g, &Weights::FRSP);
        // Fir terms L1 {p1, p2} and L4 {p3}, Sec term L2 {p1, p2, p3}
        let vars: Vec<&Vec<usize>> = p.quad.iter().map(|t| &t.vars).collect();
        assert_eq!(vars, vec![&vec![0, 1], &vec![2], &vec![0, 1, 2]]);
        assert_eq!(p.quad[2].scale, 0.5);
    }

    #[test]
    fn effective_cell_prefers_upper_side_of_passed_node() {
        let g = ladder();
        assert_eq!(
            effective_cell(Some(CellId(1)), Some(NodeId(1)), &g, CellId(0)),
            CellId(2)
        );
        assert_eq!(
            effective_cell(Some(CellId(3)), Some(NodeId(1)), &g, CellId(0)),
            CellId(3)
        );
        assert_eq!(effective_cell(None, None, &g, CellId(4)), CellId(4));
    }

    #[test]
    fn goal_cell_robot_gets_direct_plan() {
        let g = ladder();
        let state = RobotSchedState::new(0, CellId(4), CellId(4));
        let mut s = Scheduler::new(Weights::FRSP, SolveLimits::UNBOUNDED);
        let out = s
            .schedule(
                &[RobotInput {
                    state: &state,
                    position: Vec2::new(2.0, 8.0),
                    goal: Vec2::new(2.0, 9.0),
                }],
                &g,
                &NullClock,
            )
            .unwrap();
        assert_eq!(out.plans.len(), 1);
        assert!(out.plans[0].1.is_direct());
        assert_eq!(out.stats.robots, 0);
        let cands = path_set_search(
            &state,
            Vec2::new(2.0, 8.0),
            Vec2::new(2.0, 9.0),
            &g,
            &mut PathCache::new(),
        )
        .unwrap();
        assert_eq!(cands.len(), 1);
        assert!(cands[0].node_list.is_empty());
    }

    #[test]
    fn stranded_robot_is_flagged() {
        let g = ladder();
        // nothing leads down from cell 3 to cell 2's lower boundary
        let state = RobotSchedState::new(5, CellId(3), CellId(2));
        let err = path_set_search(&state, Vec2::ZERO, Vec2::ZERO, &g, &mut PathCache::new());
        assert_eq!(
            err,
            Err(SchedError::Stranded {
                robot: 5,
                cell: CellId(3)
            })
        );
    }
}
