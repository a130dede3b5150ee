//! Comparison planners: grid A*, a one-shot greedy split over network paths,
//! and the running-cost-only scheduler.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::decomposition::CellId;
use crate::geom::Vec2;
use crate::gridmap::{GridMap, NEIGHBORS_8};
use crate::network::{NetGraph, NodeId, ShortestPaths};
use crate::scheduler::Weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Astar,
    Greedy,
    RunCost,
}

/// The running-cost-only configuration of the scheduler.
pub fn runcost_weights() -> Weights {
    Weights::RUN_COST
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BaselineError {
    #[error("start point ({0}, {1}) is not in free space")]
    StartBlocked(f64, f64),
    #[error("goal point ({0}, {1}) is not in free space")]
    GoalBlocked(f64, f64),
    #[error("goal is unreachable from start")]
    Unreachable,
    #[error("no network path from {from} to {to}")]
    NoPaths { from: CellId, to: CellId },
}

const SQRT2: f64 = core::f64::consts::SQRT_2;

fn octile(a: (usize, usize), b: (usize, usize)) -> f64 {
    let dx = a.0.abs_diff(b.0) as f64;
    let dy = a.1.abs_diff(b.1) as f64;
    dx.max(dy) + (SQRT2 - 1.0) * dx.min(dy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    g: f64,
    idx: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        // min f, then larger g (deeper), then lower index
        other
            .f
            .total_cmp(&self.f)
            .then(self.g.total_cmp(&other.g))
            .then(other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// 8-connected grid A* between cells, diagonals only when both adjacent
/// orthogonal cells are free. Returns the cell sequence and its cost in
/// cell units.
pub fn astar_cells(
    map: &GridMap,
    start: (usize, usize),
    goal: (usize, usize),
) -> Option<(Vec<(usize, usize)>, f64)> {
    let w = map.width();
    let n = w * map.height();
    let idx = |c: (usize, usize)| c.1 * w + c.0;
    let mut g = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    g[idx(start)] = 0.0;
    heap.push(Open {
        f: octile(start, goal),
        g: 0.0,
        idx: idx(start),
    });
    while let Some(Open { idx: u, g: gu, .. }) = heap.pop() {
        if closed[u] {
            continue;
        }
        closed[u] = true;
        let cu = (u % w, u / w);
        if cu == goal {
            let mut cells = vec![cu];
            let mut cur = u;
            while pred[cur] != usize::MAX {
                cur = pred[cur];
                cells.push((cur % w, cur / w));
            }
            cells.reverse();
            return Some((cells, gu));
        }
        for (dx, dy) in NEIGHBORS_8 {
            let (x, y) = (cu.0 as isize + dx, cu.1 as isize + dy);
            if map.is_blocked(x, y) {
                continue;
            }
            if dx != 0
                && dy != 0
                && (map.is_blocked(cu.0 as isize + dx, cu.1 as isize)
                    || map.is_blocked(cu.0 as isize, cu.1 as isize + dy))
            {
                continue;
            }
            let c = (x as usize, y as usize);
            let v = idx(c);
            let step = if dx != 0 && dy != 0 { SQRT2 } else { 1.0 };
            let ng = gu + step;
            if ng < g[v] {
                g[v] = ng;
                pred[v] = u;
                heap.push(Open {
                    f: ng + octile(c, goal),
                    g: ng,
                    idx: v,
                });
            }
        }
    }
    None
}

/// Keeps only the cells where the move direction changes.
fn corners(cells: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let dir = |a: (usize, usize), b: (usize, usize)| {
        (b.0 as isize - a.0 as isize, b.1 as isize - a.1 as isize)
    };
    let mut out = Vec::new();
    for k in 1..cells.len().saturating_sub(1) {
        if dir(cells[k - 1], cells[k]) != dir(cells[k], cells[k + 1]) {
            out.push(cells[k]);
        }
    }
    out
}

/// Waypoints from `start` to `goal`: the centers of the grid path's corner
/// cells, then `goal` itself.
pub fn astar_plan(map: &GridMap, start: Vec2, goal: Vec2) -> Result<Vec<Vec2>, BaselineError> {
    let s = map
        .cell_at(start)
        .filter(|&(x, y)| !map.is_occupied(x, y))
        .ok_or(BaselineError::StartBlocked(start.x, start.y))?;
    let t = map
        .cell_at(goal)
        .filter(|&(x, y)| !map.is_occupied(x, y))
        .ok_or(BaselineError::GoalBlocked(goal.x, goal.y))?;
    let (cells, _) = astar_cells(map, s, t).ok_or(BaselineError::Unreachable)?;
    let mut out: Vec<Vec2> = corners(&cells)
        .into_iter()
        .map(|(x, y)| map.cell_center(x, y))
        .collect();
    out.push(goal);
    Ok(out)
}

/// Polyline length through `points`.
pub fn polyline_length(points: &[Vec2]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Largest-remainder apportionment of `n` over `weights`; ties in the
/// remainder go to the lower index.
pub fn apportion(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    if weights.is_empty() {
        return Vec::new();
    }
    if !(total > 0.0) {
        let mut out = vec![0; weights.len()];
        out[0] = n;
        return out;
    }
    let quotas: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| crate::geom::floor(*q) as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - counts[a] as f64;
        let rb = quotas[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// A start-to-goal node path with the greedy weight inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyPath {
    pub nodes: Vec<NodeId>,
    pub length: f64,
    pub min_capacity: u32,
}

impl GreedyPath {
    pub fn weight(&self) -> f64 {
        if self.length > 0.0 {
            self.min_capacity as f64 / self.length
        } else {
            f64::INFINITY
        }
    }
}

/// Every `Dijkstra(i, j)` with `i` in `UP(from)` and `j` in `DN(to)`. Length
/// runs from `entry` through the links to `exit`.
pub fn greedy_paths(g: &NetGraph, from: CellId, to: CellId, entry: Vec2, exit: Vec2) -> Vec<GreedyPath> {
    let mut out = Vec::new();
    for &i in g.up(from) {
        let tree = ShortestPaths::from_source(g, i);
        for &j in g.dn(to) {
            let nodes = tree.path_to(j);
            if nodes.is_empty() {
                continue;
            }
            let mut min_capacity = u32::MAX;
            for w in nodes.windows(2) {
                if let Some(l) = g.link_between(w[0], w[1]) {
                    min_capacity = min_capacity.min(g.link(l).capacity);
                }
            }
            if min_capacity == u32::MAX {
                min_capacity = g.node(nodes[0]).capacity;
            }
            let length = entry.distance(g.node(nodes[0]).position)
                + g.path_length(&nodes).unwrap_or(0.0)
                + g.node(nodes[nodes.len() - 1]).position.distance(exit);
            out.push(GreedyPath {
                nodes,
                length,
                min_capacity,
            });
        }
    }
    out
}

/// Splits robots over `paths` by largest remainder on `weight()`. Paths are
/// laid out left to right by their first node and robots by their start
/// position, and each path takes a contiguous block. Returns a path index per
/// robot.
pub fn greedy_assign(g: &NetGraph, paths: &[GreedyPath], starts: &[Vec2]) -> Vec<usize> {
    if paths.is_empty() {
        return Vec::new();
    }
    let weights: Vec<f64> = paths.iter().map(GreedyPath::weight).collect();
    let weights: Vec<f64> = if weights.iter().any(|w| w.is_infinite()) {
        weights
            .iter()
            .map(|w| if w.is_infinite() { 1.0 } else { 0.0 })
            .collect()
    } else {
        weights
    };
    let counts = apportion(starts.len(), &weights);
    let mut path_order: Vec<usize> = (0..paths.len()).collect();
    path_order.sort_by(|&a, &b| {
        let xa = g.node(paths[a].nodes[0]).position.x;
        let xb = g.node(paths[b].nodes[0]).position.x;
        xa.total_cmp(&xb).then(a.cmp(&b))
    });
    let mut robot_order: Vec<usize> = (0..starts.len()).collect();
    robot_order.sort_by(|&a, &b| {
        starts[a]
            .x
            .total_cmp(&starts[b].x)
            .then(starts[a].y.total_cmp(&starts[b].y))
            .then(a.cmp(&b))
    });
    let mut out = vec![0; starts.len()];
    let mut r = robot_order.into_iter();
    for &p in &path_order {
        for _ in 0..counts[p] {
            if let Some(i) = r.next() {
                out[i] = p;
            }
        }
    }
    out
}
