//! Passage network built on top of the cell decomposition.
//!
//! Every shared boundary receives `floor(L_B / (alpha * r_min))` passage
//! positions, spaced uniformly with half-spacing margins. Positions are grouped
//! left to right into runs of `n_b` (the last run may be shorter) and each run
//! becomes one node at the mean of its members. Inside every cell, each node
//! on the lower boundary links to each node on the upper boundary.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::decomposition::{CellId, CellSet};
use crate::geom::{abs, floor, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PosId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V{}", self.0)
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl PosId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl LinkId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A concrete passage waypoint on a shared boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPos {
    pub id: PosId,
    pub position: Vec2,
    pub owner: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathNode {
    pub id: NodeId,
    /// Mean of the member positions.
    pub position: Vec2,
    /// Member passage positions, left to right.
    pub members: Vec<PosId>,
    /// Number of members.
    pub capacity: u32,
    /// Boundary segment id, `usize::MAX` for hand-built graphs.
    pub boundary: usize,
    pub below: CellId,
    pub above: CellId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: LinkId,
    pub start: NodeId,
    pub end: NodeId,
    /// Cell the link crosses.
    pub cell: CellId,
    pub length: f64,
    pub capacity: u32,
    /// Robots currently on the link. Recomputed by the simulation.
    pub occupancy: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    pub alpha: f64,
    pub r_min: f64,
    pub n_b: u32,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            alpha: 2.0,
            r_min: 0.4,
            n_b: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("invalid network parameters: alpha={alpha}, r_min={r_min}, n_b={n_b}")]
    InvalidParams { alpha: f64, r_min: f64, n_b: u32 },
    #[error("link {start}->{end} joins nodes that do not bound a common cell")]
    BadLink { start: NodeId, end: NodeId },
}

/// Floating ratios such as `4.0 / 0.8` land a hair under the integer.
const FLOOR_EPS: f64 = 1e-9;

/// Lower clamp on `sin(theta)` so near-horizontal links keep a capacity.
pub const MIN_SIN_THETA: f64 = 0.05;

/// Number of passage positions a boundary of length `length` admits.
pub fn passage_count(length: f64, alpha: f64, r_min: f64) -> usize {
    let n = floor(length / (alpha * r_min) + FLOOR_EPS);
    if n < 0.0 {
        0
    } else {
        n as usize
    }
}

/// Link capacity: the smaller endpoint capacity scaled by the link's vertical
/// extent in units of `alpha * r_min`, floored, never below one.
pub fn link_capacity(
    length: f64,
    sin_theta: f64,
    cap_start: u32,
    cap_end: u32,
    alpha: f64,
    r_min: f64,
) -> u32 {
    let s = abs(sin_theta).max(MIN_SIN_THETA);
    let raw = length * s / (alpha * r_min) * cap_start.min(cap_end) as f64;
    let c = floor(raw + FLOOR_EPS);
    if c < 1.0 {
        1
    } else {
        c as u32
    }
}

#[derive(Debug, Clone)]
pub struct NetGraph {
    pub positions: Vec<PathPos>,
    pub nodes: Vec<PathNode>,
    pub links: Vec<Link>,
    up: Vec<Vec<NodeId>>,
    dn: Vec<Vec<NodeId>>,
    out_links: Vec<Vec<LinkId>>,
}

/// A node described by its member positions; used to hand-build graphs.
#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub members: Vec<Vec2>,
    pub below: CellId,
    pub above: CellId,
}

impl NetGraph {
    /// Assembles a graph from explicit nodes and `(start, end, capacity)`
    /// links. Lengths come from node positions; positions and node ids follow
    /// input order.
    pub fn from_parts(
        cell_count: usize,
        nodes: &[NodeSpec],
        links: &[(NodeId, NodeId, u32)],
    ) -> Result<Self, NetworkError> {
        let mut positions = Vec::new();
        let mut built = Vec::with_capacity(nodes.len());
        for (i, spec) in nodes.iter().enumerate() {
            let id = NodeId(i as u32);
            let mut members = Vec::with_capacity(spec.members.len());
            for &p in &spec.members {
                let pid = PosId(positions.len() as u32);
                positions.push(PathPos {
                    id: pid,
                    position: p,
                    owner: id,
                });
                members.push(pid);
            }
            built.push(PathNode {
                id,
                position: mean(&spec.members),
                capacity: members.len() as u32,
                members,
                boundary: usize::MAX,
                below: spec.below,
                above: spec.above,
            });
        }
        let mut link_list = Vec::with_capacity(links.len());
        for &(a, b, cap) in links {
            let (na, nb) = (&built[a.index()], &built[b.index()]);
            if na.above != nb.below {
                return Err(NetworkError::BadLink { start: a, end: b });
            }
            link_list.push(Link {
                id: LinkId(link_list.len() as u32),
                start: a,
                end: b,
                cell: na.above,
                length: na.position.distance(nb.position),
                capacity: cap.max(1),
                occupancy: 0,
            });
        }
        Ok(Self::index(cell_count, positions, built, link_list))
    }

    fn index(
        cell_count: usize,
        positions: Vec<PathPos>,
        nodes: Vec<PathNode>,
        links: Vec<Link>,
    ) -> Self {
        let mut up = vec![Vec::new(); cell_count];
        let mut dn = vec![Vec::new(); cell_count];
        for n in &nodes {
            up[n.below.0 as usize].push(n.id);
            dn[n.above.0 as usize].push(n.id);
        }
        let mut out_links = vec![Vec::new(); nodes.len()];
        for l in &links {
            out_links[l.start.index()].push(l.id);
        }
        NetGraph {
            positions,
            nodes,
            links,
            up,
            dn,
            out_links,
        }
    }

    pub fn node(&self, id: NodeId) -> &PathNode {
        &self.nodes[id.index()]
    }

    pub fn pos(&self, id: PosId) -> &PathPos {
        &self.positions[id.index()]
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.index()]
    }

    pub fn cell_count(&self) -> usize {
        self.up.len()
    }

    /// Nodes on the upper boundary of `cell`.
    pub fn up(&self, cell: CellId) -> &[NodeId] {
        self.up.get(cell.0 as usize).map_or(&[], |v| v)
    }

    /// Nodes on the lower boundary of `cell`.
    pub fn dn(&self, cell: CellId) -> &[NodeId] {
        self.dn.get(cell.0 as usize).map_or(&[], |v| v)
    }

    pub fn out_links(&self, node: NodeId) -> &[LinkId] {
        &self.out_links[node.index()]
    }

    pub fn link_between(&self, start: NodeId, end: NodeId) -> Option<LinkId> {
        self.out_links[start.index()]
            .iter()
            .copied()
            .find(|&l| self.links[l.index()].end == end)
    }

    /// Sum of link lengths along consecutive `path` nodes; `None` if some pair
    /// is not linked.
    pub fn path_length(&self, path: &[NodeId]) -> Option<f64> {
        let mut total = 0.0;
        for w in path.windows(2) {
            total += self.links[self.link_between(w[0], w[1])?.index()].length;
        }
        Some(total)
    }

    /// Resets every `Num(l)` and counts one robot per yielded link.
    pub fn recount_occupancy<I: IntoIterator<Item = LinkId>>(&mut self, on_links: I) {
        for l in &mut self.links {
            l.occupancy = 0;
        }
        for l in on_links {
            self.links[l.index()].occupancy += 1;
        }
    }
}

fn mean(points: &[Vec2]) -> Vec2 {
    if points.is_empty() {
        return Vec2::ZERO;
    }
    let mut s = Vec2::ZERO;
    for &p in points {
        s += p;
    }
    s / points.len() as f64
}

pub fn build_network(cells: &CellSet, params: NetworkParams) -> Result<NetGraph, NetworkError> {
    let NetworkParams { alpha, r_min, n_b } = params;
    if !(alpha >= 1.0) || !(r_min > 0.0) || n_b == 0 {
        return Err(NetworkError::InvalidParams { alpha, r_min, n_b });
    }
    let mut positions: Vec<PathPos> = Vec::new();
    let mut nodes: Vec<PathNode> = Vec::new();
    for b in cells.boundaries() {
        let count = passage_count(b.length, alpha, r_min);
        if count == 0 {
            log::warn!(
                "boundary {} ({} -> {}) of length {:.3} m admits no passage",
                b.id,
                b.below,
                b.above,
                b.length
            );
            continue;
        }
        let dir = (b.end - b.start) / b.length;
        let spacing = b.length / count as f64;
        let points: Vec<Vec2> = (0..count)
            .map(|k| b.start + dir * ((k as f64 + 0.5) * spacing))
            .collect();
        for group in points.chunks(n_b as usize) {
            let id = NodeId(nodes.len() as u32);
            let mut members = Vec::with_capacity(group.len());
            for &p in group {
                let pid = PosId(positions.len() as u32);
                positions.push(PathPos {
                    id: pid,
                    position: p,
                    owner: id,
                });
                members.push(pid);
            }
            nodes.push(PathNode {
                id,
                position: mean(group),
                capacity: members.len() as u32,
                members,
                boundary: b.id,
                below: b.below,
                above: b.above,
            });
        }
    }

    let mut graph = NetGraph::index(cells.len(), positions, nodes, Vec::new());
    let mut links = Vec::new();
    for c in 0..cells.len() {
        let cell = CellId(c as u32);
        for &a in graph.dn(cell) {
            for &b in graph.up(cell) {
                let (na, nb) = (graph.node(a), graph.node(b));
                let delta = nb.position - na.position;
                let length = delta.length();
                let sin_theta = if length > 0.0 {
                    abs(delta.y) / length
                } else {
                    0.0
                };
                links.push(Link {
                    id: LinkId(links.len() as u32),
                    start: a,
                    end: b,
                    cell,
                    length,
                    capacity: link_capacity(
                        length,
                        sin_theta,
                        na.capacity,
                        nb.capacity,
                        alpha,
                        r_min,
                    ),
                    occupancy: 0,
                });
            }
        }
    }
    graph = NetGraph::index(cells.len(), graph.positions, graph.nodes, links);
    Ok(graph)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then on node id
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest path tree over link lengths.
#[derive(Debug, Clone)]
pub struct ShortestPaths {
    pub source: NodeId,
    pub dist: Vec<f64>,
    pred: Vec<u32>,
}

const NO_PRED: u32 = u32::MAX;

impl ShortestPaths {
    pub fn from_source(g: &NetGraph, source: NodeId) -> Self {
        let n = g.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![NO_PRED; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source.index()] = 0.0;
        heap.push(HeapEntry {
            dist: 0.0,
            node: source.0,
        });
        while let Some(HeapEntry { dist: d, node }) = heap.pop() {
            let u = node as usize;
            if done[u] {
                continue;
            }
            done[u] = true;
            for &l in g.out_links(NodeId(node)) {
                let link = g.link(l);
                let v = link.end.index();
                let nd = d + link.length;
                if nd < dist[v] {
                    dist[v] = nd;
                    pred[v] = node;
                    heap.push(HeapEntry {
                        dist: nd,
                        node: link.end.0,
                    });
                }
            }
        }
        ShortestPaths { source, dist, pred }
    }

    pub fn distance(&self, target: NodeId) -> Option<f64> {
        let d = self.dist[target.index()];
        d.is_finite().then_some(d)
    }

    /// Node list from the source to `target` inclusive, empty if unreachable.
    pub fn path_to(&self, target: NodeId) -> Vec<NodeId> {
        if !self.dist[target.index()].is_finite() {
            return Vec::new();
        }
        let mut path = vec![target];
        let mut cur = target.0;
        while cur != self.source.0 {
            cur = self.pred[cur as usize];
            path.push(NodeId(cur));
        }
        path.reverse();
        path
    }
}

/// Minimum-length node path from `i` to `j`, both inclusive. Empty when `j`
/// is unreachable.
pub fn dijkstra(g: &NetGraph, i: NodeId, j: NodeId) -> Vec<NodeId> {
    ShortestPaths::from_source(g, i).path_to(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::decompose;
    use crate::gridmap::GridMap;

    #[test]
    fn capacity_goldens() {
        // L_B = 4.0 m with alpha = 2, r_min = 0.4 -> 5 passage positions
        assert_eq!(passage_count(4.0, 2.0, 0.4), 5);
        assert_eq!(passage_count(0.5, 2.0, 0.4), 0);
        assert_eq!(link_capacity(2.0, 1.0, 5, 3, 2.0, 0.4), 7);
        assert_eq!(link_capacity(0.8, 1.0, 1, 1, 2.0, 0.4), 1);
        assert_eq!(link_capacity(1.0, 0.05, 4, 4, 2.0, 0.4), 1);
        assert_eq!(link_capacity(1.0, 0.0, 4, 4, 2.0, 0.4), 1);
    }

    fn strip_map() -> GridMap {
        // 10 x 5 at 0.4 m with a two-cell obstacle in the middle row
        let w = 10;
        let h = 5;
        let mut occ = vec![false; w * h];
        occ[2 * w + 4] = true;
        occ[2 * w + 5] = true;
        GridMap::from_occupancy(w, h, 0.4, occ).unwrap()
    }

    #[test]
    fn groups_and_node_means() {
        let cells = decompose(&strip_map()).unwrap();
        let g = build_network(&cells, NetworkParams::default()).unwrap();
        // each side boundary is 4 cells * 0.4 = 1.6 m -> 2 positions, one node
        assert_eq!(cells.boundaries().len(), 4);
        assert_eq!(g.nodes.len(), 4);
        for n in &g.nodes {
            assert_eq!(n.capacity, 2);
            let m = mean(
                &n.members
                    .iter()
                    .map(|&p| g.pos(p).position)
                    .collect::<Vec<_>>(),
            );
            assert!(m.distance(n.position) < 1e-9);
        }
        // cells 1 and 2 each have one lower and one upper node
        assert_eq!(g.links.len(), 2);
    }

    #[test]
    fn five_positions_group_into_four_and_one() {
        // bottom row split at column 10 merges into a full row above: the
        // left boundary is 10 cells * 0.4 m = 4.0 m, the right one 0.4 m
        let w = 12;
        let mut occ = vec![false; w * 2];
        occ[10] = true;
        let map = GridMap::from_occupancy(w, 2, 0.4, occ).unwrap();
        let cells = decompose(&map).unwrap();
        assert_eq!(cells.len(), 3);
        let lengths: Vec<f64> = cells.boundaries().iter().map(|b| b.length).collect();
        assert!((lengths[0] - 4.0).abs() < 1e-9);
        assert!((lengths[1] - 0.4).abs() < 1e-9);

        let g = build_network(&cells, NetworkParams::default()).unwrap();
        assert_eq!(g.positions.len(), 5);
        let caps: Vec<u32> = g.nodes.iter().map(|n| n.capacity).collect();
        assert_eq!(caps, vec![4, 1]);
        // positions at 0.4, 1.2, 2.0, 2.8 | 3.6
        assert!((g.nodes[0].position.x - 1.6).abs() < 1e-9);
        assert!((g.nodes[1].position.x - 3.6).abs() < 1e-9);
    }

    #[test]
    fn bipartite_links_per_cell() {
        let cells = vec![
            NodeSpec {
                members: vec![Vec2::new(0.0, 0.0)],
                below: CellId(0),
                above: CellId(1),
            },
            NodeSpec {
                members: vec![Vec2::new(2.0, 0.0)],
                below: CellId(0),
                above: CellId(1),
            },
        ];
        let mut specs = cells;
        for x in [0.0, 1.0, 2.0] {
            specs.push(NodeSpec {
                members: vec![Vec2::new(x, 2.0)],
                below: CellId(1),
                above: CellId(2),
            });
        }
        let mut links = Vec::new();
        for a in 0..2 {
            for b in 2..5 {
                links.push((NodeId(a), NodeId(b), 1));
            }
        }
        let g = NetGraph::from_parts(3, &specs, &links).unwrap();
        assert_eq!(g.links.len(), 6);
        assert_eq!(g.dn(CellId(1)).len(), 2);
        assert_eq!(g.up(CellId(1)).len(), 3);
        assert!(NetGraph::from_parts(3, &specs, &[(NodeId(2), NodeId(0), 1)]).is_err());
    }

    #[test]
    fn dijkstra_identity_and_unreachable() {
        let specs = vec![
            NodeSpec {
                members: vec![Vec2::new(0.0, 0.0)],
                below: CellId(0),
                above: CellId(1),
            },
            NodeSpec {
                members: vec![Vec2::new(0.0, 1.0)],
                below: CellId(1),
                above: CellId(2),
            },
        ];
        let g = NetGraph::from_parts(3, &specs, &[(NodeId(0), NodeId(1), 1)]).unwrap();
        assert_eq!(dijkstra(&g, NodeId(0), NodeId(0)), vec![NodeId(0)]);
        assert_eq!(dijkstra(&g, NodeId(0), NodeId(1)), vec![NodeId(0), NodeId(1)]);
        assert!(dijkstra(&g, NodeId(1), NodeId(0)).is_empty());
    }

    #[test]
    fn invalid_params_rejected() {
        let cells = decompose(&GridMap::empty(2, 2, 1.0).unwrap()).unwrap();
        let bad = NetworkParams {
            alpha: 0.5,
            ..NetworkParams::default()
        };
        assert!(build_network(&cells, bad).is_err());
    }
}
