//! Single-integrator robots with reciprocal collision avoidance.
//!
//! Robot-robot avoidance follows the ORCA half-plane construction with the
//! usual incremental 2-D linear programs. Static obstacles add one half-plane
//! per nearby occupied grid cell (and per map border): with `q` the closest
//! point of the cell to the robot, `n` the unit direction from `q` to the
//! robot and `d` the distance, the velocity must satisfy
//! `v . n >= -(d - r) / tau_o`. The cell is convex, so a step of length
//! `h < tau_o` can never close more than `(d - r) * h / tau_o` of the gap.
//! Obstacle half-planes always admit `v = 0` and are kept hard when the agent
//! constraints become infeasible.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::geom::{floor, Rect, Vec2};
use crate::gridmap::{GridMap, NEIGHBORS_8};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub id: usize,
    pub position: Vec2,
    pub velocity: Vec2,
    pub arrived: bool,
}

impl RobotState {
    pub fn at(id: usize, position: Vec2) -> Self {
        RobotState {
            id,
            position,
            velocity: Vec2::ZERO,
            arrived: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionLimits {
    pub v_max: f64,
    /// Minimum center-to-center distance between robots.
    pub r_min: f64,
    /// ORCA look-ahead between robots, seconds.
    pub rvo_time_horizon: f64,
    pub rvo_neighbor_radius: f64,
    pub max_neighbors: usize,
    /// Look-ahead against static obstacles, seconds.
    pub obstacle_time_horizon: f64,
    /// Padding added to the `r_min / 2` disc radius.
    pub radius_margin: f64,
}

impl Default for MotionLimits {
    fn default() -> Self {
        MotionLimits {
            v_max: 3.0,
            r_min: 0.4,
            rvo_time_horizon: 2.0,
            rvo_neighbor_radius: 3.0,
            max_neighbors: 10,
            obstacle_time_horizon: 0.5,
            radius_margin: 0.02,
        }
    }
}

impl MotionLimits {
    /// Disc radius used for avoidance.
    pub fn agent_radius(&self) -> f64 {
        0.5 * self.r_min + self.radius_margin
    }

    pub fn is_valid(&self) -> bool {
        [
            self.v_max,
            self.r_min,
            self.rvo_time_horizon,
            self.rvo_neighbor_radius,
            self.obstacle_time_horizon,
        ]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite())
            && self.radius_margin >= 0.0
            && self.max_neighbors > 0
    }
}

/// `p(t + h) = p(t) + h v(t)`.
pub fn integrate(s: &RobotState, v: Vec2, h: f64) -> RobotState {
    RobotState {
        position: s.position + v * h,
        velocity: v,
        ..*s
    }
}

/// Full speed toward `target`, or exactly onto it when it is within one step.
pub fn preferred_velocity(position: Vec2, target: Vec2, v_max: f64, h: f64) -> Vec2 {
    let to = target - position;
    let dist = to.length();
    if dist <= v_max * h {
        to / h
    } else {
        to * (v_max / dist)
    }
}

/// Half-plane in velocity space; feasible velocities lie to the left of
/// `direction` through `point`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub point: Vec2,
    pub direction: Vec2,
}

impl Line {
    /// `{ v : v . n >= b }` for unit `n`.
    pub fn at_least(n: Vec2, b: f64) -> Self {
        Line {
            point: n * b,
            direction: Vec2::new(n.y, -n.x),
        }
    }

    /// Positive when `v` lies on the infeasible side.
    pub fn violation(&self, v: Vec2) -> f64 {
        self.direction.det(self.point - v)
    }
}

const LP_EPSILON: f64 = 1e-9;

fn lp1(lines: &[Line], idx: usize, opt: Vec2, radius: f64, direction_opt: bool) -> Option<Vec2> {
    let line = &lines[idx];
    let dot = line.point.dot(line.direction);
    let disc = dot * dot + radius * radius - line.point.length_squared();
    if disc < 0.0 {
        return None;
    }
    let sq = crate::geom::sqrt(disc);
    let mut t_left = -dot - sq;
    let mut t_right = -dot + sq;
    for prior in &lines[..idx] {
        let denom = line.direction.det(prior.direction);
        let numer = prior.direction.det(line.point - prior.point);
        if denom.abs() <= LP_EPSILON {
            if numer < 0.0 {
                return None;
            }
            continue;
        }
        let t = numer / denom;
        if denom >= 0.0 {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right {
            return None;
        }
    }
    let t = if direction_opt {
        if opt.dot(line.direction) > 0.0 {
            t_right
        } else {
            t_left
        }
    } else {
        line.direction.dot(opt - line.point).clamp(t_left, t_right)
    };
    Some(line.point + line.direction * t)
}

/// Returns the index of the first line that could not be satisfied
/// (`lines.len()` on success) and writes the best velocity to `result`.
fn lp2(lines: &[Line], radius: f64, opt: Vec2, direction_opt: bool, result: &mut Vec2) -> usize {
    *result = if direction_opt {
        opt * radius
    } else if opt.length_squared() > radius * radius {
        opt.normalize_or_zero() * radius
    } else {
        opt
    };
    for i in 0..lines.len() {
        if lines[i].violation(*result) > 0.0 {
            let prev = *result;
            match lp1(lines, i, opt, radius, direction_opt) {
                Some(v) => *result = v,
                None => {
                    *result = prev;
                    return i;
                }
            }
        }
    }
    lines.len()
}

/// Minimizes the largest violation over lines `begin..`, keeping the first
/// `hard` lines satisfied.
fn lp3(lines: &[Line], hard: usize, begin: usize, radius: f64, result: &mut Vec2) {
    let mut distance = 0.0;
    let mut proj: Vec<Line> = Vec::with_capacity(lines.len());
    for i in begin..lines.len() {
        if lines[i].violation(*result) <= distance {
            continue;
        }
        proj.clear();
        proj.extend_from_slice(&lines[..hard]);
        for j in hard..i {
            let det = lines[i].direction.det(lines[j].direction);
            let point = if det.abs() <= LP_EPSILON {
                if lines[i].direction.dot(lines[j].direction) > 0.0 {
                    continue;
                }
                (lines[i].point + lines[j].point) * 0.5
            } else {
                lines[i].point
                    + lines[i].direction
                        * (lines[j].direction.det(lines[i].point - lines[j].point) / det)
            };
            proj.push(Line {
                point,
                direction: (lines[j].direction - lines[i].direction).normalize_or_zero(),
            });
        }
        let temp = *result;
        let opt = Vec2::new(-lines[i].direction.y, lines[i].direction.x);
        if lp2(&proj, radius, opt, true, result) < proj.len() {
            *result = temp;
        }
        distance = lines[i].violation(*result);
    }
}

/// Velocity closest to `preferred` inside the speed disc and the half-planes.
/// The first `hard` lines are never traded off.
pub fn solve_velocity(lines: &[Line], hard: usize, preferred: Vec2, v_max: f64) -> Vec2 {
    let mut result = Vec2::ZERO;
    let fail = lp2(lines, v_max, preferred, false, &mut result);
    if fail < lines.len() {
        lp3(lines, hard, fail, v_max, &mut result);
    }
    let len = result.length();
    if len > v_max {
        result = result * (v_max / len);
    }
    result
}

/// ORCA half-plane for agent `a` against `b`, each taking half the effort.
pub fn orca_line(
    a_pos: Vec2,
    a_vel: Vec2,
    b_pos: Vec2,
    b_vel: Vec2,
    combined_radius: f64,
    time_horizon: f64,
    h: f64,
) -> Line {
    let rel_pos = b_pos - a_pos;
    let rel_vel = a_vel - b_vel;
    let dist_sq = rel_pos.length_squared();
    let r_sq = combined_radius * combined_radius;
    let inv_tau = 1.0 / time_horizon;
    let (direction, u);
    if dist_sq > r_sq {
        let w = rel_vel - rel_pos * inv_tau;
        let w_len_sq = w.length_squared();
        let dot1 = w.dot(rel_pos);
        if dot1 < 0.0 && dot1 * dot1 > r_sq * w_len_sq {
            // cut-off circle
            let w_len = crate::geom::sqrt(w_len_sq);
            let unit_w = w / w_len;
            direction = Vec2::new(unit_w.y, -unit_w.x);
            u = unit_w * (combined_radius * inv_tau - w_len);
        } else {
            let leg = crate::geom::sqrt(dist_sq - r_sq);
            if rel_pos.det(w) > 0.0 {
                direction = Vec2::new(
                    rel_pos.x * leg - rel_pos.y * combined_radius,
                    rel_pos.x * combined_radius + rel_pos.y * leg,
                ) / dist_sq;
            } else {
                direction = -Vec2::new(
                    rel_pos.x * leg + rel_pos.y * combined_radius,
                    -rel_pos.x * combined_radius + rel_pos.y * leg,
                ) / dist_sq;
            }
            u = direction * rel_vel.dot(direction) - rel_vel;
        }
    } else {
        // already overlapping: separate within one step
        let inv_h = 1.0 / h;
        let w = rel_vel - rel_pos * inv_h;
        let w_len = w.length();
        let unit_w = if w_len > 0.0 {
            w / w_len
        } else {
            (-rel_pos).normalize_or_zero()
        };
        direction = Vec2::new(unit_w.y, -unit_w.x);
        u = unit_w * (combined_radius * inv_h - w_len);
    }
    Line {
        point: a_vel + u * 0.5,
        direction,
    }
}

/// Occupied cells next to free space, bucketed by the free cell they can
/// affect, plus the map border.
#[derive(Debug, Clone)]
pub struct ObstacleField {
    bounds: Rect,
    resolution: f64,
    origin: Vec2,
    width: usize,
    height: usize,
    /// Per grid cell, the boundary obstacle rectangles within reach.
    near: Vec<Vec<Rect>>,
    reach: f64,
}

impl ObstacleField {
    pub fn new(map: &GridMap, lim: &MotionLimits) -> Self {
        let reach = lim.agent_radius() + lim.v_max * lim.obstacle_time_horizon;
        let (w, h) = (map.width(), map.height());
        let res = map.resolution();
        let mut boundary = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if !map.is_occupied(x, y) {
                    continue;
                }
                let (xi, yi) = (x as isize, y as isize);
                let exposed = [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|(dx, dy)| {
                    let (nx, ny) = (xi + dx, yi + dy);
                    nx >= 0
                        && ny >= 0
                        && (nx as usize) < w
                        && (ny as usize) < h
                        && !map.is_occupied(nx as usize, ny as usize)
                });
                if exposed {
                    boundary.push((x, y));
                }
            }
        }
        let span = (reach / res) as isize + 2;
        let mut near = vec![Vec::new(); w * h];
        for &(ox, oy) in &boundary {
            let rect = map.cell_rect(ox, oy);
            for dy in -span..=span {
                for dx in -span..=span {
                    let (x, y) = (ox as isize + dx, oy as isize + dy);
                    if x < 0 || y < 0 || x as usize >= w || y as usize >= h {
                        continue;
                    }
                    let (x, y) = (x as usize, y as usize);
                    if map.is_occupied(x, y) {
                        continue;
                    }
                    let cell = map.cell_rect(x, y);
                    if rect_gap(&rect, &cell) <= reach {
                        near[y * w + x].push(rect);
                    }
                }
            }
        }
        ObstacleField {
            bounds: map.bounds(),
            resolution: res,
            origin: map.origin(),
            width: w,
            height: h,
            near,
            reach,
        }
    }

    fn near(&self, p: Vec2) -> &[Rect] {
        let fx = floor((p.x - self.origin.x) / self.resolution);
        let fy = floor((p.y - self.origin.y) / self.resolution);
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return &[];
        }
        &self.near[fy as usize * self.width + fx as usize]
    }

    /// Obstacle half-planes for a robot at `p`.
    pub fn lines(&self, p: Vec2, radius: f64, tau: f64, out: &mut Vec<Line>) {
        let mut push = |n: Vec2, d: f64| {
            if d < self.reach {
                out.push(Line::at_least(n, -(d - radius) / tau));
            }
        };
        let b = &self.bounds;
        push(Vec2::new(1.0, 0.0), p.x - b.min.x);
        push(Vec2::new(-1.0, 0.0), b.max.x - p.x);
        push(Vec2::new(0.0, 1.0), p.y - b.min.y);
        push(Vec2::new(0.0, -1.0), b.max.y - p.y);
        for rect in self.near(p) {
            let q = rect.closest_point(p);
            let diff = p - q;
            let d = diff.length();
            if d > 0.0 {
                push(diff / d, d);
            }
        }
    }

    /// Distance from `p` to the nearest obstacle cell or border.
    pub fn clearance(&self, p: Vec2) -> f64 {
        let b = &self.bounds;
        let mut best = (p.x - b.min.x)
            .min(b.max.x - p.x)
            .min(p.y - b.min.y)
            .min(b.max.y - p.y);
        for rect in self.near(p) {
            best = best.min(rect.closest_point(p).distance(p));
        }
        best
    }
}

fn rect_gap(a: &Rect, b: &Rect) -> f64 {
    let dx = (a.min.x - b.max.x).max(b.min.x - a.max.x).max(0.0);
    let dy = (a.min.y - b.max.y).max(b.min.y - a.max.y).max(0.0);
    crate::geom::sqrt(dx * dx + dy * dy)
}

/// Uniform bucket grid over robot positions for neighbor queries.
#[derive(Debug, Clone, Default)]
struct SpatialHash {
    cell: f64,
    origin: Vec2,
    cols: usize,
    rows: usize,
    heads: Vec<Vec<usize>>,
}

impl SpatialHash {
    fn rebuild(&mut self, states: &[RobotState], cell: f64) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for s in states {
            lo = Vec2::new(lo.x.min(s.position.x), lo.y.min(s.position.y));
            hi = Vec2::new(hi.x.max(s.position.x), hi.y.max(s.position.y));
        }
        self.cell = cell;
        self.origin = lo;
        self.cols = ((hi.x - lo.x) / cell) as usize + 1;
        self.rows = ((hi.y - lo.y) / cell) as usize + 1;
        for b in &mut self.heads {
            b.clear();
        }
        self.heads.resize(self.cols * self.rows, Vec::new());
        for (i, s) in states.iter().enumerate() {
            let (cx, cy) = self.bucket(s.position);
            self.heads[cy * self.cols + cx].push(i);
        }
    }

    fn bucket(&self, p: Vec2) -> (usize, usize) {
        let cx = ((p.x - self.origin.x) / self.cell) as usize;
        let cy = ((p.y - self.origin.y) / self.cell) as usize;
        (cx.min(self.cols - 1), cy.min(self.rows - 1))
    }

    /// Indices within `radius` of `states[me]`, nearest first (id breaks
    /// ties), at most `k`.
    fn query(
        &self,
        states: &[RobotState],
        me: usize,
        radius: f64,
        k: usize,
        out: &mut Vec<(f64, usize)>,
    ) {
        out.clear();
        let p = states[me].position;
        let (cx, cy) = self.bucket(p);
        let r_sq = radius * radius;
        for by in cy.saturating_sub(1)..=(cy + 1).min(self.rows - 1) {
            for bx in cx.saturating_sub(1)..=(cx + 1).min(self.cols - 1) {
                for &j in &self.heads[by * self.cols + bx] {
                    if j == me {
                        continue;
                    }
                    let d = states[j].position.distance_squared(p);
                    if d < r_sq {
                        out.push((d, j));
                    }
                }
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out.truncate(k);
    }
}

/// Reusable buffers for [`Avoidance::step`].
#[derive(Debug, Clone, Default)]
pub struct Avoidance {
    hash: SpatialHash,
    neighbors: Vec<(f64, usize)>,
    lines: Vec<Line>,
    tick: u64,
}

impl Avoidance {
    pub fn new() -> Self {
        Avoidance::default()
    }

    /// New velocity for every robot from one snapshot of `all`.
    pub fn step(
        &mut self,
        all: &[RobotState],
        targets: &[Vec2],
        obstacles: &ObstacleField,
        lim: &MotionLimits,
        h: f64,
    ) -> Vec<Vec2> {
        if all.is_empty() {
            return Vec::new();
        }
        self.hash.rebuild(all, lim.rvo_neighbor_radius);
        self.tick += 1;
        let radius = lim.agent_radius();
        let mut out = Vec::with_capacity(all.len());
        for (i, s) in all.iter().enumerate() {
            let mut pref = preferred_velocity(s.position, targets[i], lim.v_max, h);
            self.lines.clear();
            obstacles.lines(s.position, radius, lim.obstacle_time_horizon, &mut self.lines);
            let hard = self.lines.len();
            self.hash.query(
                all,
                i,
                lim.rvo_neighbor_radius,
                lim.max_neighbors,
                &mut self.neighbors,
            );
            if !self.neighbors.is_empty() && s.velocity.length() < STALL * pref.length() {
                // a small sideways nudge keeps stalled, exactly collinear
                // agents from locking up against each other
                pref += Vec2::new(-pref.y, pref.x) * (NUDGE * unit_noise(i as u64, self.tick));
            }
            for &(_, j) in &self.neighbors {
                let o = &all[j];
                self.lines.push(orca_line(
                    s.position,
                    s.velocity,
                    o.position,
                    o.velocity,
                    2.0 * radius,
                    lim.rvo_time_horizon,
                    h,
                ));
            }
            out.push(solve_velocity(&self.lines, hard, pref, lim.v_max));
        }
        out
    }
}

/// Relative size of the sideways nudge added to preferred velocities.
const NUDGE: f64 = 0.02;

/// A robot counts as stalled below this fraction of its preferred speed.
const STALL: f64 = 0.25;

/// Deterministic value in `[-1, 1)` from a robot index and a tick.
fn unit_noise(i: u64, tick: u64) -> f64 {
    let mut z = i.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ tick.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

/// One-shot form of [`Avoidance::step`].
pub fn rvo_step(
    all: &[RobotState],
    targets: &[Vec2],
    obstacles: &ObstacleField,
    lim: &MotionLimits,
    h: f64,
) -> Vec<Vec2> {
    Avoidance::new().step(all, targets, obstacles, lim, h)
}

/// Picks an intermediate aim point when the straight line to a target is
/// blocked, by descending a grid distance field toward the target. Cells of
/// the decomposition are not convex, so aiming straight at a network position
/// can park a robot under an overhang.
#[derive(Debug, Default)]
pub struct Steering {
    fields: BTreeMap<(u64, u64), Vec<f32>>,
}

/// Cells walked along the descent before picking the aim point.
const LOOKAHEAD: usize = 8;

impl Steering {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cached_fields(&self) -> usize {
        self.fields.len()
    }

    fn field(&mut self, map: &GridMap, target: Vec2) -> &[f32] {
        self.fields
            .entry((target.x.to_bits(), target.y.to_bits()))
            .or_insert_with(|| {
                let eps = 1e-6 * map.resolution();
                let mut seeds = Vec::new();
                for d in [Vec2::ZERO, Vec2::new(eps, 0.0), Vec2::new(-eps, 0.0), Vec2::new(0.0, eps), Vec2::new(0.0, -eps)] {
                    if let Some(c) = map.cell_at(target + d) {
                        if !map.is_occupied(c.0, c.1) && !seeds.contains(&c) {
                            seeds.push(c);
                        }
                    }
                }
                map.distance_field(&seeds).into_iter().map(|d| d as f32).collect()
            })
    }

    /// Point to head for on the way from `p` to `target` for a disc of
    /// `radius`.
    pub fn aim(&mut self, map: &GridMap, p: Vec2, target: Vec2, radius: f64) -> Vec2 {
        if clear_path(map, p, target, radius) {
            return target;
        }
        let Some(start) = map.cell_at(p) else {
            return target;
        };
        let w = map.width();
        let field = self.field(map, target);
        let mut cur = start;
        let mut best = None;
        let mut first = None;
        for _ in 0..LOOKAHEAD {
            let here = field[cur.1 * w + cur.0];
            if !here.is_finite() || here == 0.0 {
                break;
            }
            let mut next = None;
            let mut next_d = here;
            for (dx, dy) in NEIGHBORS_8 {
                let (x, y) = (cur.0 as isize + dx, cur.1 as isize + dy);
                if map.is_blocked(x, y)
                    || (dx != 0 && dy != 0 && (map.is_blocked(cur.0 as isize + dx, cur.1 as isize) || map.is_blocked(cur.0 as isize, cur.1 as isize + dy)))
                {
                    continue;
                }
                let d = field[y as usize * w + x as usize];
                if d < next_d {
                    next_d = d;
                    next = Some((x as usize, y as usize));
                }
            }
            let Some(n) = next else { break };
            cur = n;
            let c = map.cell_center(n.0, n.1);
            first.get_or_insert(c);
            if clear_path(map, p, c, radius) {
                best = Some(c);
            }
        }
        best.or(first).unwrap_or(target)
    }
}

/// Whether a disc of `radius` can slide from `a` to `b` without touching an
/// occupied cell, checked along the center line and both flanks.
pub fn clear_path(map: &GridMap, a: Vec2, b: Vec2, radius: f64) -> bool {
    let d = b - a;
    let len = d.length();
    if len < 1e-12 {
        return map.is_free(a);
    }
    let side = Vec2::new(-d.y, d.x) * (radius / len);
    let steps = (len / (0.25 * map.resolution())) as usize + 1;
    for k in 0..=steps {
        let q = a + d * (k as f64 / steps as f64);
        if !map.is_free(q) || !map.is_free(q + side) || !map.is_free(q - side) {
            return false;
        }
    }
    true
}
