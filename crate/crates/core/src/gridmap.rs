//! Occupancy grid maps and the forest / maze generators.
//!
//! Cell `(x, y)` covers the half-open square
//! `[ox + x*res, ox + (x+1)*res) x [oy + y*res, oy + (y+1)*res)`. Row `y = 0`
//! is the bottom of the map; robots travel upward, from the start band to the
//! goal band.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::{floor, round, Rect, Vec2};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapError {
    #[error("map dimensions must be positive (got {width}x{height}, resolution {resolution})")]
    InvalidDimensions {
        width: usize,
        height: usize,
        resolution: f64,
    },
    #[error("occupancy has {got} cells, expected {expected}")]
    OccupancySize { expected: usize, got: usize },
    #[error("{0} band does not fit inside the map")]
    BandOutOfBounds(&'static str),
    #[error("generator could not connect start band to goal band after {attempts} attempts")]
    Disconnected { attempts: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Vec2,
    occupancy: Vec<bool>,
}

impl GridMap {
    /// An obstacle-free map.
    pub fn empty(width: usize, height: usize, resolution: f64) -> Result<Self, MapError> {
        Self::from_occupancy(width, height, resolution, vec![false; width * height])
    }

    /// Builds a map from row-major occupancy, row 0 at the bottom.
    pub fn from_occupancy(
        width: usize,
        height: usize,
        resolution: f64,
        occupancy: Vec<bool>,
    ) -> Result<Self, MapError> {
        if width == 0 || height == 0 || !(resolution > 0.0) || !resolution.is_finite() {
            return Err(MapError::InvalidDimensions {
                width,
                height,
                resolution,
            });
        }
        if occupancy.len() != width * height {
            return Err(MapError::OccupancySize {
                expected: width * height,
                got: occupancy.len(),
            });
        }
        Ok(GridMap {
            width,
            height,
            resolution,
            origin: Vec2::ZERO,
            occupancy,
        })
    }

    pub fn with_origin(mut self, origin: Vec2) -> Self {
        self.origin = origin;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    /// World-space extent of the whole map.
    pub fn bounds(&self) -> Rect {
        Rect {
            min: self.origin,
            max: self.origin
                + Vec2::new(
                    self.width as f64 * self.resolution,
                    self.height as f64 * self.resolution,
                ),
        }
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn is_occupied(&self, x: usize, y: usize) -> bool {
        self.occupancy[self.index(x, y)]
    }

    /// Occupancy with everything outside the grid treated as obstacle.
    pub fn is_blocked(&self, x: isize, y: isize) -> bool {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return true;
        }
        self.is_occupied(x as usize, y as usize)
    }

    pub fn set_occupied(&mut self, x: usize, y: usize, occupied: bool) {
        let i = self.index(x, y);
        self.occupancy[i] = occupied;
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    pub fn free_count(&self) -> usize {
        self.occupancy.len() - self.occupied_count()
    }

    /// Grid cell containing `p` under the half-open convention, if inside.
    pub fn cell_at(&self, p: Vec2) -> Option<(usize, usize)> {
        let fx = floor((p.x - self.origin.x) / self.resolution);
        let fy = floor((p.y - self.origin.y) / self.resolution);
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn is_free(&self, p: Vec2) -> bool {
        match self.cell_at(p) {
            Some((x, y)) => !self.is_occupied(x, y),
            None => false,
        }
    }

    pub fn cell_rect(&self, x: usize, y: usize) -> Rect {
        let min = self.origin + Vec2::new(x as f64, y as f64) * self.resolution;
        Rect {
            min,
            max: min + Vec2::new(self.resolution, self.resolution),
        }
    }

    pub fn cell_center(&self, x: usize, y: usize) -> Vec2 {
        self.origin + Vec2::new(x as f64 + 0.5, y as f64 + 0.5) * self.resolution
    }

    /// Grid cells whose centers lie inside `band`, row-major from the bottom.
    pub fn cells_in(&self, band: &Rect) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if band.contains(self.cell_center(x, y)) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// 4-connected flood fill over free cells from `seeds`.
    pub fn flood_fill(&self, seeds: &[(usize, usize)]) -> Vec<bool> {
        let mut seen = vec![false; self.width * self.height];
        let mut queue = VecDeque::new();
        for &(x, y) in seeds {
            if !self.is_occupied(x, y) && !seen[self.index(x, y)] {
                seen[self.index(x, y)] = true;
                queue.push_back((x, y));
            }
        }
        while let Some((x, y)) = queue.pop_front() {
            for (dx, dy) in [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)] {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if self.is_blocked(nx, ny) {
                    continue;
                }
                let i = self.index(nx as usize, ny as usize);
                if !seen[i] {
                    seen[i] = true;
                    queue.push_back((nx as usize, ny as usize));
                }
            }
        }
        seen
    }

    /// Octile distance (in cells) from the nearest seed to every free cell
    /// over 8-connected moves that never cut an occupied corner. Unreachable
    /// and occupied cells hold infinity.
    pub fn distance_field(&self, seeds: &[(usize, usize)]) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.width * self.height];
        let mut heap = BinaryHeap::new();
        for &(x, y) in seeds {
            if !self.is_occupied(x, y) {
                dist[self.index(x, y)] = 0.0;
                heap.push(FieldEntry(0.0, self.index(x, y)));
            }
        }
        while let Some(FieldEntry(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            let (x, y) = ((u % self.width) as isize, (u / self.width) as isize);
            for (dx, dy) in NEIGHBORS_8 {
                let (nx, ny) = (x + dx, y + dy);
                if self.is_blocked(nx, ny) {
                    continue;
                }
                let diagonal = dx != 0 && dy != 0;
                if diagonal && (self.is_blocked(x + dx, y) || self.is_blocked(x, y + dy)) {
                    continue;
                }
                let nd = d + if diagonal { core::f64::consts::SQRT_2 } else { 1.0 };
                let v = self.index(nx as usize, ny as usize);
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(FieldEntry(nd, v));
                }
            }
        }
        dist
    }

    /// Free cells from which some goal cell is reachable using only
    /// up/left/right moves. This is the travel model the network planner
    /// supports.
    pub fn monotone_reach(&self, goals: &[(usize, usize)]) -> Vec<bool> {
        let mut reach = vec![false; self.width * self.height];
        for &(x, y) in goals {
            if !self.is_occupied(x, y) {
                reach[self.index(x, y)] = true;
            }
        }
        for y in (0..self.height).rev() {
            let mut x = 0;
            while x < self.width {
                if self.is_occupied(x, y) {
                    x += 1;
                    continue;
                }
                let start = x;
                while x < self.width && !self.is_occupied(x, y) {
                    x += 1;
                }
                let hit = (start..x).any(|cx| {
                    reach[self.index(cx, y)]
                        || (y + 1 < self.height && reach[self.index(cx, y + 1)])
                });
                if hit {
                    for cx in start..x {
                        let i = self.index(cx, y);
                        reach[i] = true;
                    }
                }
            }
        }
        reach
    }
}

pub(crate) const NEIGHBORS_8: [(isize, isize); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (-1, 1),
    (1, -1),
    (-1, -1),
];

#[derive(Debug, Clone, Copy, PartialEq)]
struct FieldEntry(f64, usize);

impl Eq for FieldEntry {}

impl Ord for FieldEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for FieldEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapFamily {
    /// Randomly placed rectangular obstacles covering `obstacle_density` of
    /// the area between the bands.
    Forest { obstacle_density: f64 },
    /// Recursive-division walls with openings `corridor_width_m` wide.
    Maze { corridor_width_m: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapGenConfig {
    pub family: MapFamily,
    pub seed: u64,
    /// (width, height) in meters.
    pub size_m: (f64, f64),
    pub resolution: f64,
    pub start_band: Rect,
    pub goal_band: Rect,
}

pub const DESK_SIZE_M: (f64, f64) = (40.0, 60.0);
pub const DESK_FOREST_DENSITY: f64 = 0.2;
pub const DESK_MAZE_CORRIDOR_M: f64 = 3.0;

impl MapGenConfig {
    /// Bands span the full width: the bottom 8 m for starts, the top 8 m for
    /// goals.
    pub fn with_size(family: MapFamily, seed: u64, size_m: (f64, f64)) -> Self {
        let (w, h) = size_m;
        let band = (h * 0.15).min(8.0);
        MapGenConfig {
            family,
            seed,
            size_m,
            resolution: 1.0,
            start_band: Rect::new(0.0, 0.0, w, band),
            goal_band: Rect::new(0.0, h - band, w, h),
        }
    }

    pub fn desk_forest(seed: u64) -> Self {
        Self::with_size(
            MapFamily::Forest {
                obstacle_density: DESK_FOREST_DENSITY,
            },
            seed,
            DESK_SIZE_M,
        )
    }

    pub fn desk_maze(seed: u64) -> Self {
        Self::with_size(
            MapFamily::Maze {
                corridor_width_m: DESK_MAZE_CORRIDOR_M,
            },
            seed,
            DESK_SIZE_M,
        )
    }
}

const MAX_ATTEMPTS: u32 = 16;

/// Generates a map and verifies that every start-band cell reaches the goal
/// band, both by 4-connected flood fill and by upward-monotone travel.
pub fn generate_map(cfg: &MapGenConfig) -> Result<GridMap, MapError> {
    let width = round(cfg.size_m.0 / cfg.resolution) as usize;
    let height = round(cfg.size_m.1 / cfg.resolution) as usize;
    let base = GridMap::empty(width, height, cfg.resolution)?;
    let bounds = base.bounds();
    for (name, band) in [("start", &cfg.start_band), ("goal", &cfg.goal_band)] {
        if band.min.x < bounds.min.x
            || band.min.y < bounds.min.y
            || band.max.x > bounds.max.x
            || band.max.y > bounds.max.y
            || base.cells_in(band).is_empty()
        {
            return Err(MapError::BandOutOfBounds(name));
        }
    }

    let start_cells = base.cells_in(&cfg.start_band);
    let goal_cells = base.cells_in(&cfg.goal_band);
    let rows = obstacle_rows(&start_cells, &goal_cells, height);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for attempt in 1..=MAX_ATTEMPTS {
        let mut map = base.clone();
        match cfg.family {
            MapFamily::Forest { obstacle_density } => {
                fill_forest(&mut map, rows, obstacle_density, &start_cells, &goal_cells, &mut rng)
            }
            MapFamily::Maze { corridor_width_m } => {
                let cw = (round(corridor_width_m / cfg.resolution) as usize).max(1);
                fill_maze(&mut map, rows, cw, &mut rng)
            }
        }
        if bands_connected(&map, &start_cells, &goal_cells) {
            return Ok(map);
        }
        log::debug!("map generation attempt {attempt} disconnected, retrying");
    }
    Err(MapError::Disconnected {
        attempts: MAX_ATTEMPTS,
    })
}

/// Rows strictly between the top of the start band and the bottom of the goal
/// band, leaving one free row next to each band.
fn obstacle_rows(
    start: &[(usize, usize)],
    goal: &[(usize, usize)],
    height: usize,
) -> (usize, usize) {
    let start_top = start.iter().map(|c| c.1).max().unwrap_or(0);
    let goal_bottom = goal.iter().map(|c| c.1).min().unwrap_or(height);
    let lo = start_top + 2;
    let hi = goal_bottom.saturating_sub(1);
    (lo, hi.max(lo))
}

/// Every start cell reaches some goal cell, under 4-connected flood fill and
/// under monotone upward travel.
pub fn bands_connected(map: &GridMap, start: &[(usize, usize)], goal: &[(usize, usize)]) -> bool {
    let flood = map.flood_fill(goal);
    let mono = map.monotone_reach(goal);
    start.iter().all(|&(x, y)| {
        let i = y * map.width() + x;
        !map.is_occupied(x, y) && flood[i] && mono[i]
    })
}

fn fill_forest(
    map: &mut GridMap,
    (lo, hi): (usize, usize),
    density: f64,
    start: &[(usize, usize)],
    goal: &[(usize, usize)],
    rng: &mut ChaCha8Rng,
) {
    if hi <= lo || density <= 0.0 {
        return;
    }
    let area = (hi - lo) * map.width();
    let target = (density.min(1.0) * area as f64) as usize;
    let mut placed = 0;
    let mut tries = 0;
    let max_tries = 50 * target.max(1);
    while placed < target && tries < max_tries {
        tries += 1;
        let w = rng.gen_range(1..=3usize).min(map.width());
        let h = rng.gen_range(1..=3usize).min(hi - lo);
        let x0 = rng.gen_range(0..=map.width() - w);
        let y0 = rng.gen_range(lo..=hi - h);
        let fresh: Vec<(usize, usize)> = (y0..y0 + h)
            .flat_map(|y| (x0..x0 + w).map(move |x| (x, y)))
            .filter(|&(x, y)| !map.is_occupied(x, y))
            .collect();
        if fresh.is_empty() {
            continue;
        }
        for &(x, y) in &fresh {
            map.set_occupied(x, y, true);
        }
        if bands_connected(map, start, goal) {
            placed += fresh.len();
        } else {
            for &(x, y) in &fresh {
                map.set_occupied(x, y, false);
            }
        }
    }
    if placed < target {
        log::warn!("forest reached {placed} of {target} obstacle cells");
    }
}

/// Recursive division. Horizontal walls get randomly placed openings (one per
/// 16 cells of wall, at least one); vertical walls open at the bottom of their
/// chamber, which keeps every chamber crossable bottom-to-top without moving
/// down.
fn fill_maze(map: &mut GridMap, (lo, hi): (usize, usize), cw: usize, rng: &mut ChaCha8Rng) {
    if hi <= lo {
        return;
    }
    let mut stack = vec![(0usize, lo, map.width(), hi - lo)];
    while let Some((x0, y0, w, h)) = stack.pop() {
        let can_h = h >= 2 * cw + 1;
        let can_v = w >= 2 * cw + 1;
        if !can_h && !can_v {
            continue;
        }
        let horizontal = match (can_h, can_v) {
            (true, false) => true,
            (false, true) => false,
            _ if h > w => true,
            _ if w > h => false,
            _ => rng.gen_bool(0.5),
        };
        if horizontal {
            let wy = rng.gen_range(y0 + cw..=y0 + h - cw - 1);
            for x in x0..x0 + w {
                map.set_occupied(x, wy, true);
            }
            let openings = 1 + w / 16;
            for _ in 0..openings {
                let span = cw.min(w);
                let ox = rng.gen_range(x0..=x0 + w - span);
                for x in ox..ox + span {
                    map.set_occupied(x, wy, false);
                }
            }
            stack.push((x0, y0, w, wy - y0));
            stack.push((x0, wy + 1, w, y0 + h - wy - 1));
        } else {
            let wx = rng.gen_range(x0 + cw..=x0 + w - cw - 1);
            for y in y0 + cw.min(h)..y0 + h {
                map.set_occupied(wx, y, true);
            }
            stack.push((x0, y0, wx - x0, h));
            stack.push((wx + 1, y0, x0 + w - wx - 1, h));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_open_cell_ownership() {
        let mut map = GridMap::empty(3, 2, 0.5).unwrap();
        map.set_occupied(1, 0, true);
        assert!(!map.is_free(Vec2::new(0.75, 0.25)));
        // x = 0.5 is the left edge of cell 1, so it belongs to cell 1.
        assert!(!map.is_free(Vec2::new(0.5, 0.0)));
        // x = 1.0 is the left edge of cell 2.
        assert!(map.is_free(Vec2::new(1.0, 0.0)));
        assert!(!map.is_free(Vec2::new(1.5, 0.2)));
        assert!(!map.is_free(Vec2::new(-0.01, 0.2)));
        assert!(!map.is_free(Vec2::new(0.2, 1.0)));
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(GridMap::empty(0, 3, 1.0).is_err());
        assert!(GridMap::empty(3, 3, 0.0).is_err());
        assert!(matches!(
            GridMap::from_occupancy(2, 2, 1.0, vec![false; 3]),
            Err(MapError::OccupancySize { .. })
        ));
    }

    #[test]
    fn forest_is_deterministic_per_seed() {
        let a = generate_map(&MapGenConfig::desk_forest(1)).unwrap();
        let b = generate_map(&MapGenConfig::desk_forest(1)).unwrap();
        let c = generate_map(&MapGenConfig::desk_forest(2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.occupancy(), c.occupancy());
        assert!(a.occupied_count() > 0);
    }

    #[test]
    fn zero_density_forest_is_empty() {
        let cfg = MapGenConfig::with_size(
            MapFamily::Forest {
                obstacle_density: 0.0,
            },
            5,
            (20.0, 30.0),
        );
        let map = generate_map(&cfg).unwrap();
        assert_eq!(map.occupied_count(), 0);
    }

    #[test]
    fn maze_connects_bands_by_flood_fill() {
        let cfg = MapGenConfig::desk_maze(7);
        let map = generate_map(&cfg).unwrap();
        assert!(map.occupied_count() > 0);
        // independent BFS over the raw occupancy
        let w = map.width();
        let h = map.height();
        let occ = map.occupancy();
        let starts = map.cells_in(&cfg.start_band);
        let goals = map.cells_in(&cfg.goal_band);
        let mut seen = vec![false; w * h];
        let mut queue: VecDeque<(usize, usize)> = starts.iter().copied().collect();
        for &(x, y) in &starts {
            seen[y * w + x] = true;
        }
        while let Some((x, y)) = queue.pop_front() {
            let mut push = |nx: usize, ny: usize| {
                if !occ[ny * w + nx] && !seen[ny * w + nx] {
                    seen[ny * w + nx] = true;
                    queue.push_back((nx, ny));
                }
            };
            if x > 0 {
                push(x - 1, y);
            }
            if x + 1 < w {
                push(x + 1, y);
            }
            if y > 0 {
                push(x, y - 1);
            }
            if y + 1 < h {
                push(x, y + 1);
            }
        }
        assert!(goals.iter().any(|&(x, y)| seen[y * w + x]));
    }

    #[test]
    fn bands_out_of_bounds_is_an_error() {
        let mut cfg = MapGenConfig::desk_forest(1);
        cfg.goal_band = Rect::new(0.0, 55.0, 40.0, 70.0);
        assert_eq!(generate_map(&cfg), Err(MapError::BandOutOfBounds("goal")));
    }

    #[test]
    fn monotone_reach_blocks_pockets() {
        // 3 wide, 3 high; a cap over column 0 forces a downward move from (0,1)
        // only if (0,1) is walled on the right as well.
        let mut map = GridMap::empty(3, 3, 1.0).unwrap();
        map.set_occupied(0, 2, true);
        map.set_occupied(1, 1, true);
        map.set_occupied(1, 2, true);
        let reach = map.monotone_reach(&[(2, 2)]);
        assert!(reach[2 * 3 + 2]);
        assert!(reach[0]); // (0,0) walks right along the bottom then up
        assert!(!reach[1 * 3]); // (0,1) is a pocket
    }
}
