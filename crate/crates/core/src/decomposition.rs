//! Boustrophedon cellular decomposition on an occupancy grid.
//!
//! A horizontal sweep line moves upward one grid row at a time. Each row is
//! cut into maximal free intervals; an interval continues the cell of the
//! interval below it when the two overlap one-to-one, otherwise a split,
//! merge, in or out event closes the old cells and opens new ones.
//! Connectivity between rows is 4-connected: diagonal contact does not join
//! intervals.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::geom::Vec2;
use crate::gridmap::GridMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId(pub u32);

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.0)
    }
}

/// Free interval `[x0, x1)` of grid columns on one sweep row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub row: usize,
    pub x0: usize,
    pub x1: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn is_empty(&self) -> bool {
        self.x1 == self.x0
    }

    fn overlap(&self, other: &Span) -> Option<(usize, usize)> {
        let lo = self.x0.max(other.x0);
        let hi = self.x1.min(other.x1);
        (lo < hi).then_some((lo, hi))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: CellId,
    /// One span per sweep row, bottom to top, on consecutive rows.
    pub row_spans: Vec<Span>,
    /// Boundary ids shared with cells below.
    pub lower_boundaries: Vec<usize>,
    /// Boundary ids shared with cells above.
    pub upper_boundaries: Vec<usize>,
}

impl Cell {
    /// Area in grid cells.
    pub fn area(&self) -> usize {
        self.row_spans.iter().map(Span::len).sum()
    }

    pub fn bottom_row(&self) -> usize {
        self.row_spans[0].row
    }

    pub fn top_row(&self) -> usize {
        self.row_spans[self.row_spans.len() - 1].row
    }
}

/// Horizontal segment shared by the top row of `below` and the bottom row of
/// `above`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySegment {
    pub id: usize,
    pub below: CellId,
    pub above: CellId,
    pub start: Vec2,
    pub end: Vec2,
    pub length: f64,
    /// Row index of `above`'s bottom span; the segment lies on that row's
    /// lower edge.
    pub row: usize,
    pub x0: usize,
    pub x1: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecompositionError {
    #[error("map has no free cells")]
    NoFreeSpace,
}

#[derive(Debug, Clone)]
pub struct CellSet {
    cells: Vec<Cell>,
    boundaries: Vec<BoundarySegment>,
    cell_of: Vec<u32>,
    width: usize,
    height: usize,
    resolution: f64,
    origin: Vec2,
}

const NO_CELL: u32 = u32::MAX;

impl CellSet {
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, id: CellId) -> &Cell {
        &self.cells[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn boundaries(&self) -> &[BoundarySegment] {
        &self.boundaries
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn grid_size(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Cell owning grid cell `(x, y)`, `None` for obstacles.
    pub fn cell_of_grid(&self, x: usize, y: usize) -> Option<CellId> {
        let c = self.cell_of[y * self.width + x];
        (c != NO_CELL).then_some(CellId(c))
    }

    /// Cell containing world point `p`, using the map's half-open convention.
    pub fn locate(&self, p: Vec2) -> Option<CellId> {
        let fx = crate::geom::floor((p.x - self.origin.x) / self.resolution);
        let fy = crate::geom::floor((p.y - self.origin.y) / self.resolution);
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        self.cell_of_grid(fx as usize, fy as usize)
    }
}

fn row_intervals(map: &GridMap, y: usize) -> Vec<Span> {
    let mut out = Vec::new();
    let mut x = 0;
    while x < map.width() {
        if map.is_occupied(x, y) {
            x += 1;
            continue;
        }
        let x0 = x;
        while x < map.width() && !map.is_occupied(x, y) {
            x += 1;
        }
        out.push(Span { row: y, x0, x1: x });
    }
    out
}

pub fn decompose(map: &GridMap) -> Result<CellSet, DecompositionError> {
    if map.free_count() == 0 {
        return Err(DecompositionError::NoFreeSpace);
    }
    let mut cells: Vec<Cell> = Vec::new();
    let mut cell_of = vec![NO_CELL; map.width() * map.height()];
    let mut prev: Vec<(Span, u32)> = Vec::new();

    for y in 0..map.height() {
        let row = row_intervals(map, y);
        let mut current = Vec::with_capacity(row.len());
        for span in &row {
            let below: Vec<usize> = prev
                .iter()
                .enumerate()
                .filter(|(_, (p, _))| p.overlap(span).is_some())
                .map(|(i, _)| i)
                .collect();
            let continues = if let [only] = below[..] {
                let p = &prev[only].0;
                row.iter().filter(|s| s.overlap(p).is_some()).count() == 1
            } else {
                false
            };
            let id = if continues {
                prev[below[0]].1
            } else {
                let id = cells.len() as u32;
                cells.push(Cell {
                    id: CellId(id),
                    row_spans: Vec::new(),
                    lower_boundaries: Vec::new(),
                    upper_boundaries: Vec::new(),
                });
                id
            };
            cells[id as usize].row_spans.push(*span);
            for x in span.x0..span.x1 {
                cell_of[y * map.width() + x] = id;
            }
            current.push((*span, id));
        }
        prev = current;
    }

    let mut set = CellSet {
        cells,
        boundaries: Vec::new(),
        cell_of,
        width: map.width(),
        height: map.height(),
        resolution: map.resolution(),
        origin: map.origin(),
    };
    let boundaries = shared_boundaries(&set);
    for b in &boundaries {
        set.cells[b.below.0 as usize].upper_boundaries.push(b.id);
        set.cells[b.above.0 as usize].lower_boundaries.push(b.id);
    }
    set.boundaries = boundaries;
    Ok(set)
}

/// One segment per overlap between a cell's top span and a different cell's
/// bottom span on the next row, ordered by row then left to right.
pub fn shared_boundaries(cells: &CellSet) -> Vec<BoundarySegment> {
    let mut by_bottom: Vec<Vec<(Span, CellId)>> = vec![Vec::new(); cells.height];
    let mut by_top: Vec<Vec<(Span, CellId)>> = vec![Vec::new(); cells.height];
    for c in &cells.cells {
        let first = c.row_spans[0];
        let last = c.row_spans[c.row_spans.len() - 1];
        by_bottom[first.row].push((first, c.id));
        by_top[last.row].push((last, c.id));
    }
    let mut out = Vec::new();
    for row in 1..cells.height {
        let mut uppers = by_bottom[row].clone();
        uppers.sort_by_key(|(s, _)| s.x0);
        let mut lowers = by_top[row - 1].clone();
        lowers.sort_by_key(|(s, _)| s.x0);
        for (up, up_id) in &uppers {
            for (low, low_id) in &lowers {
                if up_id == low_id {
                    continue;
                }
                if let Some((x0, x1)) = up.overlap(low) {
                    let res = cells.resolution;
                    let yw = cells.origin.y + row as f64 * res;
                    let start = Vec2::new(cells.origin.x + x0 as f64 * res, yw);
                    let end = Vec2::new(cells.origin.x + x1 as f64 * res, yw);
                    out.push(BoundarySegment {
                        id: out.len(),
                        below: *low_id,
                        above: *up_id,
                        start,
                        end,
                        length: (x1 - x0) as f64 * res,
                        row,
                        x0,
                        x1,
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_from(rows_top_down: &[&str], res: f64) -> GridMap {
        let h = rows_top_down.len();
        let w = rows_top_down[0].len();
        let mut occ = vec![false; w * h];
        for (i, row) in rows_top_down.iter().enumerate() {
            let y = h - 1 - i;
            for (x, ch) in row.chars().enumerate() {
                occ[y * w + x] = ch == '#';
            }
        }
        GridMap::from_occupancy(w, h, res, occ).unwrap()
    }

    #[test]
    fn open_map_is_one_cell() {
        let map = GridMap::empty(6, 4, 1.0).unwrap();
        let cells = decompose(&map).unwrap();
        assert_eq!(cells.len(), 1);
        assert!(cells.boundaries().is_empty());
        assert!(shared_boundaries(&cells).is_empty());
    }

    #[test]
    fn split_column_gives_four_cells() {
        let map = map_from(&[".....", "..#..", "..#..", "..#..", "....."], 1.0);
        let cells = decompose(&map).unwrap();
        assert_eq!(cells.len(), 4);
        let pairs: Vec<(u32, u32)> = cells
            .boundaries()
            .iter()
            .map(|b| (b.below.0, b.above.0))
            .collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
        assert!(cells.boundaries().iter().all(|b| b.length == 2.0));
    }

    #[test]
    fn boundary_length_scales_with_resolution() {
        let mut rows = vec!["..........", "#.........", ".........."];
        rows.reverse();
        let map = map_from(&rows, 0.4);
        let cells = decompose(&map).unwrap();
        // row 1 narrows from the left; that is not a topology event
        assert_eq!(cells.len(), 1);

        let map = map_from(&["..........", "....##....", ".........."], 0.4);
        let cells = decompose(&map).unwrap();
        assert_eq!(cells.len(), 4);
        let first = &cells.boundaries()[0];
        assert_eq!(first.x1 - first.x0, 4);
        assert!((first.length - 1.6).abs() < 1e-12);
    }

    #[test]
    fn diagonal_contact_does_not_join() {
        // free (0,0) and (1,1) touch only at a corner
        let map = map_from(&["#.", ".#"], 1.0);
        let cells = decompose(&map).unwrap();
        assert_eq!(cells.len(), 2);
        assert!(cells.boundaries().is_empty());
    }

    #[test]
    fn no_free_space_is_an_error() {
        let map = map_from(&["##", "##"], 1.0);
        assert_eq!(
            decompose(&map).unwrap_err(),
            DecompositionError::NoFreeSpace
        );
    }

    #[test]
    fn locate_uses_half_open_cells() {
        let map = map_from(&[".....", "..#..", "....."], 1.0);
        let cells = decompose(&map).unwrap();
        assert_eq!(cells.locate(Vec2::new(0.5, 0.5)), Some(CellId(0)));
        assert_eq!(cells.locate(Vec2::new(2.5, 1.5)), None);
        assert_eq!(cells.locate(Vec2::new(3.0, 1.0)), Some(CellId(2)));
        assert_eq!(cells.locate(Vec2::new(0.5, 3.0)), None);
    }
}
