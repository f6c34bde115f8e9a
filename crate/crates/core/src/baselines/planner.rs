//! Shortest paths on an inflated occupancy grid.
//!
//! Moves are 8-connected with cost 1 straight and √2 diagonal. A diagonal
//! move is allowed only when both orthogonal cells it passes are open, so
//! paths never clip a blocked corner.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::mapping::{Cell, OccupancyGrid};
use crate::sim::Vec2;

/// Which cells a planner may enter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Traversability {
    pub width: usize,
    pub height: usize,
    blocked: Vec<bool>,
}

impl Traversability {
    /// Blocks every cell whose centre is within `inflation` of an occupied
    /// cell centre, and unknown cells unless `unknown_traversable`.
    pub fn from_grid(grid: &OccupancyGrid, inflation: f64, unknown_traversable: bool) -> Self {
        let (w, h) = (grid.width(), grid.height());
        let mut blocked = vec![false; w * h];
        let reach = (inflation / grid.resolution + 1e-9).floor() as i64;
        let r2 = (inflation / grid.resolution).powi(2) + 1e-9;
        for j in 0..h {
            for i in 0..w {
                match grid.get(i, j) {
                    Cell::Occupied => {
                        for dj in -reach..=reach {
                            for di in -reach..=reach {
                                let (x, y) = (i as i64 + di, j as i64 + dj);
                                if (di * di + dj * dj) as f64 <= r2 && grid.in_bounds(x, y) {
                                    blocked[y as usize * w + x as usize] = true;
                                }
                            }
                        }
                    }
                    Cell::Unknown if !unknown_traversable => blocked[j * w + i] = true,
                    _ => {}
                }
            }
        }
        Self { width: w, height: h, blocked }
    }

    /// Directly from a boolean mask, row-major.
    pub fn from_mask(width: usize, height: usize, blocked: Vec<bool>) -> Self {
        assert_eq!(blocked.len(), width * height);
        Self { width, height, blocked }
    }

    pub fn is_open(&self, i: i64, j: i64) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.width
            && (j as usize) < self.height
            && !self.blocked[j as usize * self.width + i as usize]
    }

    pub fn set_open(&mut self, i: usize, j: usize) {
        self.blocked[j * self.width + i] = false;
    }

    /// Open cell nearest to `(i, j)` by breadth-first search over all cells.
    pub fn nearest_open(&self, (i, j): (i64, i64)) -> Option<(usize, usize)> {
        let inside = |x: i64, y: i64| x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height;
        if !inside(i, j) {
            return None;
        }
        let mut seen = vec![false; self.width * self.height];
        let mut queue = VecDeque::from([(i, j)]);
        seen[j as usize * self.width + i as usize] = true;
        while let Some((x, y)) = queue.pop_front() {
            if self.is_open(x, y) {
                return Some((x as usize, y as usize));
            }
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (nx, ny) = (x + dx, y + dy);
                if inside(nx, ny) && !seen[ny as usize * self.width + nx as usize] {
                    seen[ny as usize * self.width + nx as usize] = true;
                    queue.push_back((nx, ny));
                }
            }
        }
        None
    }
}

/// The eight moves with their costs, in a fixed order.
pub const MOVES: [(i64, i64, f64); 8] = [
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 1, SQRT_2),
    (1, -1, SQRT_2),
    (-1, 1, SQRT_2),
    (-1, -1, SQRT_2),
];

/// Whether the move `(dx, dy)` out of `(i, j)` is legal.
pub fn can_move(t: &Traversability, i: i64, j: i64, dx: i64, dy: i64) -> bool {
    t.is_open(i + dx, j + dy) && (dx == 0 || dy == 0 || (t.is_open(i + dx, j) && t.is_open(i, j + dy)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cells: Vec<(usize, usize)>,
    pub straight_moves: usize,
    pub diagonal_moves: usize,
    /// m
    pub length: f64,
}

impl GridPath {
    /// Cell centres in world coordinates.
    pub fn points(&self, grid: &OccupancyGrid) -> Vec<Vec2> {
        self.cells.iter().map(|&(i, j)| grid.cell_center(i, j)).collect()
    }

    /// Length in cell units, `straight + diagonal·√2`.
    pub fn cost(&self) -> f64 {
        self.straight_moves as f64 + self.diagonal_moves as f64 * SQRT_2
    }
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Dijkstra between two cells.
pub fn shortest_path(t: &Traversability, from: (usize, usize), to: (usize, usize), resolution: f64) -> Result<GridPath> {
    let (fi, fj) = (from.0 as i64, from.1 as i64);
    if !t.is_open(fi, fj) || !t.is_open(to.0 as i64, to.1 as i64) {
        return Err(Error::Unreachable);
    }
    let w = t.width;
    let n = w * t.height;
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let start = from.1 * w + from.0;
    let goal = to.1 * w + to.0;
    dist[start] = 0.0;
    let mut heap = BinaryHeap::from([Entry(0.0, start)]);
    while let Some(Entry(d, k)) = heap.pop() {
        if d > dist[k] {
            continue;
        }
        if k == goal {
            break;
        }
        let (i, j) = ((k % w) as i64, (k / w) as i64);
        for &(dx, dy, c) in &MOVES {
            if !can_move(t, i, j, dx, dy) {
                continue;
            }
            let nk = (j + dy) as usize * w + (i + dx) as usize;
            let nd = d + c;
            if nd < dist[nk] {
                dist[nk] = nd;
                prev[nk] = k;
                heap.push(Entry(nd, nk));
            }
        }
    }
    if dist[goal].is_infinite() {
        return Err(Error::Unreachable);
    }
    let mut cells = vec![to];
    let mut k = goal;
    while k != start {
        k = prev[k];
        cells.push((k % w, k / w));
    }
    cells.reverse();
    let diagonal_moves = cells.windows(2).filter(|p| p[0].0 != p[1].0 && p[0].1 != p[1].1).count();
    let straight_moves = cells.len() - 1 - diagonal_moves;
    let cost = straight_moves as f64 + diagonal_moves as f64 * SQRT_2;
    Ok(GridPath {
        cells,
        straight_moves,
        diagonal_moves,
        length: cost * resolution,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    /// m
    pub inflation: f64,
    pub unknown_traversable: bool,
    /// Move a blocked start or goal to the nearest open cell instead of
    /// failing.
    pub snap_endpoints: bool,
}

/// Shortest path between two world points on the inflated grid.
pub fn plan_path(grid: &OccupancyGrid, from: Vec2, to: Vec2, opts: &PlanOptions) -> Result<GridPath> {
    let t = Traversability::from_grid(grid, opts.inflation, opts.unknown_traversable);
    plan_on(&t, grid, from, to, opts.snap_endpoints)
}

/// As [`plan_path`] with a precomputed traversability mask.
pub fn plan_on(t: &Traversability, grid: &OccupancyGrid, from: Vec2, to: Vec2, snap: bool) -> Result<GridPath> {
    let locate = |p: Vec2| -> Result<(usize, usize)> {
        let (i, j) = grid.cell_index(p);
        if t.is_open(i, j) {
            Ok((i as usize, j as usize))
        } else if snap {
            t.nearest_open((i, j)).ok_or(Error::Unreachable)
        } else {
            Err(Error::Unreachable)
        }
    };
    shortest_path(t, locate(from)?, locate(to)?, grid.resolution)
}
