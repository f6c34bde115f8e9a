//! Frontiers: free cells bordering unknown space, grouped into
//! 8-connected components.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::mapping::{Cell, OccupancyGrid};
use crate::sim::{Pose, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub struct Frontier {
    /// Member cells in discovery order; the first is the lowest row-major
    /// index.
    pub cells: Vec<(usize, usize)>,
    pub centroid: Vec2,
}

impl Frontier {
    pub fn size(&self) -> usize {
        self.cells.len()
    }

    /// Member cell whose centre is closest to the centroid.
    pub fn anchor(&self, grid: &OccupancyGrid) -> Vec2 {
        self.cells
            .iter()
            .map(|&(i, j)| grid.cell_center(i, j))
            .min_by(|a, b| a.distance(self.centroid).total_cmp(&b.distance(self.centroid)))
            .expect("frontiers are non-empty")
    }
}

pub fn is_frontier_cell(grid: &OccupancyGrid, i: usize, j: usize) -> bool {
    if grid.get(i, j) != Cell::Free {
        return false;
    }
    let (i, j) = (i as i64, j as i64);
    [(1, 0), (-1, 0), (0, 1), (0, -1)]
        .iter()
        .any(|&(di, dj)| grid.in_bounds(i + di, j + dj) && grid.get_signed(i + di, j + dj) == Cell::Unknown)
}

/// Frontier components of at least `min_size` cells, ordered by their
/// lowest cell index.
pub fn detect_frontiers(grid: &OccupancyGrid, min_size: usize) -> Vec<Frontier> {
    let (w, h) = (grid.width(), grid.height());
    let mut is_f = vec![false; w * h];
    for j in 0..h {
        for i in 0..w {
            is_f[j * w + i] = is_frontier_cell(grid, i, j);
        }
    }
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for k in 0..w * h {
        if !is_f[k] || seen[k] {
            continue;
        }
        seen[k] = true;
        let mut queue = VecDeque::from([k]);
        let mut cells = Vec::new();
        while let Some(c) = queue.pop_front() {
            let (i, j) = (c % w, c / w);
            cells.push((i, j));
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (x, y) = (i as i64 + di, j as i64 + dj);
                    if grid.in_bounds(x, y) {
                        let n = y as usize * w + x as usize;
                        if is_f[n] && !seen[n] {
                            seen[n] = true;
                            queue.push_back(n);
                        }
                    }
                }
            }
        }
        if cells.len() >= min_size.max(1) {
            let sum = cells
                .iter()
                .fold(Vec2::new(0.0, 0.0), |acc, &(i, j)| acc + grid.cell_center(i, j));
            out.push(Frontier {
                centroid: sum * (1.0 / cells.len() as f64),
                cells,
            });
        }
    }
    out
}

/// Index of the frontier minimising robot-to-centroid plus
/// centroid-to-goal distance; the earliest on ties.
pub fn nf_select(frontiers: &[Frontier], pose: &Pose, goal: Vec2) -> Result<usize> {
    let p = pose.position();
    let mut best: Option<(usize, f64)> = None;
    for (k, f) in frontiers.iter().enumerate() {
        let s = p.distance(f.centroid) + f.centroid.distance(goal);
        if best.is_none_or(|(_, b)| s < b) {
            best = Some((k, s));
        }
    }
    best.map(|(k, _)| k).ok_or(Error::NoFrontiers)
}
