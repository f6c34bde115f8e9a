//! Ternary occupancy grid built online from lidar scans.
//!
//! Knowledge is monotone: cells only move out of `Unknown`, and an
//! `Occupied` cell is never downgraded by a later free-space ray.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::{LidarScan, Pose, Rect, Vec2, WorldModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Unknown,
    Free,
    Occupied,
}

impl Cell {
    pub fn is_known(self) -> bool {
        self != Cell::Unknown
    }

    /// Graymap value: 0 occupied, 255 free, 127 unknown.
    pub fn gray(self) -> u8 {
        match self {
            Cell::Occupied => 0,
            Cell::Free => 255,
            Cell::Unknown => 127,
        }
    }
}

/// Side length of the square window around a candidate used for the
/// map-information fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoKernel {
    /// m
    pub size: f64,
}

impl Default for InfoKernel {
    fn default() -> Self {
        Self { size: 1.5 }
    }
}

impl InfoKernel {
    /// Window side in cells: `⌈k / resolution⌉`, bumped to the next odd
    /// number so the window centres on a cell.
    pub fn cells(&self, resolution: f64) -> usize {
        // guard against 1.5 / 0.1 = 15.000000000000002
        let n = ((self.size / resolution) - 1e-9).ceil().max(1.0) as usize;
        if n.is_multiple_of(2) {
            n + 1
        } else {
            n
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub resolution: f64,
    /// World coordinates of the lower-left corner of cell (0, 0).
    pub origin: Vec2,
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    /// Grow instead of clipping when a ray leaves the grid.
    pub auto_grow: bool,
}

impl OccupancyGrid {
    pub fn new(extent: Rect, resolution: f64) -> Self {
        let width = (extent.width() / resolution).ceil().max(1.0) as usize;
        let height = (extent.height() / resolution).ceil().max(1.0) as usize;
        Self {
            resolution,
            origin: extent.min,
            width,
            height,
            cells: vec![Cell::Unknown; width * height],
            auto_grow: true,
        }
    }

    /// Fully known grid rasterized from the world: a cell is occupied when
    /// geometry lies within half a cell of its centre.
    pub fn from_world(world: &WorldModel, resolution: f64) -> Self {
        let mut g = Self::new(world.bounds, resolution);
        g.auto_grow = false;
        for j in 0..g.height {
            for i in 0..g.width {
                let c = g.cell_center(i, j);
                g.cells[j * g.width + i] = if world.clearance(c) <= resolution * 0.5 {
                    Cell::Occupied
                } else {
                    Cell::Free
                };
            }
        }
        g
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn extent(&self) -> Rect {
        Rect::new(
            self.origin,
            self.origin
                + Vec2::new(
                    self.width as f64 * self.resolution,
                    self.height as f64 * self.resolution,
                ),
        )
    }

    /// Cell index of a world point; may lie outside the grid.
    pub fn cell_index(&self, p: Vec2) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.resolution).floor() as i64,
            ((p.y - self.origin.y) / self.resolution).floor() as i64,
        )
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Vec2 {
        self.origin
            + Vec2::new(
                (i as f64 + 0.5) * self.resolution,
                (j as f64 + 0.5) * self.resolution,
            )
    }

    pub fn in_bounds(&self, i: i64, j: i64) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.width && (j as usize) < self.height
    }

    pub fn get(&self, i: usize, j: usize) -> Cell {
        self.cells[j * self.width + i]
    }

    /// Out-of-grid cells read as unknown.
    pub fn get_signed(&self, i: i64, j: i64) -> Cell {
        if self.in_bounds(i, j) {
            self.get(i as usize, j as usize)
        } else {
            Cell::Unknown
        }
    }

    pub fn at(&self, p: Vec2) -> Cell {
        let (i, j) = self.cell_index(p);
        self.get_signed(i, j)
    }

    pub fn set(&mut self, i: usize, j: usize, c: Cell) {
        self.cells[j * self.width + i] = c;
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    fn mark(&mut self, i: i64, j: i64, c: Cell) {
        if !self.in_bounds(i, j) {
            return;
        }
        let k = j as usize * self.width + i as usize;
        if c == Cell::Occupied || self.cells[k] != Cell::Occupied {
            self.cells[k] = c;
        }
    }

    /// Grows the grid (doubling per axis) until `(i, j)` lies inside.
    fn ensure_contains(&mut self, i: i64, j: i64) {
        if self.in_bounds(i, j) {
            return;
        }
        let (mut left, mut right, mut down, mut up) = (0usize, 0usize, 0usize, 0usize);
        let (mut w, mut h) = (self.width, self.height);
        while i < -(left as i64) {
            left += w;
            w *= 2;
        }
        while i >= (w - left) as i64 {
            right += w;
            w *= 2;
        }
        while j < -(down as i64) {
            down += h;
            h *= 2;
        }
        while j >= (h - down) as i64 {
            up += h;
            h *= 2;
        }
        let mut cells = vec![Cell::Unknown; w * h];
        for y in 0..self.height {
            let dst = (y + down) * w + left;
            cells[dst..dst + self.width].copy_from_slice(&self.cells[y * self.width..(y + 1) * self.width]);
        }
        let _ = (right, up);
        self.origin = self.origin - Vec2::new(left as f64 * self.resolution, down as f64 * self.resolution);
        self.width = w;
        self.height = h;
        self.cells = cells;
    }

    /// Integrates one scan taken at `pose`.
    ///
    /// Every beam clears the cells it crosses; a finite return marks its end
    /// cell occupied, an out-of-range beam clears out to `max_range`.
    pub fn integrate_scan(&mut self, pose: &Pose, scan: &LidarScan) {
        let origin = pose.position();
        let ends: Vec<(Vec2, bool)> = (0..scan.beam_count())
            .map(|b| {
                let angle = pose.heading + scan.beam_angle(b);
                let (r, hit) = match scan.ranges[b] {
                    Some(r) => (r, true),
                    None => (scan.max_range, false),
                };
                (origin + Vec2::from_polar(r, angle), hit)
            })
            .collect();
        if self.auto_grow {
            let (i, j) = self.cell_index(origin);
            self.ensure_contains(i, j);
            for (e, _) in &ends {
                let (i, j) = self.cell_index(*e);
                self.ensure_contains(i, j);
            }
        }
        let start = self.cell_index(origin);
        for (end, hit) in ends {
            let stop = self.cell_index(end);
            let path = line_cells(start, stop);
            let last = path.len() - 1;
            for (k, &(i, j)) in path.iter().enumerate() {
                let c = if k == last && hit {
                    Cell::Occupied
                } else {
                    Cell::Free
                };
                self.mark(i, j, c);
            }
        }
    }

    /// Fraction of known cells in the kernel window centred on `p`'s cell.
    /// Window cells outside the grid count as unknown.
    pub fn info_fraction(&self, p: Vec2, kernel: &InfoKernel) -> f64 {
        let n = kernel.cells(self.resolution) as i64;
        let half = (n - 1) / 2;
        let (ci, cj) = self.cell_index(p);
        let mut known = 0usize;
        for j in cj - half..=cj + half {
            for i in ci - half..=ci + half {
                if self.get_signed(i, j).is_known() {
                    known += 1;
                }
            }
        }
        known as f64 / (n * n) as f64
    }

    /// Area of known (free or occupied) cells, m².
    pub fn known_area(&self) -> f64 {
        self.cells.iter().filter(|c| c.is_known()).count() as f64 * self.resolution * self.resolution
    }

    /// Binary PGM (P5), top image row = highest `y`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        for j in (0..self.height).rev() {
            out.extend(self.cells[j * self.width..(j + 1) * self.width].iter().map(|c| c.gray()));
        }
        out
    }

    /// Sidecar describing how PGM pixels map to world coordinates.
    pub fn sidecar(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "resolution = {}", self.resolution);
        let _ = writeln!(s, "origin = [{}, {}]", self.origin.x, self.origin.y);
        let _ = writeln!(s, "width = {}", self.width);
        let _ = writeln!(s, "height = {}", self.height);
        let _ = writeln!(s, "encoding = \"occupied=0 free=255 unknown=127\"");
        s
    }

    /// Writes `<stem>.pgm` and `<stem>.yaml`-style sidecar `<stem>.txt`.
    pub fn save(&self, pgm_path: impl AsRef<Path>) -> Result<()> {
        let pgm_path = pgm_path.as_ref();
        std::fs::write(pgm_path, self.to_pgm())?;
        std::fs::write(pgm_path.with_extension("txt"), self.sidecar())?;
        Ok(())
    }
}

/// Bresenham cells from `a` to `b`, both inclusive.
pub fn line_cells(a: (i64, i64), b: (i64, i64)) -> Vec<(i64, i64)> {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy + 1) as usize);
    loop {
        out.push((x, y));
        if (x, y) == b {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> OccupancyGrid {
        let mut g = OccupancyGrid::new(Rect::new(Vec2::new(0.0, 0.0), Vec2::new(20.0, 20.0)), 0.1);
        g.auto_grow = false;
        g
    }

    fn one_beam(r: Option<f64>) -> LidarScan {
        LidarScan {
            ranges: vec![r],
            angle_min: 0.0,
            angle_increment: PI,
            max_range: 10.0,
        }
    }

    fn count(g: &OccupancyGrid, c: Cell) -> usize {
        g.cells().iter().filter(|&&x| x == c).count()
    }

    #[test]
    fn single_beam() {
        let mut g = grid();
        g.integrate_scan(&Pose::new(0.05, 0.05, 0.0), &one_beam(Some(1.0)));
        assert_eq!(count(&g, Cell::Free), 10);
        assert_eq!(count(&g, Cell::Occupied), 1);
        assert_eq!(g.get(10, 0), Cell::Occupied);
        assert!((g.known_area() - 0.11).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_beam_clears_full_range() {
        let mut g = grid();
        g.integrate_scan(&Pose::new(0.05, 0.05, 0.0), &one_beam(None));
        assert_eq!(count(&g, Cell::Occupied), 0);
        assert_eq!(count(&g, Cell::Free), 101);
    }

    #[test]
    fn integration_is_idempotent() {
        let mut g = grid();
        let scan = LidarScan::front_layout(
            (0..126).map(|i| if i % 7 == 0 { None } else { Some(1.0 + i as f64 * 0.05) }).collect(),
            10.0,
        );
        let pose = Pose::new(10.0, 10.0, 0.3);
        g.integrate_scan(&pose, &scan);
        let once = g.clone();
        g.integrate_scan(&pose, &scan);
        assert_eq!(g, once);
    }

    #[test]
    fn occupied_is_sticky() {
        let mut g = grid();
        g.integrate_scan(&Pose::new(0.05, 0.05, 0.0), &one_beam(Some(1.0)));
        g.integrate_scan(&Pose::new(0.05, 0.05, 0.0), &one_beam(Some(2.0)));
        assert_eq!(g.get(10, 0), Cell::Occupied);
        assert_eq!(g.get(20, 0), Cell::Occupied);
    }

    #[test]
    fn grows_and_keeps_cells_in_place() {
        let mut g = OccupancyGrid::new(Rect::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0)), 0.1);
        g.integrate_scan(&Pose::new(0.55, 0.55, 0.0), &one_beam(Some(0.3)));
        let before = g.at(Vec2::new(0.85, 0.55));
        assert_eq!(before, Cell::Occupied);
        g.integrate_scan(&Pose::new(0.55, 0.55, PI), &one_beam(Some(3.0)));
        assert!(g.extent().contains(Vec2::new(-2.45, 0.55)));
        assert_eq!(g.at(Vec2::new(0.85, 0.55)), Cell::Occupied);
        assert_eq!(g.at(Vec2::new(-2.45, 0.55)), Cell::Occupied);
        assert_eq!(g.origin.x, -3.0);
    }

    #[test]
    fn info_fraction_counts_window() {
        let mut g = grid();
        let kernel = InfoKernel::default();
        assert_eq!(kernel.cells(0.1), 15);
        let p = Vec2::new(5.05, 5.05);
        assert_eq!(g.info_fraction(p, &kernel), 0.0);
        let (ci, cj) = g.cell_index(p);
        for dj in -7..=7 {
            for di in -7..=7 {
                g.set((ci + di) as usize, (cj + dj) as usize, Cell::Free);
            }
        }
        assert_eq!(g.info_fraction(p, &kernel), 1.0);
        let mut g = grid();
        for k in 0..90 {
            g.set((ci - 7 + k % 15) as usize, (cj - 7 + k / 15) as usize, Cell::Occupied);
        }
        assert!((g.info_fraction(p, &kernel) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn kernel_cells_are_odd() {
        assert_eq!(InfoKernel { size: 1.0 }.cells(0.1), 11);
        assert_eq!(InfoKernel { size: 0.35 }.cells(0.1), 5);
        assert_eq!(InfoKernel { size: 0.01 }.cells(0.1), 1);
    }

    #[test]
    fn pgm_bytes() {
        let mut g = OccupancyGrid::new(Rect::new(Vec2::new(0.0, 0.0), Vec2::new(0.3, 0.2)), 0.1);
        g.set(0, 0, Cell::Occupied);
        g.set(2, 1, Cell::Free);
        let pgm = g.to_pgm();
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        assert_eq!(&pgm[header.len()..], &[127, 127, 255, 0, 127, 127]);
        assert!(g.sidecar().contains("resolution = 0.1"));
    }

    #[test]
    fn bresenham_endpoints() {
        assert_eq!(line_cells((0, 0), (3, 0)), vec![(0, 0), (1, 0), (2, 0), (3, 0)]);
        assert_eq!(line_cells((0, 0), (2, 2)), vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(line_cells((1, 1), (1, 1)), vec![(1, 1)]);
    }

    #[test]
    fn world_raster() {
        let w = WorldModel {
            bounds: Rect::new(Vec2::new(0.0, 0.0), Vec2::new(2.0, 2.0)),
            obstacles: vec![crate::sim::Obstacle::boxed(Vec2::new(1.0, 1.0), Vec2::new(0.2, 0.2))],
            start: Pose::new(0.5, 0.5, 0.0),
            goal: Vec2::new(1.5, 1.5),
        };
        let g = OccupancyGrid::from_world(&w, 0.1);
        assert_eq!(g.at(Vec2::new(1.0, 1.0)), Cell::Occupied);
        assert_eq!(g.at(Vec2::new(0.5, 0.5)), Cell::Free);
        assert_eq!(g.at(Vec2::new(0.05, 1.0)), Cell::Occupied);
        assert!(g.cells().iter().all(|c| c.is_known()));
    }
}
