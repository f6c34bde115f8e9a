//! Procedural worlds: randomized four-box training arenas and trap layouts
//! that defeat greedy goal seeking.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Obstacle, Pose, Rect, Vec2, WorldModel};
use crate::error::{Error, Result};

/// Attempts per world before generation gives up.
pub const MAX_ATTEMPTS: usize = 1000;
/// Clearance of the start pose and goal from any geometry.
pub const PLACEMENT_CLEARANCE: f64 = 0.5;
/// Clearance used when testing start-to-goal connectivity.
pub const PASSAGE_CLEARANCE: f64 = 0.25;
const RASTER_RESOLUTION: f64 = 0.1;

/// Boolean traversability raster: a cell is free when its centre keeps at
/// least `clearance` from all geometry.
#[derive(Debug, Clone)]
pub struct FreeSpaceRaster {
    pub origin: Vec2,
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    pub free: Vec<bool>,
}

impl FreeSpaceRaster {
    pub fn new(world: &WorldModel, resolution: f64, clearance: f64) -> Self {
        let width = (world.bounds.width() / resolution).ceil() as usize;
        let height = (world.bounds.height() / resolution).ceil() as usize;
        let origin = world.bounds.min;
        let mut free = vec![false; width * height];
        for j in 0..height {
            for i in 0..width {
                let c = origin
                    + Vec2::new((i as f64 + 0.5) * resolution, (j as f64 + 0.5) * resolution);
                free[j * width + i] = world.clearance(c) >= clearance;
            }
        }
        Self {
            origin,
            resolution,
            width,
            height,
            free,
        }
    }

    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let i = ((p.x - self.origin.x) / self.resolution).floor();
        let j = ((p.y - self.origin.y) / self.resolution).floor();
        (i >= 0.0 && j >= 0.0 && (i as usize) < self.width && (j as usize) < self.height)
            .then_some((i as usize, j as usize))
    }

    pub fn is_free(&self, (i, j): (usize, usize)) -> bool {
        self.free[j * self.width + i]
    }

    /// 4-connected flood fill between the cells containing `a` and `b`.
    pub fn connected(&self, a: Vec2, b: Vec2) -> bool {
        let (Some(sa), Some(sb)) = (self.cell_of(a), self.cell_of(b)) else {
            return false;
        };
        if !self.is_free(sa) || !self.is_free(sb) {
            return false;
        }
        let mut seen = vec![false; self.free.len()];
        let mut queue = VecDeque::from([sa]);
        seen[sa.1 * self.width + sa.0] = true;
        while let Some((i, j)) = queue.pop_front() {
            if (i, j) == sb {
                return true;
            }
            let nbrs = [
                (i.wrapping_sub(1), j),
                (i + 1, j),
                (i, j.wrapping_sub(1)),
                (i, j + 1),
            ];
            for (ni, nj) in nbrs {
                if ni < self.width && nj < self.height {
                    let k = nj * self.width + ni;
                    if !seen[k] && self.free[k] {
                        seen[k] = true;
                        queue.push_back((ni, nj));
                    }
                }
            }
        }
        false
    }
}

fn reachable(world: &WorldModel) -> bool {
    FreeSpaceRaster::new(world, RASTER_RESOLUTION, PASSAGE_CLEARANCE)
        .connected(world.start.position(), world.goal)
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn sample_free<R: Rng + ?Sized>(rng: &mut R, world: &WorldModel, margin: f64) -> Option<Vec2> {
    let b = world.bounds;
    (0..100)
        .map(|_| {
            Vec2::new(
                uniform(rng, b.min.x + margin, b.max.x - margin),
                uniform(rng, b.min.y + margin, b.max.y - margin),
            )
        })
        .find(|&p| world.clearance(p) >= PLACEMENT_CLEARANCE)
}

/// A 10 m × 10 m arena with four randomly placed boxes, a random start
/// pose and a random goal at least 1 m away from the start.
pub fn generate_training_world<R: Rng + ?Sized>(rng: &mut R) -> Result<WorldModel> {
    let bounds = Rect::new(Vec2::new(-5.0, -5.0), Vec2::new(5.0, 5.0));
    'attempt: for _ in 0..MAX_ATTEMPTS {
        let mut boxes: Vec<Rect> = Vec::with_capacity(4);
        for _ in 0..4 {
            let placed = (0..50).find_map(|_| {
                let half = Vec2::new(uniform(rng, 0.3, 0.7), uniform(rng, 0.3, 0.7));
                let center = Vec2::new(uniform(rng, -4.0, 4.0), uniform(rng, -4.0, 4.0));
                let r = Rect::from_center(center, half);
                let apart = boxes.iter().all(|o| {
                    r.min.x > o.max.x + 0.6
                        || o.min.x > r.max.x + 0.6
                        || r.min.y > o.max.y + 0.6
                        || o.min.y > r.max.y + 0.6
                });
                apart.then_some(r)
            });
            match placed {
                Some(r) => boxes.push(r),
                None => continue 'attempt,
            }
        }
        let mut world = WorldModel {
            bounds,
            obstacles: boxes
                .iter()
                .map(|r| Obstacle::boxed((r.min + r.max) * 0.5, (r.max - r.min) * 0.5))
                .collect(),
            start: Pose::new(0.0, 0.0, 0.0),
            goal: Vec2::default(),
        };
        let Some(start) = sample_free(rng, &world, PLACEMENT_CLEARANCE) else {
            continue;
        };
        let heading = uniform(rng, -PI, PI);
        let Some(goal) = (0..100)
            .filter_map(|_| sample_free(rng, &world, PLACEMENT_CLEARANCE))
            .find(|g| g.distance(start) >= 1.0)
        else {
            continue;
        };
        world.start = Pose::new(start.x, start.y, heading);
        world.goal = goal;
        if reachable(&world) {
            return Ok(world);
        }
    }
    Err(Error::WorldGeneration(MAX_ATTEMPTS))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrapKind {
    UTrap,
    Corridor,
    Clutter,
}

impl TrapKind {
    pub const ALL: [TrapKind; 3] = [TrapKind::UTrap, TrapKind::Corridor, TrapKind::Clutter];

    pub fn name(self) -> &'static str {
        match self {
            TrapKind::UTrap => "u_trap",
            TrapKind::Corridor => "corridor",
            TrapKind::Clutter => "clutter",
        }
    }
}

impl fmt::Display for TrapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrapKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TrapKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown trap kind `{s}`")))
    }
}

const WALL_HALF: f64 = 0.1;

fn horizontal_wall(x0: f64, x1: f64, y: f64) -> Obstacle {
    Obstacle::boxed(
        Vec2::new((x0 + x1) / 2.0, y),
        Vec2::new((x1 - x0) / 2.0, WALL_HALF),
    )
}

fn vertical_wall(x: f64, y0: f64, y1: f64) -> Obstacle {
    Obstacle::boxed(
        Vec2::new(x, (y0 + y1) / 2.0),
        Vec2::new(WALL_HALF, (y1 - y0) / 2.0),
    )
}

/// Pocket opening away from the goal; the robot starts inside it facing
/// the closed end.
fn pocket<R: Rng + ?Sized>(rng: &mut R, inner_half: (f64, f64), depth: (f64, f64)) -> WorldModel {
    let bounds = Rect::new(Vec2::new(0.0, 0.0), Vec2::new(24.0, 14.0));
    let cy = 7.0 + uniform(rng, -0.5, 0.5);
    let back = uniform(rng, 8.0, 9.0);
    let depth = uniform(rng, depth.0, depth.1);
    let half = uniform(rng, inner_half.0, inner_half.1);
    let open = back - depth;
    let obstacles = vec![
        vertical_wall(back + WALL_HALF, cy - half - 2.0 * WALL_HALF, cy + half + 2.0 * WALL_HALF),
        horizontal_wall(open, back, cy + half + WALL_HALF),
        horizontal_wall(open, back, cy - half - WALL_HALF),
    ];
    let start = Vec2::new(
        back - uniform(rng, 1.6, 2.2).min(depth - 1.0),
        cy + uniform(rng, -0.4, 0.4) * (half - 0.6).min(1.0),
    );
    let goal = Vec2::new(back + uniform(rng, 9.5, 11.0), cy + uniform(rng, -2.5, 2.5));
    let heading = (goal.y - start.y).atan2(goal.x - start.x) + uniform(rng, -0.2, 0.2);
    WorldModel {
        bounds,
        obstacles,
        start: Pose::new(start.x, start.y, heading),
        goal,
    }
}

fn clutter<R: Rng + ?Sized>(rng: &mut R) -> WorldModel {
    let bounds = Rect::new(Vec2::new(0.0, 0.0), Vec2::new(20.0, 14.0));
    let start = Vec2::new(2.0, 7.0 + uniform(rng, -1.0, 1.0));
    let goal = Vec2::new(18.0, 7.0 + uniform(rng, -2.0, 2.0));
    let region = Rect::new(Vec2::new(6.0, 3.0), Vec2::new(12.0, 11.0));
    let mut centers: Vec<Vec2> = Vec::new();
    for _ in 0..2000 {
        if centers.len() >= 40 {
            break;
        }
        let c = Vec2::new(
            uniform(rng, region.min.x, region.max.x),
            uniform(rng, region.min.y, region.max.y),
        );
        if centers.iter().all(|o| o.distance(c) >= 1.5) {
            centers.push(c);
        }
    }
    let obstacles = centers
        .into_iter()
        .map(|c| {
            Obstacle::boxed(
                c,
                Vec2::new(uniform(rng, 0.15, 0.3), uniform(rng, 0.15, 0.3)),
            )
        })
        .collect();
    let heading = (goal.y - start.y).atan2(goal.x - start.x);
    WorldModel {
        bounds,
        obstacles,
        start: Pose::new(start.x, start.y, heading),
        goal,
    }
}

/// A world in which the straight start-to-goal line runs into a local
/// optimum: a U-shaped pocket, a dead-end corridor or a dense obstacle
/// cluster. The goal stays reachable by a detour.
pub fn generate_trap_world<R: Rng + ?Sized>(kind: TrapKind, rng: &mut R) -> Result<WorldModel> {
    for _ in 0..MAX_ATTEMPTS {
        let world = match kind {
            TrapKind::UTrap => pocket(rng, (2.0, 2.6), (4.0, 5.0)),
            TrapKind::Corridor => pocket(rng, (1.1, 1.4), (6.0, 7.0)),
            TrapKind::Clutter => clutter(rng),
        };
        if world.validate(PLACEMENT_CLEARANCE).is_ok() && reachable(&world) {
            return Ok(world);
        }
    }
    Err(Error::WorldGeneration(MAX_ATTEMPTS))
}
