//! Pure-pursuit style path tracking for a unicycle robot.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::explorer::waypoint_to_polar;
use crate::mapping::{Cell, OccupancyGrid};
use crate::sim::{Pose, SimConfig, Vec2, Velocity};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FollowParams {
    /// Angular gain K, rad/s per rad of bearing.
    pub gain: f64,
    /// m
    pub lookahead: f64,
}

impl Default for FollowParams {
    fn default() -> Self {
        Self {
            gain: 2.0,
            lookahead: 0.5,
        }
    }
}

/// Turn toward `bearing` with `ω = K·bearing` clipped to the turn-rate
/// limit, slowing linearly to a stop at ±90°.
pub fn steer(bearing: f64, gain: f64, cfg: &SimConfig) -> Velocity {
    let omega = (gain * bearing).clamp(-cfg.omega_max, cfg.omega_max);
    let v = if bearing.abs() > FRAC_PI_2 {
        0.0
    } else {
        cfg.v_max * (1.0 - bearing.abs() / FRAC_PI_2)
    };
    Velocity::new(v, omega)
}

/// First path point at least `lookahead` away from the robot, searching
/// forward from the point nearest to it; the last point if none is.
pub fn lookahead_point(path: &[Vec2], pose: &Pose, lookahead: f64) -> Vec2 {
    let p = pose.position();
    let nearest = path
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.distance(p).total_cmp(&b.1.distance(p)))
        .map_or(0, |(k, _)| k);
    path[nearest..]
        .iter()
        .copied()
        .find(|q| q.distance(p) >= lookahead)
        .unwrap_or(*path.last().expect("path is non-empty"))
}

/// One tracking command toward the lookahead point of `path`.
pub fn follow_path(path: &[Vec2], pose: &Pose, params: &FollowParams, cfg: &SimConfig) -> Velocity {
    let target = lookahead_point(path, pose, params.lookahead);
    let (_, bearing) = waypoint_to_polar(pose, target);
    steer(bearing, params.gain, cfg)
}

/// A planned path being tracked, with its grid cells for blockage checks.
#[derive(Debug, Clone, Default)]
pub struct PathTracker {
    pub cells: Vec<(usize, usize)>,
    pub points: Vec<Vec2>,
    pub age: usize,
}

impl PathTracker {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn clear(&mut self) {
        self.cells.clear();
        self.points.clear();
        self.age = 0;
    }

    /// Whether any path cell now lies within `inflation` of an occupied
    /// cell. The grid may have grown since planning, so cells are checked
    /// by their world position.
    pub fn blocked(&self, grid: &OccupancyGrid, inflation: f64) -> bool {
        let reach = (inflation / grid.resolution + 1e-9).floor() as i64;
        let r2 = (inflation / grid.resolution).powi(2) + 1e-9;
        self.points.iter().any(|&p| {
            let (ci, cj) = grid.cell_index(p);
            (-reach..=reach).any(|dj| {
                (-reach..=reach).any(|di| {
                    (di * di + dj * dj) as f64 <= r2 && grid.get_signed(ci + di, cj + dj) == Cell::Occupied
                })
            })
        })
    }

    pub fn command(&mut self, pose: &Pose, params: &FollowParams, cfg: &SimConfig) -> Velocity {
        self.age += 1;
        follow_path(&self.points, pose, params, cfg)
    }
}
