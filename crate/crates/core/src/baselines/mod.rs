//! Comparison navigators.
//!
//! - NF: nearest-frontier exploration, frontier chosen by robot and goal
//!   distance, driven by a planner and path tracker.
//! - LP_AE: the full point-of-interest and IDLE layer with the learned
//!   policy replaced by a planner and path tracker.
//! - PP: a single plan on the fully known map, tracked to the goal.
//!
//! Every runner returns the same [`RunRecord`] as the explorer.

pub mod follow;
pub mod frontier;
pub mod planner;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use follow::{follow_path, steer, FollowParams, PathTracker};
pub use frontier::{detect_frontiers, nf_select, Frontier};
pub use planner::{plan_on, plan_path, shortest_path, GridPath, PlanOptions, Traversability};

use crate::error::{Error, Result};
use crate::explorer::{
    initial_grid, run_with_controller, ChangeReason, ExplorerConfig, LocalController, Mode, Recorder, RunOutcome,
    RunRecord, WaypointChange,
};
use crate::mapping::{Cell, OccupancyGrid};
use crate::navgraph::Waypoint;
use crate::sim::{cast_lidar, observe_pose, LidarScan, Pose, RobotState, Vec2, Velocity, WorldModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Baseline {
    #[serde(rename = "NF")]
    Nf,
    #[serde(rename = "LP_AE")]
    LpAe,
    #[serde(rename = "PP")]
    Pp,
}

impl Baseline {
    pub const ALL: [Baseline; 3] = [Baseline::Nf, Baseline::LpAe, Baseline::Pp];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Nf => "NF",
            Baseline::LpAe => "LP_AE",
            Baseline::Pp => "PP",
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "NF" => Ok(Baseline::Nf),
            "LP_AE" | "LPAE" => Ok(Baseline::LpAe),
            "PP" => Ok(Baseline::Pp),
            _ => Err(Error::Parse(format!("unknown baseline `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    /// Budget, waypoint parameters, simulator and seed.
    pub explorer: ExplorerConfig,
    /// Obstacle inflation for planning, m; robot radius + 0.1 when unset.
    pub inflation: Option<f64>,
    pub min_frontier_size: usize,
    /// Re-plan after this many tracked steps.
    pub replan_every: usize,
    pub follow: FollowParams,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            explorer: ExplorerConfig::default(),
            inflation: None,
            min_frontier_size: 5,
            replan_every: 10,
            follow: FollowParams::default(),
        }
    }
}

impl BaselineConfig {
    pub fn inflation(&self) -> f64 {
        self.inflation.unwrap_or(self.explorer.sim.robot_radius + 0.1)
    }
}

pub fn run_baseline(world: &WorldModel, method: Baseline, cfg: &BaselineConfig) -> Result<RunRecord> {
    cfg.explorer.validate()?;
    match method {
        Baseline::Nf => run_nf(world, cfg),
        Baseline::LpAe => run_lp_ae(world, cfg),
        Baseline::Pp => run_pp(world, cfg),
    }
}

/// Plans on the current map whenever the waypoint changes, the path ages
/// out, or a newly mapped obstacle blocks it.
struct PlannerController<'a> {
    cfg: &'a BaselineConfig,
    tracker: PathTracker,
}

impl LocalController for PlannerController<'_> {
    fn command(&mut self, _: &LidarScan, pose: &Pose, waypoint: Vec2, grid: &OccupancyGrid, changed: bool) -> Result<Velocity> {
        let inflation = self.cfg.inflation();
        if changed
            || self.tracker.is_empty()
            || self.tracker.age >= self.cfg.replan_every
            || self.tracker.blocked(grid, inflation)
        {
            let t = Traversability::from_grid(grid, inflation, true);
            match plan_on(&t, grid, pose.position(), waypoint, true) {
                Ok(p) => {
                    self.tracker.points = p.points(grid);
                    self.tracker.cells = p.cells;
                    self.tracker.age = 0;
                }
                Err(Error::Unreachable) => self.tracker.clear(),
                Err(e) => return Err(e),
            }
        }
        if self.tracker.is_empty() {
            return Ok(Velocity::new(0.0, self.cfg.explorer.sim.omega_max));
        }
        Ok(self.tracker.command(pose, &self.cfg.follow, &self.cfg.explorer.sim))
    }
}

fn run_lp_ae(world: &WorldModel, cfg: &BaselineConfig) -> Result<RunRecord> {
    let mut controller = PlannerController {
        cfg,
        tracker: PathTracker::default(),
    };
    let explorer = ExplorerConfig {
        mode: Mode::Gdae,
        ..cfg.explorer.clone()
    };
    run_with_controller(world, &explorer, Baseline::LpAe.name(), &mut controller)
}

fn run_pp(world: &WorldModel, cfg: &BaselineConfig) -> Result<RunRecord> {
    let ex = &cfg.explorer;
    let mut rng = ChaCha8Rng::seed_from_u64(ex.seed);
    let mut robot = RobotState::at(world.start);
    let mut grid = initial_grid(world, ex.map_resolution);
    let mut rec = Recorder::default();
    let known = OccupancyGrid::from_world(world, ex.map_resolution);
    let t = Traversability::from_grid(&known, cfg.inflation(), false);
    let goal = Waypoint::Goal(world.goal);
    let changes = vec![WaypointChange { step: 0, reason: ChangeReason::Initial, waypoint: goal }];
    let mut tracker = PathTracker::default();
    match plan_on(&t, &known, world.start.position(), world.goal, true) {
        Ok(p) => tracker.points = p.points(&known),
        Err(Error::Unreachable) => {
            return Ok(rec.finish(Baseline::Pp.name(), RunOutcome::Timeout, &robot, changes, grid, vec![], None));
        }
        Err(e) => return Err(e),
    }
    tracker.points.push(world.goal);
    let outcome = loop {
        let scan = cast_lidar(world, &robot, &ex.sim, &mut rng);
        let pose = observe_pose(&robot, &ex.sim, &mut rng);
        grid.integrate_scan(&pose, &scan);
        if pose.position().distance(world.goal) < ex.params.reach_distance {
            break RunOutcome::Goal;
        }
        if rec.steps.len() >= ex.step_budget {
            break RunOutcome::Timeout;
        }
        let command = tracker.command(&pose, &cfg.follow, &ex.sim);
        robot = rec.advance(world, &robot, Some(world.goal), &grid, command, &ex.sim);
        if robot.collided {
            break RunOutcome::Collision;
        }
    };
    Ok(rec.finish(Baseline::Pp.name(), outcome, &robot, changes, grid, vec![], None))
}

fn run_nf(world: &WorldModel, cfg: &BaselineConfig) -> Result<RunRecord> {
    let ex = &cfg.explorer;
    let reach = ex.params.reach_distance;
    let inflation = cfg.inflation();
    let mut rng = ChaCha8Rng::seed_from_u64(ex.seed);
    let mut robot = RobotState::at(world.start);
    let mut grid = initial_grid(world, ex.map_resolution);
    let mut rec = Recorder::default();
    let mut changes = Vec::new();
    let mut tracker = PathTracker::default();
    let mut target: Option<Waypoint> = None;
    let mut area_at_selection = f64::NEG_INFINITY;
    let mut unreachable: Vec<Vec2> = Vec::new();
    let mut recovering = 0usize;

    let outcome = loop {
        let t = rec.steps.len();
        let scan = cast_lidar(world, &robot, &ex.sim, &mut rng);
        let pose = observe_pose(&robot, &ex.sim, &mut rng);
        grid.integrate_scan(&pose, &scan);
        if pose.position().distance(world.goal) < reach {
            break RunOutcome::Goal;
        }
        if t >= ex.step_budget {
            break RunOutcome::Timeout;
        }

        let goal_known = grid.at(world.goal) == Cell::Free && !unreachable.contains(&world.goal);
        let due = tracker.is_empty() || tracker.age >= cfg.replan_every || tracker.blocked(&grid, inflation);
        let mut replan = false;
        if goal_known && !target.is_some_and(|w| w.is_goal()) {
            let w = Waypoint::Goal(world.goal);
            target = Some(w);
            changes.push(WaypointChange { step: t, reason: ChangeReason::Initial, waypoint: w });
            replan = true;
        } else if !target.is_some_and(|w| w.is_goal()) && due {
            // frontier selection needs fresh map knowledge; frontiers
            // already within reach count as explored
            let area = grid.known_area();
            if area > area_at_selection {
                let frontiers: Vec<Frontier> = detect_frontiers(&grid, cfg.min_frontier_size)
                    .into_iter()
                    .filter(|f| {
                        let a = f.anchor(&grid);
                        a.distance(pose.position()) >= reach && !unreachable.iter().any(|u| u.distance(a) < reach)
                    })
                    .collect();
                match nf_select(&frontiers, &pose, world.goal) {
                    Ok(k) => {
                        let w = Waypoint::Poi { id: k, position: frontiers[k].anchor(&grid) };
                        let reason = if changes.is_empty() { ChangeReason::Initial } else { ChangeReason::Frontier };
                        target = Some(w);
                        changes.push(WaypointChange { step: t, reason, waypoint: w });
                        area_at_selection = area;
                        replan = true;
                    }
                    Err(Error::NoFrontiers) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        if let Some(w) = target {
            if pose.position().distance(w.position()) < reach && !w.is_goal() {
                tracker.clear();
            }
            if replan || due {
                let t = Traversability::from_grid(&grid, inflation, true);
                match plan_on(&t, &grid, pose.position(), w.position(), true) {
                    Ok(p) => {
                        tracker.points = p.points(&grid);
                        tracker.cells = p.cells;
                        tracker.age = 0;
                    }
                    Err(Error::Unreachable) => {
                        unreachable.push(w.position());
                        tracker.clear();
                        target = None;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        // without a target the robot rotates in place to uncover what lies
        // beside and behind it
        recovering = if target.is_none() { recovering + 1 } else { 0 };
        if recovering > ex.recovery_steps {
            break RunOutcome::Timeout;
        }
        let command = if tracker.is_empty() {
            Velocity::new(0.0, ex.sim.omega_max)
        } else {
            tracker.command(&pose, &cfg.follow, &ex.sim)
        };
        robot = rec.advance(world, &robot, target.map(|w| w.position()), &grid, command, &ex.sim);
        if robot.collided {
            break RunOutcome::Collision;
        }
    };
    Ok(rec.finish(Baseline::Nf.name(), outcome, &robot, changes, grid, vec![], None))
}
