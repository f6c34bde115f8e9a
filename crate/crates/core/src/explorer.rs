//! The closed exploration loop.
//!
//! Each step: scan, update the map, refresh points of interest, pick a new
//! waypoint if the current one is reached or gone, and let the actor drive
//! one timestep toward the waypoint. In [`Mode::GdRl`] the waypoint is
//! always the global goal and the point-of-interest stages are skipped.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::OccupancyGrid;
use crate::navgraph::{extract_freespace_pois, extract_gap_pois, IdleParams, PoiStore, PoiTrace, Waypoint};
use crate::policy::{scale_action, ActorNet, PolicyState};
use crate::sim::{
    cast_lidar, observe_pose, step, wrap_angle, LidarScan, Pose, Rect, RobotState, SimConfig, Vec2, Velocity, WorldModel,
};

/// Distance and heading-relative bearing from `pose` to `waypoint`.
pub fn waypoint_to_polar(pose: &Pose, waypoint: Vec2) -> (f64, f64) {
    let d = waypoint - pose.position();
    (d.norm(), wrap_angle(d.y.atan2(d.x) - pose.heading))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "GDAE")]
    Gdae,
    #[serde(rename = "GD_RL")]
    GdRl,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Gdae => "GDAE",
            Mode::GdRl => "GD_RL",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "GDAE" => Ok(Mode::Gdae),
            "GD_RL" => Ok(Mode::GdRl),
            _ => Err(Error::Parse(format!("unknown explorer mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorerConfig {
    pub mode: Mode,
    pub params: IdleParams,
    pub step_budget: usize,
    /// Rotation steps allowed while no candidate exists.
    pub recovery_steps: usize,
    pub map_resolution: f64,
    pub sim: SimConfig,
    pub seed: u64,
    /// Keep a per-step POI trace in the record.
    pub trace_pois: bool,
}

impl Default for ExplorerConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Gdae,
            params: IdleParams::default(),
            step_budget: 3000,
            recovery_steps: 40,
            map_resolution: 0.1,
            sim: SimConfig::default(),
            seed: 0,
            trace_pois: false,
        }
    }
}

impl ExplorerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step_budget == 0 {
            return Err(Error::Config("step_budget must be positive".into()));
        }
        if !(self.map_resolution > 0.0) {
            return Err(Error::Config("map_resolution must be positive".into()));
        }
        self.params.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunOutcome {
    Goal,
    Collision,
    Timeout,
}

impl RunOutcome {
    pub fn name(self) -> &'static str {
        match self {
            RunOutcome::Goal => "GOAL",
            RunOutcome::Collision => "COLLISION",
            RunOutcome::Timeout => "TIMEOUT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChangeReason {
    /// First selection of the run.
    Initial,
    /// The previous waypoint was within the reach distance.
    Reached,
    /// The previous waypoint was deleted or timed out.
    Cleared,
    /// Nearest-frontier re-selection after the map grew.
    Frontier,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointChange {
    pub step: usize,
    pub reason: ChangeReason,
    pub waypoint: Waypoint,
}

/// One control step: the pose the decision was made from and what the
/// robot was steering for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTrace {
    pub pose: Pose,
    pub waypoint: Option<Vec2>,
    pub known_area: f64,
    pub recovering: bool,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    /// Navigator name, e.g. `GDAE` or `PP`.
    pub method: &'static str,
    pub outcome: RunOutcome,
    pub steps: Vec<StepTrace>,
    pub final_pose: Pose,
    pub waypoint_changes: Vec<WaypointChange>,
    pub scans: usize,
    pub recovery_steps: usize,
    /// Path length of the true pose, m.
    pub distance: f64,
    pub grid: OccupancyGrid,
    pub pois: Vec<Vec2>,
    pub poi_trace: Option<PoiTrace>,
}

impl RunRecord {
    pub fn elapsed_steps(&self) -> usize {
        self.steps.len()
    }

    /// Simulated seconds.
    pub fn elapsed_time(&self, cfg: &SimConfig) -> f64 {
        self.steps.len() as f64 * cfg.timestep
    }

    pub fn path(&self) -> Vec<Vec2> {
        self.steps
            .iter()
            .map(|s| s.pose.position())
            .chain(std::iter::once(self.final_pose.position()))
            .collect()
    }

    pub fn trajectory_csv(&self) -> String {
        let mut s = String::from("step,x,y,heading,waypoint_x,waypoint_y,known_area,recovering\n");
        for (i, t) in self.steps.iter().enumerate() {
            let (wx, wy) = t
                .waypoint
                .map(|w| (format!("{:.4}", w.x), format!("{:.4}", w.y)))
                .unwrap_or_default();
            let _ = writeln!(
                s,
                "{i},{:.4},{:.4},{:.4},{wx},{wy},{:.2},{}",
                t.pose.x,
                t.pose.y,
                t.pose.heading,
                t.known_area,
                u8::from(t.recovering)
            );
        }
        s
    }
}

/// Produces the velocity command that moves the robot toward a waypoint.
pub trait LocalController {
    /// `changed` is set on the first step after a new waypoint is chosen.
    fn command(&mut self, scan: &LidarScan, pose: &Pose, waypoint: Vec2, grid: &OccupancyGrid, changed: bool) -> Result<Velocity>;
}

/// The trained actor as a local controller.
pub struct PolicyController<'a> {
    pub actor: &'a ActorNet,
    pub sim: &'a SimConfig,
}

impl LocalController for PolicyController<'_> {
    fn command(&mut self, scan: &LidarScan, pose: &Pose, waypoint: Vec2, _: &OccupancyGrid, _: bool) -> Result<Velocity> {
        let features = PolicyState::new(scan, waypoint_to_polar(pose, waypoint))?.features();
        Ok(scale_action(self.actor.act(&features).into(), self.sim))
    }
}

/// Accumulates the per-step trace shared by every navigator.
#[derive(Debug, Clone, Default)]
pub struct Recorder {
    pub steps: Vec<StepTrace>,
    pub distance: f64,
    pub recovery_steps: usize,
}

impl Recorder {
    /// Logs the decision state, advances the simulator and returns the new
    /// robot state.
    pub fn advance(
        &mut self,
        world: &WorldModel,
        robot: &RobotState,
        waypoint: Option<Vec2>,
        grid: &OccupancyGrid,
        command: Velocity,
        sim: &SimConfig,
    ) -> RobotState {
        self.steps.push(StepTrace {
            pose: robot.pose,
            waypoint,
            known_area: grid.known_area(),
            recovering: waypoint.is_none(),
        });
        if waypoint.is_none() {
            self.recovery_steps += 1;
        }
        let next = step(world, robot, command, sim);
        self.distance += next.pose.position().distance(robot.pose.position());
        next
    }

    #[allow(clippy::too_many_arguments)]
    pub fn finish(
        self,
        method: &'static str,
        outcome: RunOutcome,
        robot: &RobotState,
        changes: Vec<WaypointChange>,
        grid: OccupancyGrid,
        pois: Vec<Vec2>,
        poi_trace: Option<PoiTrace>,
    ) -> RunRecord {
        RunRecord {
            method,
            outcome,
            final_pose: robot.pose,
            scans: self.steps.len() + 1,
            steps: self.steps,
            waypoint_changes: changes,
            recovery_steps: self.recovery_steps,
            distance: self.distance,
            grid,
            pois,
            poi_trace,
        }
    }
}

/// Empty map covering the world bounds plus a one-metre margin.
pub fn initial_grid(world: &WorldModel, resolution: f64) -> OccupancyGrid {
    let extent = Rect::new(
        world.bounds.min - Vec2::new(1.0, 1.0),
        world.bounds.max + Vec2::new(1.0, 1.0),
    );
    OccupancyGrid::new(extent, resolution)
}

/// Runs one exploration episode with a trained actor.
pub fn run_episode(world: &WorldModel, actor: &ActorNet, cfg: &ExplorerConfig) -> Result<RunRecord> {
    let mut controller = PolicyController { actor, sim: &cfg.sim };
    run_with_controller(world, cfg, cfg.mode.name(), &mut controller)
}

/// The exploration loop with an arbitrary local controller.
pub fn run_with_controller(
    world: &WorldModel,
    cfg: &ExplorerConfig,
    method: &'static str,
    controller: &mut dyn LocalController,
) -> Result<RunRecord> {
    cfg.validate()?;
    let params = &cfg.params;
    let goal = world.goal;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut robot = RobotState::at(world.start);
    let mut grid = initial_grid(world, cfg.map_resolution);
    let mut store = PoiStore::new(params);
    let mut trace = cfg.trace_pois.then(PoiTrace::default);
    let mut rec = Recorder::default();
    let mut changes = Vec::new();
    let mut recovering = 0usize;
    let mut waypoint = match cfg.mode {
        Mode::GdRl => {
            let w = Waypoint::Goal(goal);
            changes.push(WaypointChange { step: 0, reason: ChangeReason::Initial, waypoint: w });
            Some(w)
        }
        Mode::Gdae => None,
    };

    let outcome = loop {
        let t = rec.steps.len();
        let scan = cast_lidar(world, &robot, &cfg.sim, &mut rng);
        let pose = observe_pose(&robot, &cfg.sim, &mut rng);
        grid.integrate_scan(&pose, &scan);

        let mut scores = Vec::new();
        let mut changed = t == 0;
        if cfg.mode == Mode::Gdae {
            let mut new = extract_gap_pois(&scan, &pose, params.gap_threshold, t);
            new.extend(extract_freespace_pois(&scan, &pose, t));
            let report = store.update(new, &grid, &pose, params);
            let reached = waypoint.is_some_and(|w| pose.position().distance(w.position()) < params.reach_distance);
            if reached && waypoint.is_some_and(|w| w.is_goal()) {
                break RunOutcome::Goal;
            }
            let reason = match waypoint {
                None if changes.is_empty() => Some(ChangeReason::Initial),
                None => Some(ChangeReason::Cleared),
                Some(_) if reached => Some(ChangeReason::Reached),
                Some(_) if report.waypoint_cleared => Some(ChangeReason::Cleared),
                Some(_) => None,
            };
            if let Some(reason) = reason {
                if trace.is_some() {
                    scores = store.scores(&pose, goal, &grid, params);
                }
                match store.select_waypoint(&pose, goal, &grid, params) {
                    Ok(w) => {
                        waypoint = Some(w);
                        recovering = 0;
                        changed = true;
                        changes.push(WaypointChange { step: t, reason, waypoint: w });
                    }
                    Err(Error::NoCandidates) => {
                        store.current = None;
                        waypoint = None;
                        recovering += 1;
                    }
                    Err(e) => return Err(e),
                }
            }
        } else if pose.position().distance(goal) < params.reach_distance {
            break RunOutcome::Goal;
        }
        if let Some(tr) = &mut trace {
            tr.record(t, &store, &scores);
        }
        if recovering > cfg.recovery_steps || t >= cfg.step_budget {
            break RunOutcome::Timeout;
        }

        let command = match waypoint {
            Some(w) => controller.command(&scan, &pose, w.position(), &grid, changed)?,
            None => Velocity::new(0.0, cfg.sim.omega_max),
        };
        robot = rec.advance(world, &robot, waypoint.map(|w| w.position()), &grid, command, &cfg.sim);
        if robot.collided {
            break RunOutcome::Collision;
        }
    };

    let pois = store.active().map(|(_, c)| c.position).collect();
    Ok(rec.finish(method, outcome, &robot, changes, grid, pois, trace))
}
