//! Deterministic 2D simulation: unicycle kinematics, planar lidar and
//! procedural worlds.

mod geometry;
mod lidar;
mod world;
pub mod worldgen;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use geometry::{wrap_angle, Pose, Rect, Segment, Vec2};
pub use lidar::{cast_lidar, LidarScan};
pub use world::{Obstacle, WorldModel};
pub use worldgen::{generate_training_world, generate_trap_world, TrapKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// m/s
    pub v_max: f64,
    /// rad/s
    pub omega_max: f64,
    /// s
    pub timestep: f64,
    /// Collision sub-steps per timestep.
    pub substeps: u32,
    pub robot_radius: f64,
    pub sensor_noise_std: f64,
    /// Actuation noise on raw (unitless) actions, applied by the training loop.
    pub action_noise_std: f64,
    /// Standard deviation of the pose estimate handed to mapping (0 = true pose).
    pub odometry_noise_std: f64,
    pub beam_count: usize,
    pub max_range: f64,
    pub max_episode_steps: usize,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            v_max: 0.5,
            omega_max: 1.0,
            timestep: 0.1,
            substeps: 4,
            robot_radius: 0.2,
            sensor_noise_std: 0.03,
            action_noise_std: 0.0,
            odometry_noise_std: 0.0,
            beam_count: 126,
            max_range: 10.0,
            max_episode_steps: 500,
            rng_seed: 0,
        }
    }
}

impl SimConfig {
    pub fn noiseless() -> Self {
        Self {
            sensor_noise_std: 0.0,
            ..Self::default()
        }
    }
}

/// Velocity command in physical units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Velocity {
    pub v: f64,
    pub omega: f64,
}

impl Velocity {
    pub const fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub pose: Pose,
    pub linear_velocity: f64,
    pub angular_velocity: f64,
    pub collided: bool,
}

impl RobotState {
    pub fn at(pose: Pose) -> Self {
        Self {
            pose: Pose::new(pose.x, pose.y, wrap_angle(pose.heading)),
            linear_velocity: 0.0,
            angular_velocity: 0.0,
            collided: false,
        }
    }
}

/// Advances the robot one timestep.
///
/// The command is clamped to `[0, v_max] × [-ω_max, ω_max]` and integrated
/// with `substeps` Euler sub-steps. If any sub-step would bring the robot
/// disk into contact with geometry, the pose stays at the last free
/// sub-step and `collided` is set.
pub fn step(world: &WorldModel, robot: &RobotState, action: Velocity, cfg: &SimConfig) -> RobotState {
    let v = action.v.clamp(0.0, cfg.v_max);
    let omega = action.omega.clamp(-cfg.omega_max, cfg.omega_max);
    let n = cfg.substeps.max(1);
    let h = cfg.timestep / n as f64;
    let mut pose = robot.pose;
    let mut collided = false;
    for _ in 0..n {
        let next = Pose::new(
            pose.x + v * pose.heading.cos() * h,
            pose.y + v * pose.heading.sin() * h,
            wrap_angle(pose.heading + omega * h),
        );
        if world.disk_collides(next.position(), cfg.robot_radius) {
            collided = true;
            break;
        }
        pose = next;
    }
    RobotState {
        pose,
        linear_velocity: v,
        angular_velocity: omega,
        collided,
    }
}

/// Pose estimate used for mapping; the true pose plus optional Gaussian
/// odometry error.
pub fn observe_pose<R: Rng + ?Sized>(robot: &RobotState, cfg: &SimConfig, rng: &mut R) -> Pose {
    if cfg.odometry_noise_std <= 0.0 {
        return robot.pose;
    }
    let n = Normal::new(0.0, cfg.odometry_noise_std).expect("finite std");
    Pose::new(
        robot.pose.x + n.sample(rng),
        robot.pose.y + n.sample(rng),
        wrap_angle(robot.pose.heading + 0.1 * n.sample(rng)),
    )
}
