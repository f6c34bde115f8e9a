//! Goal-driven autonomous exploration in a simulated 2D world.
//!
//! A differential-drive robot with a planar lidar learns a local motion
//! policy with TD3, then reaches distant goals in unknown worlds by
//! following waypoints chosen from laser-derived points of interest,
//! mapping the world as it goes.
//!
//! The crate is organised bottom-up:
//!
//! - [`sim`]: kinematics, lidar ray casting, procedural worlds.
//! - [`mapping`]: ternary occupancy grid and map-information queries.
//! - [`navgraph`]: point-of-interest extraction and IDLE waypoint scoring.
//! - [`policy`]: dense network core, actor/critics, TD3 training.
//! - [`explorer`]: the closed exploration loop and the policy-only ablation.
//! - [`baselines`]: nearest-frontier, planner-driven and known-map navigators.
//! - [`harness`]: configuration, benchmarks, metrics and rendering.

pub mod baselines;
pub mod error;
pub mod explorer;
pub mod harness;
pub mod mapping;
pub mod navgraph;
pub mod policy;
pub mod sim;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/worlds.md")]
    mod worlds {}
    #[doc = include_str!("../../../book/src/mapping.md")]
    mod mapping {}
    #[doc = include_str!("../../../book/src/waypoints.md")]
    mod waypoints {}
    #[doc = include_str!("../../../book/src/policy.md")]
    mod policy {}
    #[doc = include_str!("../../../book/src/exploration.md")]
    mod exploration {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
}
