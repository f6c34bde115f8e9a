//! Experiment plumbing: configuration files, benchmark sweeps, metrics,
//! artifacts and the command line.

pub mod bench;
pub mod cli;
pub mod config;
pub mod render;

pub use bench::{run_benchmark, BenchResult, RunRow, Stats};
pub use config::{BenchSpec, Method, NamedWorld, RunSettings, WorldSource};
