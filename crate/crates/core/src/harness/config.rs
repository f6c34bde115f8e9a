//! Experiment files.
//!
//! Every file is TOML. A run-settings file holds the simulator, waypoint
//! and planner parameters shared by `explore` and `bench`:
//!
//! ```toml
//! step_budget = 3000
//! map_resolution = 0.1
//!
//! [sim]
//! sensor_noise_std = 0.03
//!
//! [idle]
//! gap_threshold = 1.0
//! goal_switch_distance = 10.0
//!
//! [planner]
//! replan_every = 10
//! ```
//!
//! A benchmark file adds the sweep itself; relative paths resolve against
//! the file's directory:
//!
//! ```toml
//! methods = ["GDAE", "GD_RL", "NF", "LP_AE", "PP"]
//! seeds = [0, 1, 2, 3, 4]
//! checkpoint = "../models/policy.ckpt"
//!
//! [[worlds]]
//! generator = "u_trap"
//! first_seed = 0
//! count = 10
//!
//! [[worlds]]
//! file = "../worlds/hall.toml"
//!
//! [settings]
//! step_budget = 3000
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{Baseline, BaselineConfig, FollowParams};
use crate::error::{Error, Result};
use crate::explorer::{ExplorerConfig, Mode};
use crate::navgraph::IdleParams;
use crate::sim::{generate_training_world, generate_trap_world, SimConfig, TrapKind, WorldModel};

/// Every navigator the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "GDAE")]
    Gdae,
    #[serde(rename = "GD_RL")]
    GdRl,
    #[serde(rename = "NF")]
    Nf,
    #[serde(rename = "LP_AE")]
    LpAe,
    #[serde(rename = "PP")]
    Pp,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Gdae, Method::GdRl, Method::Nf, Method::LpAe, Method::Pp];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gdae => "GDAE",
            Method::GdRl => "GD_RL",
            Method::Nf => "NF",
            Method::LpAe => "LP_AE",
            Method::Pp => "PP",
        }
    }

    /// Whether the method drives with the trained actor.
    pub fn needs_checkpoint(self) -> bool {
        matches!(self, Method::Gdae | Method::GdRl)
    }

    pub fn mode(self) -> Option<Mode> {
        match self {
            Method::Gdae => Some(Mode::Gdae),
            Method::GdRl => Some(Mode::GdRl),
            _ => None,
        }
    }

    pub fn baseline(self) -> Option<Baseline> {
        match self {
            Method::Nf => Some(Baseline::Nf),
            Method::LpAe => Some(Baseline::LpAe),
            Method::Pp => Some(Baseline::Pp),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_uppercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| Error::Parse(format!("unknown method `{s}` (expected GDAE, GD_RL, NF, LP_AE or PP)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSettings {
    /// m; robot radius + 0.1 when unset.
    pub inflation: Option<f64>,
    pub min_frontier_size: usize,
    pub replan_every: usize,
    pub follow: FollowParams,
}

impl Default for PlannerSettings {
    fn default() -> Self {
        let b = BaselineConfig::default();
        Self {
            inflation: b.inflation,
            min_frontier_size: b.min_frontier_size,
            replan_every: b.replan_every,
            follow: b.follow,
        }
    }
}

/// Parameters shared by every navigator in an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub step_budget: usize,
    pub recovery_steps: usize,
    pub map_resolution: f64,
    pub trace_pois: bool,
    pub sim: SimConfig,
    pub idle: IdleParams,
    pub planner: PlannerSettings,
}

impl Default for RunSettings {
    fn default() -> Self {
        let e = ExplorerConfig::default();
        Self {
            step_budget: e.step_budget,
            recovery_steps: e.recovery_steps,
            map_resolution: e.map_resolution,
            trace_pois: e.trace_pois,
            sim: e.sim,
            idle: e.params,
            planner: PlannerSettings::default(),
        }
    }
}

impl RunSettings {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn explorer(&self, mode: Mode, seed: u64) -> ExplorerConfig {
        ExplorerConfig {
            mode,
            params: self.idle,
            step_budget: self.step_budget,
            recovery_steps: self.recovery_steps,
            map_resolution: self.map_resolution,
            sim: SimConfig {
                rng_seed: seed,
                ..self.sim.clone()
            },
            seed,
            trace_pois: self.trace_pois,
        }
    }

    pub fn baseline(&self, seed: u64) -> BaselineConfig {
        BaselineConfig {
            explorer: self.explorer(Mode::Gdae, seed),
            inflation: self.planner.inflation,
            min_frontier_size: self.planner.min_frontier_size,
            replan_every: self.planner.replan_every,
            follow: self.planner.follow,
        }
    }
}

/// Where benchmark worlds come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum WorldSource {
    File {
        file: PathBuf,
        name: Option<String>,
    },
    Generator {
        /// `u_trap`, `corridor`, `clutter` or `training`.
        generator: String,
        #[serde(default)]
        first_seed: u64,
        #[serde(default = "one")]
        count: usize,
    },
}

fn one() -> usize {
    1
}

/// A world with a stable name used in outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedWorld {
    pub name: String,
    pub world: WorldModel,
}

/// Builds one world from a generator name and seed.
pub fn generate_world(generator: &str, seed: u64) -> Result<WorldModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if generator == "training" {
        generate_training_world(&mut rng)
    } else {
        generate_trap_world(generator.parse::<TrapKind>()?, &mut rng)
    }
}

/// Parses `kind:seed` (for example `u_trap:7`) or loads a world file.
pub fn resolve_world(spec: &str, clearance: f64) -> Result<NamedWorld> {
    if let Some((kind, seed)) = spec.split_once(':') {
        if let Ok(seed) = seed.parse::<u64>() {
            return Ok(NamedWorld {
                name: format!("{kind}-{seed:03}"),
                world: generate_world(kind, seed)?,
            });
        }
    }
    let path = Path::new(spec);
    Ok(NamedWorld {
        name: path
            .file_stem()
            .map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned()),
        world: WorldModel::load(path, clearance)?,
    })
}

impl WorldSource {
    pub fn expand(&self, base: &Path, clearance: f64) -> Result<Vec<NamedWorld>> {
        match self {
            WorldSource::File { file, name } => {
                let path = base.join(file);
                let world = WorldModel::load(&path, clearance)?;
                let name = name.clone().unwrap_or_else(|| {
                    path.file_stem()
                        .map_or_else(|| "world".into(), |s| s.to_string_lossy().into_owned())
                });
                Ok(vec![NamedWorld { name, world }])
            }
            WorldSource::Generator { generator, first_seed, count } => (*first_seed..*first_seed + *count as u64)
                .map(|seed| {
                    Ok(NamedWorld {
                        name: format!("{generator}-{seed:03}"),
                        world: generate_world(generator, seed)?,
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub worlds: Vec<WorldSource>,
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses the available parallelism.
    #[serde(default)]
    pub workers: usize,
    /// Write per-run trajectory, map and POI files.
    #[serde(default = "yes")]
    pub artifacts: bool,
    #[serde(default)]
    pub settings: RunSettings,
}

fn yes() -> bool {
    true
}

impl BenchSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Loads a spec and makes its relative paths absolute to its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut spec = Self::from_toml(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        spec.rebase(base);
        Ok(spec)
    }

    pub fn rebase(&mut self, base: &Path) {
        if let Some(c) = &mut self.checkpoint {
            *c = base.join(&*c);
        }
        if let Some(o) = &mut self.out {
            *o = base.join(&*o);
        }
        for w in &mut self.worlds {
            if let WorldSource::File { file, .. } = w {
                *file = base.join(&*file);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.seeds.is_empty() || self.worlds.is_empty() {
            return Err(Error::Config("methods, seeds and worlds must all be non-empty".into()));
        }
        Ok(())
    }

    pub fn needs_checkpoint(&self) -> bool {
        self.methods.iter().any(|m| m.needs_checkpoint())
    }

    /// All worlds in declaration order.
    pub fn worlds(&self) -> Result<Vec<NamedWorld>> {
        let mut out = Vec::new();
        for w in &self.worlds {
            out.extend(w.expand(Path::new(""), self.settings.sim.robot_radius)?);
        }
        Ok(out)
    }
}
