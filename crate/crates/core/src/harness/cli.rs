//! The `gdae` command line.
//!
//! Every subcommand takes the same optional `--seed`, `--config` and
//! `--out` flags. Failures print one line `error[<kind>]: <message>` on
//! stderr and exit with status 1; usage errors exit with status 2.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::policy::train::train_with_progress;
use crate::policy::{evaluate, training_worlds, ActorNet, Checkpoint, EvalSummary, TrainConfig};
use crate::sim::SimConfig;

use super::bench::run_benchmark;
use super::config::{generate_world, resolve_world, BenchSpec, Method, RunSettings};
use super::render::{render_saved, run_stem, write_run, RunSummary};

/// Episodes in the post-training evaluation.
pub const FINAL_EVAL_EPISODES: usize = 100;
/// RNG stream of the post-training evaluation worlds, disjoint from the
/// streams used during training.
pub const FINAL_EVAL_STREAM: u64 = 7;

#[derive(Debug, Parser)]
#[command(name = "gdae", version, about = "Goal-driven exploration with a TD3 local policy")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Seed for the run (overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML config file for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (or file for `render`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the local policy; `--config` is a training file.
    Train,
    /// Run one method on one world; `--config` is a run-settings file.
    Explore {
        /// World file, or `kind:seed` for a generated world.
        #[arg(long)]
        world: String,
        /// GDAE, GD_RL, NF, LP_AE or PP.
        #[arg(long)]
        method: Method,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Run a benchmark file; `--seed` restricts it to one seed.
    Bench {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Draw a saved run as a PPM overlay.
    Render {
        /// Any artifact of the run, or its common stem.
        #[arg(long)]
        run: PathBuf,
        /// Pixels per map cell.
        #[arg(long, default_value_t = 2)]
        scale: usize,
    },
    /// Write generated worlds as TOML files.
    Worldgen {
        /// `training`, `u_trap`, `corridor` or `clutter`.
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

/// Parses `args` (program name first), runs, and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(report) => {
            print!("{report}");
            0
        }
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), e);
            1
        }
    }
}

/// Runs a parsed command, returning the text meant for stdout.
pub fn execute(cli: &Cli) -> Result<String> {
    let c = &cli.common;
    match &cli.command {
        Command::Train => train(c),
        Command::Explore { world, method, checkpoint } => explore(c, world, *method, checkpoint.as_deref()),
        Command::Bench { spec } => bench(c, spec),
        Command::Render { run, scale } => render(c, run, *scale),
        Command::Worldgen { kind, count } => worldgen(c, kind, *count),
    }
}

fn out_dir(c: &Common) -> PathBuf {
    c.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

/// Noise-free evaluation of `actor` on fresh training-distribution worlds.
pub fn final_evaluation(actor: &ActorNet, cfg: &TrainConfig, episodes: usize) -> Result<EvalSummary> {
    let worlds = training_worlds(cfg.seed, FINAL_EVAL_STREAM, episodes)?;
    let sim = SimConfig {
        sensor_noise_std: 0.0,
        action_noise_std: 0.0,
        ..cfg.sim.clone()
    };
    Ok(evaluate(actor, &worlds, &sim, &cfg.reward, cfg.seed))
}

pub fn load_train_config(path: Option<&Path>) -> Result<TrainConfig> {
    match path {
        Some(p) => Ok(toml::from_str(&std::fs::read_to_string(p)?)?),
        None => Ok(TrainConfig::default()),
    }
}

fn train(c: &Common) -> Result<String> {
    let mut cfg = load_train_config(c.config.as_deref())?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let out = out_dir(c);
    std::fs::create_dir_all(&out)?;
    let result = train_with_progress(&cfg, |e| {
        if let Some(s) = e.eval_success {
            eprintln!("episode {:>5}  eval success {:.2}", e.episode + 1, s);
        }
    })?;
    let agent = &result.agent;
    let ckpt = Checkpoint {
        actor: agent.actor.clone(),
        critics: vec![agent.critic1.clone(), agent.critic2.clone()],
    };
    let ckpt_path = out.join("policy.ckpt");
    ckpt.save(&ckpt_path)?;
    std::fs::write(out.join("training_log.csv"), result.log.to_csv())?;
    let eval = final_evaluation(&agent.actor, &cfg, FINAL_EVAL_EPISODES)?;
    std::fs::write(
        out.join("evaluation.toml"),
        format!(
            "episodes = {}\ngoals = {}\ncollisions = {}\nsuccess_rate = {:.4}\n",
            eval.episodes,
            eval.goals,
            eval.collisions,
            eval.success_rate()
        ),
    )?;
    Ok(format!(
        "checkpoint {}\nnoise-free success {}/{} ({:.1}%)\n",
        ckpt_path.display(),
        eval.goals,
        eval.episodes,
        100.0 * eval.success_rate()
    ))
}

fn explore(c: &Common, world: &str, method: Method, checkpoint: Option<&Path>) -> Result<String> {
    let settings = match &c.config {
        Some(p) => RunSettings::load(p)?,
        None => RunSettings::default(),
    };
    let seed = c.seed.unwrap_or(0);
    let named = resolve_world(world, settings.sim.robot_radius)?;
    let actor = if method.needs_checkpoint() {
        let p = checkpoint.ok_or_else(|| Error::MissingCheckpoint(format!("{method} needs --checkpoint")))?;
        if !p.exists() {
            return Err(Error::MissingCheckpoint(p.display().to_string()));
        }
        Some(Checkpoint::load(p)?.actor)
    } else {
        None
    };
    let record = super::bench::run_method(method, &named, seed, actor.as_ref(), &settings)?;
    let summary = RunSummary::new(&record, &named.name, &named.world, seed, &settings.sim);
    let stem = out_dir(c).join(format!("{}-{}-s{}", named.name, method, seed));
    write_run(&stem, &summary, &record)?;
    Ok(format!(
        "{} {} seed {}: {} after {} steps, {:.2} m, map {:.1} m²\nartifacts {}.*\n",
        method,
        named.name,
        seed,
        summary.outcome,
        summary.steps,
        summary.distance,
        summary.map_area,
        stem.display()
    ))
}

fn bench(c: &Common, spec_path: &Path) -> Result<String> {
    let mut spec = BenchSpec::load(spec_path)?;
    if let Some(s) = c.seed {
        spec.seeds = vec![s];
    }
    if let Some(p) = &c.config {
        spec.settings = RunSettings::load(p)?;
    }
    if let Some(o) = &c.out {
        spec.out = Some(o.clone());
    }
    if spec.out.is_none() {
        spec.out = Some(PathBuf::from("out"));
    }
    let result = run_benchmark(&spec)?;
    let mut report = result.table();
    for v in &result.oracle_violations {
        report.push_str(&format!("warning: {v}\n"));
    }
    if let Some(p) = &result.metrics_path {
        report.push_str(&format!("metrics {}\n", p.display()));
    }
    Ok(report)
}

fn render(c: &Common, run: &Path, scale: usize) -> Result<String> {
    let stem = run_stem(run);
    let ppm = render_saved(&stem, scale)?;
    let out = c.out.clone().unwrap_or_else(|| {
        let mut s = stem.clone().into_os_string();
        s.push(".ppm");
        PathBuf::from(s)
    });
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&out, ppm)?;
    Ok(format!("{}\n", out.display()))
}

fn worldgen(c: &Common, kind: &str, count: usize) -> Result<String> {
    let first = c.seed.unwrap_or(0);
    let out = out_dir(c);
    std::fs::create_dir_all(&out)?;
    let mut report = String::new();
    for seed in first..first + count as u64 {
        let world = generate_world(kind, seed)?;
        let path = out.join(format!("{kind}-{seed:03}.toml"));
        world.save(&path)?;
        report.push_str(&format!("{}\n", path.display()));
    }
    Ok(report)
}
