//! Benchmark sweeps over methods × worlds × seeds.
//!
//! `metrics.csv` (schema version [`METRICS_SCHEMA`]) has the columns
//!
//! ```text
//! method,world,seed,outcome,goals,distance_m,distance_max,distance_min,distance_std,
//! time_s,time_max,time_min,time_std,map_m2,map_max,map_min,map_std
//! ```
//!
//! Each run contributes one row with its own `distance_m`, `time_s` and
//! `map_m2`; the statistic columns stay empty. After the runs of every
//! method × world pair comes one aggregate row with `seed = all`,
//! `goals = k/N` and mean, max, min and population standard deviation over
//! the `k` runs that reached the goal. With `k = 0` the outcome reads
//! `absent` and the numeric columns are empty, otherwise it reads
//! `aggregate`. Rows are sorted by method, world and seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::explorer::{run_episode, RunOutcome, RunRecord};
use crate::policy::{ActorNet, Checkpoint};

use super::config::{BenchSpec, Method, NamedWorld, RunSettings};
use super::render::{write_run, RunSummary};

pub const METRICS_SCHEMA: u32 = 1;

pub const METRICS_HEADER: &str = "method,world,seed,outcome,goals,distance_m,distance_max,distance_min,distance_std,\
time_s,time_max,time_min,time_std,map_m2,map_max,map_min,map_std";

/// Runs one method on one world.
pub fn run_method(
    method: Method,
    world: &NamedWorld,
    seed: u64,
    actor: Option<&ActorNet>,
    settings: &RunSettings,
) -> Result<RunRecord> {
    match (method.mode(), method.baseline()) {
        (Some(mode), _) => {
            let actor = actor.ok_or_else(|| Error::MissingCheckpoint(format!("{method} needs a trained actor")))?;
            run_episode(&world.world, actor, &settings.explorer(mode, seed))
        }
        (_, Some(b)) => crate::baselines::run_baseline(&world.world, b, &settings.baseline(seed)),
        _ => unreachable!("every method is a mode or a baseline"),
    }
}

/// One executed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub method: Method,
    pub world: String,
    pub seed: u64,
    pub outcome: RunOutcome,
    pub distance: f64,
    pub time: f64,
    pub map_area: f64,
}

impl RunRow {
    pub fn succeeded(&self) -> bool {
        self.outcome == RunOutcome::Goal
    }
}

/// Mean, max, min and population σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    pub std: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            mean,
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            std: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub method: Method,
    pub world: String,
    pub goals: usize,
    pub runs: usize,
    pub distance: Option<Stats>,
    pub time: Option<Stats>,
    pub map_area: Option<Stats>,
}

/// Groups rows by method × world; aggregates use successful runs only.
pub fn aggregate(rows: &[RunRow]) -> Vec<Aggregate> {
    let mut keys: Vec<(Method, &str)> = rows.iter().map(|r| (r.method, r.world.as_str())).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(method, world)| {
            let group: Vec<&RunRow> = rows.iter().filter(|r| r.method == method && r.world == world).collect();
            let ok: Vec<&RunRow> = group.iter().copied().filter(|r| r.succeeded()).collect();
            let col = |f: fn(&RunRow) -> f64| Stats::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            Aggregate {
                method,
                world: world.to_string(),
                goals: ok.len(),
                runs: group.len(),
                distance: col(|r| r.distance),
                time: col(|r| r.time),
                map_area: col(|r| r.map_area),
            }
        })
        .collect()
}

/// Every case where a successful PP run is longer than a successful run
/// of another method on the same world and seed.
pub fn oracle_violations(rows: &[RunRow]) -> Vec<String> {
    let mut out = Vec::new();
    for pp in rows.iter().filter(|r| r.method == Method::Pp && r.succeeded()) {
        for r in rows.iter().filter(|r| {
            r.method != Method::Pp && r.succeeded() && r.world == pp.world && r.seed == pp.seed
        }) {
            if pp.distance > r.distance {
                out.push(format!(
                    "{} seed {}: PP {:.3} m > {} {:.3} m",
                    pp.world, pp.seed, pp.distance, r.method, r.distance
                ));
            }
        }
    }
    out
}

fn stats_cells(s: Option<Stats>, decimals: usize) -> String {
    match s {
        Some(s) => format!(
            "{:.d$},{:.d$},{:.d$},{:.d$}",
            s.mean,
            s.max,
            s.min,
            s.std,
            d = decimals
        ),
        None => ",,,".into(),
    }
}

/// Renders rows and aggregates as `metrics.csv`.
pub fn metrics_csv(rows: &[RunRow]) -> String {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| (a.method, &a.world, a.seed).cmp(&(b.method, &b.world, b.seed)));
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for agg in aggregate(&rows) {
        for r in rows.iter().filter(|r| r.method == agg.method && r.world == agg.world) {
            let _ = writeln!(
                out,
                "{},{},{},{},,{:.3},,,,{:.1},,,,{:.2},,,",
                r.method,
                r.world,
                r.seed,
                r.outcome.name(),
                r.distance,
                r.time,
                r.map_area
            );
        }
        let label = if agg.goals == 0 { "absent" } else { "aggregate" };
        let _ = writeln!(
            out,
            "{},{},all,{},{}/{},{},{},{}",
            agg.method,
            agg.world,
            label,
            agg.goals,
            agg.runs,
            stats_cells(agg.distance, 3),
            stats_cells(agg.time, 1),
            stats_cells(agg.map_area, 2)
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub rows: Vec<RunRow>,
    pub aggregates: Vec<Aggregate>,
    pub oracle_violations: Vec<String>,
    pub metrics_path: Option<PathBuf>,
}

impl BenchResult {
    /// Mean distance of `method` over all successful runs on all worlds.
    pub fn mean_distance(&self, method: Method) -> Option<f64> {
        let d: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.method == method && r.succeeded())
            .map(|r| r.distance)
            .collect();
        Stats::of(&d).map(|s| s.mean)
    }

    pub fn goals(&self, method: Method) -> (usize, usize) {
        let runs = self.rows.iter().filter(|r| r.method == method);
        let n = runs.clone().count();
        (runs.filter(|r| r.succeeded()).count(), n)
    }

    /// A fixed-width table of the aggregates.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<6} {:<16} {:>6} {:>9} {:>9} {:>9} {:>9}\n",
            "method", "world", "goals", "dist_av", "dist_max", "dist_min", "dist_std"
        );
        for a in &self.aggregates {
            let goals = format!("{}/{}", a.goals, a.runs);
            match a.distance {
                Some(d) => {
                    let _ = writeln!(
                        s,
                        "{:<6} {:<16} {:>6} {:>9.2} {:>9.2} {:>9.2} {:>9.2}",
                        a.method.name(),
                        a.world,
                        goals,
                        d.mean,
                        d.max,
                        d.min,
                        d.std
                    );
                }
                None => {
                    let _ = writeln!(s, "{:<6} {:<16} {:>6} {:>9}", a.method.name(), a.world, goals, "absent");
                }
            }
        }
        s
    }
}

fn load_actor(spec: &BenchSpec) -> Result<Option<ActorNet>> {
    if !spec.needs_checkpoint() {
        return Ok(None);
    }
    let path = spec
        .checkpoint
        .as_ref()
        .ok_or_else(|| Error::MissingCheckpoint("the spec runs a learning method but names no checkpoint".into()))?;
    if !path.exists() {
        return Err(Error::MissingCheckpoint(path.display().to_string()));
    }
    Ok(Some(Checkpoint::load(path)?.actor))
}

/// Executes every (method, world, seed) triple and writes `metrics.csv`
/// plus per-run artifacts under `spec.out` when it is set.
///
/// Errors inside a run are recorded as a `TIMEOUT` row; only setup errors
/// (bad worlds, missing checkpoint, unwritable output) abort the sweep.
pub fn run_benchmark(spec: &BenchSpec) -> Result<BenchResult> {
    spec.validate()?;
    let actor = load_actor(spec)?;
    let worlds = spec.worlds()?;
    let jobs: Vec<(Method, usize, u64)> = spec
        .methods
        .iter()
        .flat_map(|&m| (0..worlds.len()).flat_map(move |w| spec.seeds.iter().map(move |&s| (m, w, s))))
        .collect();
    let out = spec.out.clone();
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir.join("runs"))?;
    }
    let workers = match spec.workers {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(jobs.len())
    .max(1);

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunRow>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(method, w, seed)) = jobs.get(k) else { break };
                let row = execute(method, &worlds[w], seed, actor.as_ref(), spec, out.as_deref());
                results.lock().expect("worker panicked")[k] = Some(row);
            });
        }
    });
    let rows = results
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect::<Result<Vec<_>>>()?;

    let metrics_path = match &out {
        Some(dir) => {
            let p = dir.join("metrics.csv");
            std::fs::write(&p, metrics_csv(&rows))?;
            Some(p)
        }
        None => None,
    };
    Ok(BenchResult {
        aggregates: aggregate(&rows),
        oracle_violations: oracle_violations(&rows),
        rows,
        metrics_path,
    })
}

fn execute(
    method: Method,
    world: &NamedWorld,
    seed: u64,
    actor: Option<&ActorNet>,
    spec: &BenchSpec,
    out: Option<&Path>,
) -> Result<RunRow> {
    let settings = &spec.settings;
    let record = match run_method(method, world, seed, actor, settings) {
        Ok(r) => r,
        Err(e @ (Error::MissingCheckpoint(_) | Error::Io(_))) => return Err(e),
        Err(_) => {
            return Ok(RunRow {
                method,
                world: world.name.clone(),
                seed,
                outcome: RunOutcome::Timeout,
                distance: 0.0,
                time: 0.0,
                map_area: 0.0,
            })
        }
    };
    let summary = RunSummary::new(&record, &world.name, &world.world, seed, &settings.sim);
    if let (Some(dir), true) = (out, spec.artifacts) {
        let stem = dir.join("runs").join(format!("{}-{}-s{}", world.name, method, seed));
        write_run(&stem, &summary, &record)?;
    }
    Ok(RunRow {
        method,
        world: world.name.clone(),
        seed,
        outcome: record.outcome,
        distance: record.distance,
        time: summary.time,
        map_area: summary.map_area,
    })
}
