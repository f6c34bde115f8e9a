//! Per-run artifacts and the map overlay image.
//!
//! A run saved under the stem `dir/NAME` consists of
//!
//! | file | content |
//! |------|---------|
//! | `NAME.run.toml` | method, world, seed, outcome, metrics, start and goal |
//! | `NAME.traj.csv` | one row per step: pose, waypoint, known area |
//! | `NAME.map.pgm` + `NAME.map.txt` | final occupancy grid and its georeference |
//! | `NAME.pois.csv` | points of interest still active at the end |
//! | `NAME.poitrace.csv` | per-step candidate scores, when tracing is on |
//! | `NAME.ppm` | overlay of path, POIs, start and goal on the map |

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explorer::RunRecord;
use crate::mapping::line_cells;
use crate::sim::{SimConfig, Vec2, WorldModel};

/// Scalar description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: String,
    pub world: String,
    pub seed: u64,
    pub outcome: String,
    /// m
    pub distance: f64,
    pub steps: usize,
    /// Simulated seconds.
    pub time: f64,
    /// m²
    pub map_area: f64,
    pub start: Vec2,
    pub goal: Vec2,
}

impl RunSummary {
    pub fn new(record: &RunRecord, world_name: &str, world: &WorldModel, seed: u64, sim: &SimConfig) -> Self {
        Self {
            method: record.method.to_string(),
            world: world_name.to_string(),
            seed,
            outcome: record.outcome.name().to_string(),
            distance: record.distance,
            steps: record.elapsed_steps(),
            time: record.elapsed_time(sim),
            map_area: record.grid.known_area(),
            start: world.start.position(),
            goal: world.goal,
        }
    }
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes every artifact of `record` next to `stem`.
pub fn write_run(stem: &Path, summary: &RunSummary, record: &RunRecord) -> Result<()> {
    if let Some(dir) = stem.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let toml = toml::to_string(summary).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(with_suffix(stem, ".run.toml"), toml)?;
    std::fs::write(with_suffix(stem, ".traj.csv"), record.trajectory_csv())?;
    record.grid.save(with_suffix(stem, ".map.pgm"))?;
    let mut pois = String::from("x,y\n");
    for p in &record.pois {
        let _ = writeln!(pois, "{:.4},{:.4}", p.x, p.y);
    }
    std::fs::write(with_suffix(stem, ".pois.csv"), pois)?;
    if let Some(trace) = &record.poi_trace {
        std::fs::write(with_suffix(stem, ".poitrace.csv"), trace.to_csv())?;
    }
    let grid = MapImage::from_pgm(&record.grid.to_pgm(), &record.grid.sidecar())?;
    let ppm = render_overlay(&grid, &record.path(), &record.pois, summary.start, summary.goal, 2);
    std::fs::write(with_suffix(stem, ".ppm"), ppm)?;
    Ok(())
}

/// A grayscale map read back from PGM plus sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct MapImage {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: Vec2,
    /// Row-major, top row first.
    pub pixels: Vec<u8>,
}

#[derive(Deserialize)]
struct Sidecar {
    resolution: f64,
    origin: [f64; 2],
    width: usize,
    height: usize,
}

impl MapImage {
    pub fn from_pgm(pgm: &[u8], sidecar: &str) -> Result<Self> {
        let meta: Sidecar = toml::from_str(sidecar)?;
        let bad = |m: &str| Error::Parse(format!("pgm: {m}"));
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < pgm.len() && pgm[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < pgm.len() && !pgm[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&pgm[start..pos]).map_err(|_| bad("header"))?.to_string());
        }
        pos += 1;
        if fields[0] != "P5" || fields[3] != "255" {
            return Err(bad("expected binary 8-bit P5"));
        }
        let width: usize = fields[1].parse().map_err(|_| bad("width"))?;
        let height: usize = fields[2].parse().map_err(|_| bad("height"))?;
        if (width, height) != (meta.width, meta.height) {
            return Err(bad("size disagrees with sidecar"));
        }
        let pixels = pgm.get(pos..pos + width * height).ok_or_else(|| bad("truncated pixels"))?;
        Ok(Self {
            width,
            height,
            resolution: meta.resolution,
            origin: Vec2::new(meta.origin[0], meta.origin[1]),
            pixels: pixels.to_vec(),
        })
    }

    pub fn load(pgm_path: &Path) -> Result<Self> {
        let pgm = std::fs::read(pgm_path)?;
        let sidecar = std::fs::read_to_string(pgm_path.with_extension("txt"))?;
        Self::from_pgm(&pgm, &sidecar)
    }

    /// Pixel (column, row) of a world point; may lie outside the image.
    pub fn pixel(&self, p: Vec2) -> (i64, i64) {
        let i = ((p.x - self.origin.x) / self.resolution).floor() as i64;
        let j = ((p.y - self.origin.y) / self.resolution).floor() as i64;
        (i, self.height as i64 - 1 - j)
    }
}

/// An RGB raster written as binary PPM.
struct Canvas {
    width: usize,
    height: usize,
    rgb: Vec<[u8; 3]>,
}

impl Canvas {
    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.rgb[y as usize * self.width + x as usize] = c;
        }
    }

    fn square(&mut self, (x, y): (i64, i64), half: i64, c: [u8; 3]) {
        for dy in -half..=half {
            for dx in -half..=half {
                self.put(x + dx, y + dy, c);
            }
        }
    }

    fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.rgb.iter().flatten());
        out
    }
}

const PATH: [u8; 3] = [220, 30, 30];
const POI: [u8; 3] = [30, 90, 230];
const START: [u8; 3] = [20, 170, 40];
const GOAL: [u8; 3] = [230, 150, 0];

/// Draws the path as a polyline, POIs as small squares and start and goal
/// as larger squares over the map, each map cell `scale` pixels wide.
pub fn render_overlay(map: &MapImage, path: &[Vec2], pois: &[Vec2], start: Vec2, goal: Vec2, scale: usize) -> Vec<u8> {
    let s = scale.max(1);
    let mut canvas = Canvas {
        width: map.width * s,
        height: map.height * s,
        rgb: vec![[0; 3]; map.width * map.height * s * s],
    };
    for y in 0..canvas.height {
        for x in 0..canvas.width {
            let g = map.pixels[(y / s) * map.width + x / s];
            canvas.rgb[y * canvas.width + x] = [g, g, g];
        }
    }
    let px = |p: Vec2| {
        let (i, j) = map.pixel(p);
        (i * s as i64 + s as i64 / 2, j * s as i64 + s as i64 / 2)
    };
    for w in path.windows(2) {
        for (x, y) in line_cells(px(w[0]), px(w[1])) {
            canvas.put(x, y, PATH);
        }
    }
    let mark = s as i64;
    for &p in pois {
        canvas.square(px(p), mark, POI);
    }
    canvas.square(px(start), 2 * mark, START);
    canvas.square(px(goal), 2 * mark, GOAL);
    canvas.to_ppm()
}

/// Reads the path column pair back from a trajectory CSV.
pub fn read_trajectory(csv: &str) -> Result<Vec<Vec2>> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let mut f = l.split(',').skip(1);
            let mut num = || -> Result<f64> {
                f.next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("trajectory row `{l}`")))
            };
            Ok(Vec2::new(num()?, num()?))
        })
        .collect()
}

/// Reads an `x,y` point list.
pub fn read_points(csv: &str) -> Result<Vec<Vec2>> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let (x, y) = l.split_once(',').ok_or_else(|| Error::Parse(format!("point row `{l}`")))?;
            let p = |v: &str| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("point row `{l}`")));
            Ok(Vec2::new(p(x)?, p(y)?))
        })
        .collect()
}

/// Rebuilds the overlay of a saved run from its files.
pub fn render_saved(stem: &Path, scale: usize) -> Result<Vec<u8>> {
    let summary: RunSummary = toml::from_str(&std::fs::read_to_string(with_suffix(stem, ".run.toml"))?)?;
    let map = MapImage::load(&with_suffix(stem, ".map.pgm"))?;
    let path = read_trajectory(&std::fs::read_to_string(with_suffix(stem, ".traj.csv"))?)?;
    let pois = match std::fs::read_to_string(with_suffix(stem, ".pois.csv")) {
        Ok(s) => read_points(&s)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    Ok(render_overlay(&map, &path, &pois, summary.start, summary.goal, scale))
}

/// Accepts a stem or any of its artifact paths.
pub fn run_stem(path: &Path) -> PathBuf {
    let s = path.to_string_lossy();
    for suffix in [".run.toml", ".traj.csv", ".map.pgm", ".map.txt", ".pois.csv", ".poitrace.csv", ".ppm"] {
        if let Some(stem) = s.strip_suffix(suffix) {
            return PathBuf::from(stem);
        }
    }
    path.to_path_buf()
}
