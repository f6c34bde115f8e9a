//! Static world description and its on-disk format.
//!
//! World files are TOML:
//!
//! ```toml
//! goal = [3.0, 0.0]
//!
//! [bounds]
//! min = [-5.0, -5.0]
//! max = [5.0, 5.0]
//!
//! [start]
//! x = -3.0
//! y = 0.0
//! heading = 0.0
//!
//! [[obstacles]]
//! kind = "box"
//! center = [0.0, 0.0]
//! half_extents = [0.5, 0.5]
//!
//! [[obstacles]]
//! kind = "polygon"
//! vertices = [[1.0, 1.0], [2.0, 1.0], [1.5, 2.0]]
//! ```
//!
//! A two-vertex polygon is a thin wall segment.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geometry::{Pose, Rect, Segment, Vec2};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Obstacle {
    Box { center: Vec2, half_extents: Vec2 },
    Polygon { vertices: Vec<Vec2> },
}

impl Obstacle {
    pub fn boxed(center: Vec2, half_extents: Vec2) -> Self {
        Obstacle::Box {
            center,
            half_extents,
        }
    }

    /// A thin wall between two points.
    pub fn wall(a: Vec2, b: Vec2) -> Self {
        Obstacle::Polygon {
            vertices: vec![a, b],
        }
    }

    pub fn segments(&self) -> Vec<Segment> {
        match self {
            Obstacle::Box {
                center,
                half_extents,
            } => Rect::from_center(*center, *half_extents).edges().to_vec(),
            Obstacle::Polygon { vertices } => match vertices.len() {
                0 => Vec::new(),
                1 => vec![Segment::new(vertices[0], vertices[0])],
                2 => vec![Segment::new(vertices[0], vertices[1])],
                n => (0..n)
                    .map(|i| Segment::new(vertices[i], vertices[(i + 1) % n]))
                    .collect(),
            },
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            Obstacle::Box {
                center,
                half_extents,
            } => Rect::from_center(*center, *half_extents).contains(p),
            Obstacle::Polygon { vertices } if vertices.len() >= 3 => {
                // convex: p is inside iff it lies on the same side of every edge
                let n = vertices.len();
                let mut sign = 0.0f64;
                for i in 0..n {
                    let e = vertices[(i + 1) % n] - vertices[i];
                    let c = e.cross(p - vertices[i]);
                    if c != 0.0 {
                        if sign != 0.0 && c.signum() != sign {
                            return false;
                        }
                        sign = c.signum();
                    }
                }
                true
            }
            Obstacle::Polygon { .. } => false,
        }
    }

    /// Euclidean distance from `p` to the obstacle, zero inside it.
    pub fn distance(&self, p: Vec2) -> f64 {
        if let Obstacle::Box {
            center,
            half_extents,
        } = self
        {
            let dx = ((p.x - center.x).abs() - half_extents.x).max(0.0);
            let dy = ((p.y - center.y).abs() - half_extents.y).max(0.0);
            return dx.hypot(dy);
        }
        if self.contains(p) {
            return 0.0;
        }
        self.segments()
            .iter()
            .map(|s| s.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    fn is_convex(&self) -> bool {
        let Obstacle::Polygon { vertices } = self else {
            return true;
        };
        let n = vertices.len();
        if n < 3 {
            return true;
        }
        let mut sign = 0.0f64;
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let z = (b - a).cross(c - b);
            if z != 0.0 {
                if sign != 0.0 && z.signum() != sign {
                    return false;
                }
                sign = z.signum();
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldModel {
    pub goal: Vec2,
    pub bounds: Rect,
    pub start: Pose,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
}

impl WorldModel {
    /// All obstacle edges plus the four boundary walls.
    pub fn segments(&self) -> Vec<Segment> {
        let mut segs: Vec<Segment> = self.bounds.edges().to_vec();
        for o in &self.obstacles {
            segs.extend(o.segments());
        }
        segs
    }

    /// Distance from `p` to the nearest obstacle or boundary wall.
    pub fn clearance(&self, p: Vec2) -> f64 {
        let b = &self.bounds;
        let wall = (p.x - b.min.x)
            .min(b.max.x - p.x)
            .min(p.y - b.min.y)
            .min(b.max.y - p.y);
        if wall < 0.0 {
            return 0.0;
        }
        self.obstacles
            .iter()
            .map(|o| o.distance(p))
            .fold(wall, f64::min)
    }

    /// True if a disk of `radius` centred at `p` touches any geometry.
    pub fn disk_collides(&self, p: Vec2, radius: f64) -> bool {
        self.clearance(p) < radius
    }

    /// Checks the file-level invariants: start and goal inside the bounds
    /// and at least `clearance` away from every obstacle; convex polygons.
    pub fn validate(&self, clearance: f64) -> Result<()> {
        if !(self.bounds.width() > 0.0 && self.bounds.height() > 0.0) {
            return Err(Error::InvalidWorld("bounds have no area".into()));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !o.is_convex() {
                return Err(Error::InvalidWorld(format!("obstacle {i} is not convex")));
            }
            if let Obstacle::Box { half_extents, .. } = o {
                if !(half_extents.x > 0.0 && half_extents.y > 0.0) {
                    return Err(Error::InvalidWorld(format!(
                        "obstacle {i} has non-positive half extents"
                    )));
                }
            }
        }
        for (name, p) in [("start", self.start.position()), ("goal", self.goal)] {
            if !self.bounds.contains(p) {
                return Err(Error::InvalidWorld(format!("{name} lies outside the bounds")));
            }
            if self.clearance(p) < clearance {
                return Err(Error::InvalidWorld(format!(
                    "{name} is within {clearance} m of an obstacle"
                )));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("world serialises")
    }

    pub fn from_toml(text: &str, clearance: f64) -> Result<Self> {
        let world: WorldModel = toml::from_str(text)?;
        world.validate(clearance)?;
        Ok(world)
    }

    pub fn load(path: impl AsRef<Path>, clearance: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, clearance)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }
}
