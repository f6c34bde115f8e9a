use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{RobotState, SimConfig, Vec2, WorldModel};

/// One planar sweep. `None` marks a beam with no return within `max_range`.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan {
    pub ranges: Vec<Option<f64>>,
    /// Angle of beam 0 relative to the robot heading.
    pub angle_min: f64,
    pub angle_increment: f64,
    pub max_range: f64,
}

impl LidarScan {
    /// Layout used by the simulator: `beam_count` beams at the centres of
    /// equal sectors spanning the 180° in front of the robot.
    pub fn front_layout(ranges: Vec<Option<f64>>, max_range: f64) -> Self {
        let inc = PI / ranges.len() as f64;
        Self {
            angle_min: -PI / 2.0 + inc / 2.0,
            angle_increment: inc,
            ranges,
            max_range,
        }
    }

    pub fn beam_count(&self) -> usize {
        self.ranges.len()
    }

    pub fn beam_angle(&self, i: usize) -> f64 {
        self.angle_min + i as f64 * self.angle_increment
    }

    /// Reading with out-of-range beams reported as `max_range`.
    pub fn saturated(&self, i: usize) -> f64 {
        self.ranges[i].unwrap_or(self.max_range)
    }
}

/// Casts every beam against the world geometry.
///
/// Hits are perturbed with zero-mean Gaussian noise of
/// `cfg.sensor_noise_std` and clamped to `(0, max_range]`.
pub fn cast_lidar<R: Rng + ?Sized>(
    world: &WorldModel,
    robot: &RobotState,
    cfg: &SimConfig,
    rng: &mut R,
) -> LidarScan {
    let segments = world.segments();
    let origin = robot.pose.position();
    let mut scan = LidarScan::front_layout(vec![None; cfg.beam_count], cfg.max_range);
    let noise = (cfg.sensor_noise_std > 0.0)
        .then(|| Normal::new(0.0, cfg.sensor_noise_std).expect("finite std"));
    for i in 0..cfg.beam_count {
        let angle = robot.pose.heading + scan.beam_angle(i);
        let dir = Vec2::new(angle.cos(), angle.sin());
        let hit = segments
            .iter()
            .filter_map(|s| s.ray_hit(origin, dir))
            .fold(f64::INFINITY, f64::min);
        if hit <= cfg.max_range {
            let r = match &noise {
                Some(n) => hit + n.sample(rng),
                None => hit,
            };
            scan.ranges[i] = Some(r.clamp(1e-3, cfg.max_range));
        }
    }
    scan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Obstacle, Pose, Rect};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn world(obstacles: Vec<Obstacle>) -> WorldModel {
        WorldModel {
            bounds: Rect::new(Vec2::new(-50.0, -50.0), Vec2::new(50.0, 50.0)),
            obstacles,
            start: Pose::new(0.0, 0.0, 0.0),
            goal: Vec2::new(1.0, 0.0),
        }
    }

    #[test]
    fn wall_in_front() {
        let w = world(vec![Obstacle::wall(
            Vec2::new(2.0, -40.0),
            Vec2::new(2.0, 40.0),
        )]);
        let cfg = SimConfig::noiseless();
        let scan = cast_lidar(&w, &RobotState::at(w.start), &cfg, &mut ChaCha8Rng::seed_from_u64(0));
        let mid = cfg.beam_count / 2;
        let r = scan.ranges[mid].unwrap();
        assert!((r - 2.0).abs() < 1e-3, "{r}");
        assert!((r - 2.0 / scan.beam_angle(mid).cos()).abs() < 1e-12);
    }

    #[test]
    fn empty_world_is_out_of_range() {
        let w = world(vec![]);
        let cfg = SimConfig::default();
        let scan = cast_lidar(&w, &RobotState::at(w.start), &cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(scan.beam_count(), 126);
        assert!(scan.ranges.iter().all(Option::is_none));
    }

    #[test]
    fn short_wall_analytic() {
        let w = world(vec![Obstacle::wall(Vec2::new(2.0, -0.5), Vec2::new(2.0, 0.5))]);
        let cfg = SimConfig::noiseless();
        let scan = cast_lidar(&w, &RobotState::at(w.start), &cfg, &mut ChaCha8Rng::seed_from_u64(0));
        let edge = 0.5f64.atan2(2.0);
        assert!((edge.to_degrees() - 14.036).abs() < 1e-3);
        assert!((2.0f64.hypot(0.5) - 2.0616).abs() < 1e-4);
        for i in 0..scan.beam_count() {
            let a = scan.beam_angle(i);
            match scan.ranges[i] {
                Some(r) => {
                    assert!(a.abs() <= edge + 1e-12);
                    assert!((r - 2.0 / a.cos()).abs() < 1e-9);
                }
                None => assert!(a.abs() > edge),
            }
        }
    }

    #[test]
    fn readings_are_clamped() {
        let w = world(vec![Obstacle::wall(
            Vec2::new(0.25, -40.0),
            Vec2::new(0.25, 40.0),
        )]);
        let cfg = SimConfig {
            sensor_noise_std: 1.0,
            ..SimConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let scan = cast_lidar(&w, &RobotState::at(w.start), &cfg, &mut rng);
            for r in scan.ranges.iter().flatten() {
                assert!(*r > 0.0 && *r <= cfg.max_range);
            }
        }
    }
}
