use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::sim::{LidarScan, SimConfig, Velocity};

use super::networks::STATE_DIM;

pub const LASER_BINS: usize = 21;
/// Distance scale for the waypoint-distance input.
pub const DISTANCE_SCALE: f64 = 10.0;

/// Min-pools the scan into [`LASER_BINS`] contiguous groups. Out-of-range
/// beams count as `max_range`.
pub fn bag_scan(scan: &LidarScan) -> Result<[f64; LASER_BINS]> {
    let n = scan.beam_count();
    if n == 0 || !n.is_multiple_of(LASER_BINS) {
        return Err(Error::BeamCountMismatch(n, LASER_BINS));
    }
    let group = n / LASER_BINS;
    let mut bins = [0.0; LASER_BINS];
    for (b, bin) in bins.iter_mut().enumerate() {
        *bin = (b * group..(b + 1) * group)
            .map(|i| scan.saturated(i))
            .fold(f64::INFINITY, f64::min);
    }
    Ok(bins)
}

/// Observation fed to the networks: bagged laser readings plus the polar
/// coordinates of the current waypoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyState {
    pub laser_bins: [f64; LASER_BINS],
    /// m
    pub waypoint_distance: f64,
    /// rad, relative to the heading, in `(-π, π]`
    pub waypoint_bearing: f64,
    pub max_range: f64,
}

impl PolicyState {
    pub fn new(scan: &LidarScan, waypoint_polar: (f64, f64)) -> Result<Self> {
        Ok(Self {
            laser_bins: bag_scan(scan)?,
            waypoint_distance: waypoint_polar.0,
            waypoint_bearing: waypoint_polar.1,
            max_range: scan.max_range,
        })
    }

    /// Normalized network input: bins / max_range, distance / 10 m,
    /// bearing / π.
    pub fn features(&self) -> [f64; STATE_DIM] {
        let mut f = [0.0; STATE_DIM];
        for (d, b) in f.iter_mut().zip(&self.laser_bins) {
            *d = b / self.max_range;
        }
        f[LASER_BINS] = self.waypoint_distance / DISTANCE_SCALE;
        f[LASER_BINS + 1] = self.waypoint_bearing / PI;
        f
    }
}

/// Unitless network output, each component in `(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawAction {
    pub linear: f64,
    pub angular: f64,
}

impl RawAction {
    pub const fn new(linear: f64, angular: f64) -> Self {
        Self { linear, angular }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.linear, self.angular]
    }
}

impl From<[f64; 2]> for RawAction {
    fn from(a: [f64; 2]) -> Self {
        Self::new(a[0], a[1])
    }
}

/// `v = v_max·(a1 + 1)/2`, `ω = ω_max·a2`. Forward motion only.
pub fn scale_action(raw: RawAction, cfg: &SimConfig) -> Velocity {
    Velocity::new(cfg.v_max * (raw.linear + 1.0) / 2.0, cfg.omega_max * raw.angular)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bag_takes_group_minimum() {
        let mut ranges = vec![Some(9.0); 126];
        for (i, r) in [4.0, 3.5, 5.0, 9.8, 2.2, 7.0].into_iter().enumerate() {
            ranges[i] = Some(r);
        }
        let bins = bag_scan(&LidarScan::front_layout(ranges, 10.0)).unwrap();
        assert_eq!(bins[0], 2.2);
        assert!(bins[1..].iter().all(|&b| b == 9.0));
    }

    #[test]
    fn bag_out_of_range_is_max_range() {
        let bins = bag_scan(&LidarScan::front_layout(vec![None; 126], 10.0)).unwrap();
        assert_eq!(bins, [10.0; LASER_BINS]);
    }

    #[test]
    fn bag_uniform() {
        let bins = bag_scan(&LidarScan::front_layout(vec![Some(3.0); 126], 10.0)).unwrap();
        assert_eq!(bins, [3.0; LASER_BINS]);
    }

    #[test]
    fn bag_rejects_indivisible_beam_count() {
        let err = bag_scan(&LidarScan::front_layout(vec![Some(3.0); 100], 10.0)).unwrap_err();
        assert!(matches!(err, Error::BeamCountMismatch(100, 21)));
    }

    #[test]
    fn scale_examples() {
        let cfg = SimConfig::default();
        assert_eq!(scale_action(RawAction::new(1.0, 0.0), &cfg), Velocity::new(0.5, 0.0));
        assert_eq!(scale_action(RawAction::new(-1.0, 0.0), &cfg), Velocity::new(0.0, 0.0));
        assert_eq!(scale_action(RawAction::new(0.0, -1.0), &cfg), Velocity::new(0.25, -1.0));
    }

    #[test]
    fn features_are_normalized() {
        let s = PolicyState::new(
            &LidarScan::front_layout(vec![Some(5.0); 126], 10.0),
            (2.0, PI / 2.0),
        )
        .unwrap();
        let f = s.features();
        assert_eq!(f[0], 0.5);
        assert_eq!(f[21], 0.2);
        assert_eq!(f[22], 0.5);
    }
}
