//! Points of interest, their lifecycle, and IDLE waypoint selection.
//!
//! Candidates come from two scan features: a jump between adjacent finite
//! returns (a gap) and a run of beams with no return (open space). The store
//! keeps every candidate ever accepted; deleted ones stay in place so that
//! candidate ids (indices) are stable for the whole run.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{Cell, InfoKernel, OccupancyGrid};
use crate::sim::{LidarScan, Pose, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdleParams {
    pub l1: f64,
    pub l2: f64,
    pub kernel: InfoKernel,
    pub gap_threshold: f64,
    /// η_D: a waypoint counts as reached inside this distance.
    pub reach_distance: f64,
    /// δ: inside this distance the global goal becomes the waypoint.
    pub goal_switch_distance: f64,
    pub waypoint_timeout: usize,
    pub merge_radius: f64,
    pub obstacle_clearance: f64,
    pub visit_radius: f64,
}

impl Default for IdleParams {
    fn default() -> Self {
        Self {
            l1: 5.0,
            l2: 10.0,
            kernel: InfoKernel::default(),
            gap_threshold: 1.0,
            reach_distance: 1.0,
            goal_switch_distance: 10.0,
            waypoint_timeout: 100,
            merge_radius: 0.5,
            obstacle_clearance: 0.45,
            visit_radius: 1.0,
        }
    }
}

impl IdleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l1 > 0.0 && self.l2 > self.l1) {
            return Err(Error::Config(format!("need l2 > l1 > 0, got l1={} l2={}", self.l1, self.l2)));
        }
        if !(self.gap_threshold > 0.0) {
            return Err(Error::Config("gap_threshold must be positive".into()));
        }
        if !(self.reach_distance > 0.0) {
            return Err(Error::Config("reach_distance must be positive".into()));
        }
        if !(self.kernel.size > 0.0) {
            return Err(Error::Config("kernel size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoiSource {
    Gap,
    OutOfRange,
}

impl PoiSource {
    pub fn name(self) -> &'static str {
        match self {
            PoiSource::Gap => "gap",
            PoiSource::OutOfRange => "out_of_range",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoiStatus {
    Active,
    Deleted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoiCandidate {
    pub position: Vec2,
    pub created_step: usize,
    pub source: PoiSource,
    pub status: PoiStatus,
}

impl PoiCandidate {
    pub fn new(position: Vec2, created_step: usize, source: PoiSource) -> Self {
        Self {
            position,
            created_step,
            source,
            status: PoiStatus::Active,
        }
    }

    pub fn is_active(&self) -> bool {
        self.status == PoiStatus::Active
    }
}

fn beam_end(pose: &Pose, scan: &LidarScan, beam: usize, range: f64) -> Vec2 {
    pose.position() + Vec2::from_polar(range, pose.heading + scan.beam_angle(beam))
}

/// One candidate at the midpoint of each pair of adjacent finite returns
/// whose ranges differ by more than `gap_threshold`.
pub fn extract_gap_pois(scan: &LidarScan, pose: &Pose, gap_threshold: f64, step: usize) -> Vec<PoiCandidate> {
    let mut out = Vec::new();
    for j in 1..scan.beam_count() {
        if let (Some(a), Some(b)) = (scan.ranges[j - 1], scan.ranges[j]) {
            if (a - b).abs() > gap_threshold {
                let mid = (beam_end(pose, scan, j - 1, a) + beam_end(pose, scan, j, b)) * 0.5;
                out.push(PoiCandidate::new(mid, step, PoiSource::Gap));
            }
        }
    }
    out
}

/// One candidate per maximal run of at least two beams without a return,
/// placed at half the maximum range along the run's central beam.
///
/// Even-length runs have two central beams; the candidate sits on the
/// bisector of the pair.
pub fn extract_freespace_pois(scan: &LidarScan, pose: &Pose, step: usize) -> Vec<PoiCandidate> {
    let mut out = Vec::new();
    let n = scan.beam_count();
    let mut j = 0;
    while j < n {
        if scan.ranges[j].is_some() {
            j += 1;
            continue;
        }
        let start = j;
        while j < n && scan.ranges[j].is_none() {
            j += 1;
        }
        if j - start >= 2 {
            let centre = (start + j - 1) as f64 / 2.0;
            let angle = pose.heading + scan.angle_min + centre * scan.angle_increment;
            let p = pose.position() + Vec2::from_polar(scan.max_range / 2.0, angle);
            out.push(PoiCandidate::new(p, step, PoiSource::OutOfRange));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Waypoint {
    Goal(Vec2),
    Poi { id: usize, position: Vec2 },
}

impl Waypoint {
    pub fn position(&self) -> Vec2 {
        match *self {
            Waypoint::Goal(p) | Waypoint::Poi { position: p, .. } => p,
        }
    }

    pub fn is_goal(&self) -> bool {
        matches!(self, Waypoint::Goal(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentWaypoint {
    pub waypoint: Waypoint,
    pub steps_since_selected: usize,
}

/// Trail positions bucketed by a square cell of side `visit_radius`.
#[derive(Debug, Clone, Default)]
struct TrailIndex {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<Vec2>>,
}

impl TrailIndex {
    fn key(&self, p: Vec2) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    fn insert(&mut self, p: Vec2) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(p);
    }

    fn within(&self, p: Vec2, radius: f64) -> bool {
        let (ki, kj) = self.key(p);
        let reach = (radius / self.cell).ceil() as i64;
        for j in kj - reach..=kj + reach {
            for i in ki - reach..=ki + reach {
                if let Some(v) = self.buckets.get(&(i, j)) {
                    if v.iter().any(|q| q.distance(p) <= radius) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// What happened to the store in one update.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateReport {
    pub added: Vec<usize>,
    pub deleted: Vec<usize>,
    /// The current waypoint was deleted (near an obstacle, visited, or timed out).
    pub waypoint_cleared: bool,
}

#[derive(Debug, Clone)]
pub struct PoiStore {
    candidates: Vec<PoiCandidate>,
    trail: Vec<Vec2>,
    trail_index: TrailIndex,
    pub current: Option<CurrentWaypoint>,
}

impl PoiStore {
    pub fn new(params: &IdleParams) -> Self {
        Self {
            candidates: Vec::new(),
            trail: Vec::new(),
            trail_index: TrailIndex {
                cell: params.visit_radius.max(1e-3),
                buckets: HashMap::new(),
            },
            current: None,
        }
    }

    pub fn candidates(&self) -> &[PoiCandidate] {
        &self.candidates
    }

    pub fn active(&self) -> impl Iterator<Item = (usize, &PoiCandidate)> {
        self.candidates.iter().enumerate().filter(|(_, c)| c.is_active())
    }

    pub fn trail(&self) -> &[Vec2] {
        &self.trail
    }

    pub fn visited(&self, p: Vec2, params: &IdleParams) -> bool {
        self.trail_index.within(p, params.visit_radius)
    }

    fn delete(&mut self, id: usize, report: &mut UpdateReport) {
        self.candidates[id].status = PoiStatus::Deleted;
        report.deleted.push(id);
        if let Some(CurrentWaypoint {
            waypoint: Waypoint::Poi { id: w, .. },
            ..
        }) = self.current
        {
            if w == id {
                self.current = None;
                report.waypoint_cleared = true;
            }
        }
    }

    /// Applies one step of the lifecycle rules, in order:
    ///
    /// 1. new candidates within the visit radius of the trail are dropped;
    /// 2. new candidates within `merge_radius` of an active one are dropped;
    /// 3. active candidates within `obstacle_clearance` of an occupied cell
    ///    are deleted;
    /// 4. a waypoint held for more than `waypoint_timeout` steps is deleted;
    /// 5. the pose joins the trail, and active candidates it covers are
    ///    deleted as visited.
    pub fn update(
        &mut self,
        new: Vec<PoiCandidate>,
        grid: &OccupancyGrid,
        pose: &Pose,
        params: &IdleParams,
    ) -> UpdateReport {
        let mut report = UpdateReport::default();
        for c in new {
            if self.visited(c.position, params) {
                continue;
            }
            let duplicate = self
                .candidates
                .iter()
                .any(|a| a.is_active() && a.position.distance(c.position) <= params.merge_radius);
            if duplicate {
                continue;
            }
            report.added.push(self.candidates.len());
            self.candidates.push(c);
        }

        for id in 0..self.candidates.len() {
            if self.candidates[id].is_active()
                && near_occupied(grid, self.candidates[id].position, params.obstacle_clearance)
            {
                self.delete(id, &mut report);
            }
        }

        if let Some(cur) = &mut self.current {
            cur.steps_since_selected += 1;
            if cur.steps_since_selected > params.waypoint_timeout {
                if let Waypoint::Poi { id, .. } = cur.waypoint {
                    self.delete(id, &mut report);
                }
            }
        }

        let here = pose.position();
        self.trail.push(here);
        self.trail_index.insert(here);
        for id in 0..self.candidates.len() {
            if self.candidates[id].is_active()
                && self.candidates[id].position.distance(here) <= params.visit_radius
            {
                self.delete(id, &mut report);
            }
        }
        report
    }

    /// IDLE scores of all active candidates, in id order.
    pub fn scores(&self, pose: &Pose, goal: Vec2, grid: &OccupancyGrid, params: &IdleParams) -> Vec<(usize, f64)> {
        self.active()
            .map(|(id, c)| (id, idle_score(c.position, pose.position(), goal, grid, params)))
            .collect()
    }

    /// Picks the next waypoint and makes it current.
    ///
    /// Inside `goal_switch_distance` of the goal this is the goal itself;
    /// otherwise the active candidate with the lowest score, earliest id on
    /// ties.
    pub fn select_waypoint(
        &mut self,
        pose: &Pose,
        goal: Vec2,
        grid: &OccupancyGrid,
        params: &IdleParams,
    ) -> Result<Waypoint> {
        let waypoint = if pose.position().distance(goal) < params.goal_switch_distance {
            Waypoint::Goal(goal)
        } else {
            let (id, _) = argmin(&self.scores(pose, goal, grid, params)).ok_or(Error::NoCandidates)?;
            Waypoint::Poi {
                id,
                position: self.candidates[id].position,
            }
        };
        self.current = Some(CurrentWaypoint {
            waypoint,
            steps_since_selected: 0,
        });
        Ok(waypoint)
    }
}

/// Lowest score, first entry on ties.
pub fn argmin(scores: &[(usize, f64)]) -> Option<(usize, f64)> {
    scores
        .iter()
        .copied()
        .fold(None, |best, (id, s)| match best {
            Some((_, b)) if b <= s => best,
            _ => Some((id, s)),
        })
}

fn near_occupied(grid: &OccupancyGrid, p: Vec2, clearance: f64) -> bool {
    let (ci, cj) = grid.cell_index(p);
    let reach = (clearance / grid.resolution).ceil() as i64 + 1;
    for j in cj - reach..=cj + reach {
        for i in ci - reach..=ci + reach {
            if grid.in_bounds(i, j)
                && grid.get(i as usize, j as usize) == Cell::Occupied
                && grid.cell_center(i as usize, j as usize).distance(p) <= clearance
            {
                return true;
            }
        }
    }
    false
}

/// Distance term of the IDLE score: near `l2·tanh(e^{-(l2/(l2-l1))²})` at
/// zero, rising through `l2·tanh(1)` at `d = l2` and saturating at `l2`.
pub fn idle_distance_component(d: f64, params: &IdleParams) -> f64 {
    let span = params.l2 - params.l1;
    let ratio = ((d / span).powi(2) - (params.l2 / span).powi(2)).exp();
    ratio.tanh() * params.l2
}

/// IDLE score of candidate `c` for a robot at `p` heading to `goal`.
pub fn idle_score(c: Vec2, p: Vec2, goal: Vec2, grid: &OccupancyGrid, params: &IdleParams) -> f64 {
    let info = grid.info_fraction(c, &params.kernel);
    idle_score_parts(p.distance(c), c.distance(goal), info, params)
}

pub fn idle_score_parts(robot_distance: f64, goal_distance: f64, info: f64, params: &IdleParams) -> f64 {
    idle_distance_component(robot_distance, params) + goal_distance + info.exp()
}

/// Per-step POI trace for plotting.
#[derive(Debug, Clone, Default)]
pub struct PoiTrace {
    rows: Vec<(usize, usize, Vec2, PoiStatus, Option<f64>)>,
}

impl PoiTrace {
    /// Records every candidate's state at `step`, with the scores computed
    /// that step, if any.
    pub fn record(&mut self, step: usize, store: &PoiStore, scores: &[(usize, f64)]) {
        let scored: HashMap<usize, f64> = scores.iter().copied().collect();
        for (id, c) in store.candidates().iter().enumerate() {
            self.rows.push((step, id, c.position, c.status, scored.get(&id).copied()));
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,id,x,y,status,score\n");
        for (step, id, p, status, score) in &self.rows {
            let status = match status {
                PoiStatus::Active => "active",
                PoiStatus::Deleted => "deleted",
            };
            let score = score.map(|v| format!("{v:.6}")).unwrap_or_default();
            let _ = writeln!(s, "{step},{id},{:.4},{:.4},{status},{score}", p.x, p.y);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Rect;
    use std::f64::consts::PI;

    fn grid() -> OccupancyGrid {
        OccupancyGrid::new(Rect::new(Vec2::new(-20.0, -20.0), Vec2::new(20.0, 20.0)), 0.1)
    }

    fn scan(ranges: Vec<Option<f64>>, angle_min: f64) -> LidarScan {
        LidarScan {
            ranges,
            angle_min,
            angle_increment: PI / 126.0,
            max_range: 10.0,
        }
    }

    #[test]
    fn gap_midpoint() {
        let s = scan(vec![Some(2.0), Some(6.0)], 0.0);
        let pois = extract_gap_pois(&s, &Pose::new(0.0, 0.0, 0.0), 1.0, 0);
        assert_eq!(pois.len(), 1);
        assert!((pois[0].position.x - 3.999).abs() < 1e-3);
        assert!((pois[0].position.y - 0.075).abs() < 1e-3);
        let s = scan(vec![Some(2.0), Some(2.3)], 0.0);
        assert!(extract_gap_pois(&s, &Pose::new(0.0, 0.0, 0.0), 1.0, 0).is_empty());
    }

    #[test]
    fn gap_ignores_missing_returns() {
        let s = scan(vec![Some(2.0), None, Some(8.0)], 0.0);
        assert!(extract_gap_pois(&s, &Pose::new(0.0, 0.0, 0.0), 1.0, 0).is_empty());
    }

    #[test]
    fn freespace_run_centre() {
        let mut ranges = vec![Some(3.0); 15];
        for r in &mut ranges[5..=9] {
            *r = None;
        }
        // beam 7 sits at angle 0
        let s = scan(ranges, -7.0 * PI / 126.0);
        let pois = extract_freespace_pois(&s, &Pose::new(0.0, 0.0, 0.0), 3);
        assert_eq!(pois.len(), 1);
        assert!((pois[0].position.x - 5.0).abs() < 1e-12);
        assert!(pois[0].position.y.abs() < 1e-12);
        assert_eq!(pois[0].created_step, 3);
        assert_eq!(pois[0].source, PoiSource::OutOfRange);
    }

    #[test]
    fn freespace_skips_isolated_beam() {
        let s = scan(vec![Some(3.0), None, Some(3.0), None, None], 0.0);
        assert_eq!(extract_freespace_pois(&s, &Pose::new(0.0, 0.0, 0.0), 0).len(), 1);
        let s = scan(vec![Some(3.0); 4], 0.0);
        assert!(extract_freespace_pois(&s, &Pose::new(0.0, 0.0, 0.0), 0).is_empty());
    }

    #[test]
    fn distance_component_values() {
        let p = IdleParams::default();
        assert!((idle_distance_component(10.0, &p) - 7.615_941_559_557_649).abs() < 1e-12);
        assert!((idle_distance_component(0.0, &p) - 0.183_135_9).abs() < 1e-6);
        assert!((idle_distance_component(1e3, &p) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn score_values() {
        let p = IdleParams::default();
        assert!((idle_score_parts(5.0, 20.0, 0.5, &p) - 22.146).abs() < 1e-3);
        assert!((idle_score_parts(0.0, 0.0, 0.0, &p) - 1.183_136).abs() < 1e-6);
        assert!(idle_score_parts(3.0, 4.0, 0.6, &p) > idle_score_parts(3.0, 4.0, 0.5, &p));
    }

    #[test]
    fn argmin_prefers_first() {
        assert_eq!(argmin(&[(0, 22.1), (1, 9.4), (2, 30.0)]), Some((1, 9.4)));
        assert_eq!(argmin(&[(0, 3.0), (2, 1.0), (5, 1.0)]), Some((2, 1.0)));
        assert_eq!(argmin(&[]), None);
    }

    #[test]
    fn deletes_near_obstacle() {
        let params = IdleParams::default();
        let mut g = grid();
        let (i, j) = g.cell_index(Vec2::new(5.05, 0.05));
        g.set(i as usize, j as usize, Cell::Occupied);
        let mut store = PoiStore::new(&params);
        let report = store.update(
            vec![PoiCandidate::new(Vec2::new(5.25, 0.05), 0, PoiSource::Gap)],
            &g,
            &Pose::new(0.0, 0.0, 0.0),
            &params,
        );
        assert_eq!(report.added, vec![0]);
        assert_eq!(report.deleted, vec![0]);
        assert_eq!(store.active().count(), 0);
    }

    #[test]
    fn drops_visited_and_duplicates() {
        let params = IdleParams::default();
        let g = grid();
        let mut store = PoiStore::new(&params);
        store.update(vec![], &g, &Pose::new(0.0, 0.0, 0.0), &params);
        let report = store.update(
            vec![
                PoiCandidate::new(Vec2::new(0.5, 0.5), 1, PoiSource::Gap),
                PoiCandidate::new(Vec2::new(4.0, 0.0), 1, PoiSource::Gap),
                PoiCandidate::new(Vec2::new(4.3, 0.0), 1, PoiSource::Gap),
            ],
            &g,
            &Pose::new(0.0, 0.0, 0.0),
            &params,
        );
        assert_eq!(report.added, vec![0]);
        assert_eq!(store.candidates()[0].position, Vec2::new(4.0, 0.0));
        assert_eq!(store.trail().len(), 2);
    }

    #[test]
    fn waypoint_times_out() {
        let params = IdleParams::default();
        let g = grid();
        let mut store = PoiStore::new(&params);
        store.update(
            vec![PoiCandidate::new(Vec2::new(15.0, 0.0), 0, PoiSource::OutOfRange)],
            &g,
            &Pose::new(0.0, 0.0, 0.0),
            &params,
        );
        let goal = Vec2::new(18.0, 18.0);
        let w = store.select_waypoint(&Pose::new(0.0, 0.0, 0.0), goal, &g, &params).unwrap();
        assert_eq!(w, Waypoint::Poi { id: 0, position: Vec2::new(15.0, 0.0) });
        for _ in 0..100 {
            let r = store.update(vec![], &g, &Pose::new(0.0, 0.0, 0.0), &params);
            assert!(!r.waypoint_cleared);
        }
        let r = store.update(vec![], &g, &Pose::new(0.0, 0.0, 0.0), &params);
        assert!(r.waypoint_cleared);
        assert!(store.current.is_none());
        assert_eq!(store.candidates()[0].status, PoiStatus::Deleted);
        assert!(matches!(
            store.select_waypoint(&Pose::new(0.0, 0.0, 0.0), goal, &g, &params),
            Err(Error::NoCandidates)
        ));
    }

    #[test]
    fn goal_inside_switch_distance() {
        let params = IdleParams::default();
        let mut store = PoiStore::new(&params);
        let goal = Vec2::new(0.5, 0.0);
        let w = store.select_waypoint(&Pose::new(0.0, 0.0, 0.0), goal, &grid(), &params).unwrap();
        assert_eq!(w, Waypoint::Goal(goal));
    }

    #[test]
    fn trace_csv() {
        let params = IdleParams::default();
        let g = grid();
        let mut store = PoiStore::new(&params);
        store.update(
            vec![PoiCandidate::new(Vec2::new(5.0, 0.0), 0, PoiSource::Gap)],
            &g,
            &Pose::new(0.0, 0.0, 0.0),
            &params,
        );
        let mut trace = PoiTrace::default();
        trace.record(0, &store, &[(0, 1.5)]);
        assert_eq!(trace.to_csv(), "step,id,x,y,status,score\n0,0,5.0000,0.0000,active,1.500000\n");
    }

    #[test]
    fn params_validation() {
        assert!(IdleParams::default().validate().is_ok());
        let bad = IdleParams { l1: 10.0, l2: 5.0, ..IdleParams::default() };
        assert!(bad.validate().is_err());
    }
}
