//! Oracles and property checks shared by the integration suites and the
//! acceptance run. Every check returns `Err(description)` on violation so
//! callers can either assert or report.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use gdae::baselines::{run_baseline, Baseline, BaselineConfig};
use gdae::explorer::{run_episode, ChangeReason, ExplorerConfig, Mode, RunOutcome, RunRecord};
use gdae::baselines::planner::{plan_path, PlanOptions};
use gdae::mapping::{line_cells, Cell, OccupancyGrid};
use gdae::navgraph::{
    argmin, extract_freespace_pois, extract_gap_pois, idle_distance_component, idle_score, IdleParams, PoiStore,
    Waypoint,
};
use gdae::policy::{attribute_delayed_reward, reward, scale_action, EpisodeOutcome, RawAction, RewardParams, Transition};
use gdae::policy::nn::{relu, relu_backward, tanh, tanh_backward, Dense, Params};
use gdae::policy::td3::{actor_loss_and_grad, critic_loss_and_grad};
use gdae::policy::{ActorNet, CriticNet};
use gdae::sim::{cast_lidar, generate_trap_world, Pose, Rect, RobotState, SimConfig, TrapKind, Vec2, WorldModel};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- gradients

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-10 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Largest relative error between `analytic` and central differences of
/// `loss` over every parameter of `p`.
pub fn fd_max_error<P: Params>(p: &P, analytic: &P, h: f64, loss: impl Fn(&P) -> f64) -> f64 {
    let mut probe = p.clone();
    let mut worst = 0.0f64;
    let grads = analytic.flat();
    let mut k = 0;
    for t in 0..probe.tensors().len() {
        for i in 0..probe.tensors()[t].len() {
            let orig = probe.tensors()[t][i];
            probe.tensors_mut()[t][i] = orig + h;
            let up = loss(&probe);
            probe.tensors_mut()[t][i] = orig - h;
            let down = loss(&probe);
            probe.tensors_mut()[t][i] = orig;
            worst = worst.max(rel_err((up - down) / (2.0 * h), grads[k]));
            k += 1;
        }
    }
    worst
}

fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| r.random_range(-1.0..1.0))
}

/// Gradient oracle at toy sizes: each activation kind of a dense layer,
/// the critic's regression loss, the critic's action gradient and the
/// actor's loss through a critic. Returns the worst relative error of each.
pub fn gradient_errors(seed: u64) -> Vec<(&'static str, f64)> {
    let h = 1e-5;
    let mut r = rng(seed);
    let mut out = Vec::new();

    let layer = Dense::init(4, 3, &mut r);
    let x = random_matrix(&mut r, 5, 4);
    let c = random_matrix(&mut r, 5, 3);
    type Act = fn(&Array2<f64>) -> Array2<f64>;
    let kinds: [(&str, Act); 3] = [("dense/linear", |a| a.clone()), ("dense/relu", relu), ("dense/tanh", tanh)];
    for (name, act) in kinds {
        let pre = layer.forward(&x);
        let y = act(&pre);
        let dy = match name {
            "dense/relu" => relu_backward(&pre, &c),
            "dense/tanh" => tanh_backward(&y, &c),
            _ => c.clone(),
        };
        let mut grad = layer.zeros_like();
        layer.accumulate(&x, &dy, &mut grad);
        let e = fd_max_error(&layer, &grad, h, |l| (act(&l.forward(&x)) * &c).sum());
        out.push((name, e));
    }

    let (sd, ad, hidden, batch) = (6, 2, (7, 5), 8);
    let critic = CriticNet::with_dims(sd, ad, hidden, &mut r);
    let states = random_matrix(&mut r, batch, sd);
    let actions = random_matrix(&mut r, batch, ad);
    let targets = Array1::from_shape_fn(batch, |_| r.random_range(-2.0..2.0));
    let (_, g) = critic_loss_and_grad(&critic, &states, &actions, &targets);
    let e = fd_max_error(&critic, &g, h, |cr| critic_loss_and_grad(cr, &states, &actions, &targets).0);
    out.push(("critic loss", e));

    let cache = critic.forward_cached(&states, &actions);
    let dq = Array2::from_elem((batch, 1), 1.0);
    let da = critic.action_grad(&cache, &dq);
    let mut worst = 0.0f64;
    for idx in 0..actions.len() {
        let (i, j) = (idx / ad, idx % ad);
        let mut ap = actions.clone();
        ap[[i, j]] += h;
        let up = critic.forward(&states, &ap).sum();
        ap[[i, j]] -= 2.0 * h;
        let down = critic.forward(&states, &ap).sum();
        worst = worst.max(rel_err((up - down) / (2.0 * h), da[[i, j]]));
    }
    out.push(("critic action gradient", worst));

    let actor = ActorNet::with_dims(sd, (7, 5), ad, &mut r);
    let (_, g) = actor_loss_and_grad(&actor, &critic, &states);
    let e = fd_max_error(&actor, &g, h, |a| actor_loss_and_grad(a, &critic, &states).0);
    out.push(("actor loss", e));
    out
}

// ----------------------------------------------------------- formula oracles

pub fn oracle_idle_distance(d: f64, l1: f64, l2: f64) -> f64 {
    l2 * ((d * d - l2 * l2) / ((l2 - l1) * (l2 - l1))).exp().tanh()
}

/// Known fraction of the `n × n` window around `p`'s cell, by scanning
/// the whole grid.
pub fn oracle_info(grid: &OccupancyGrid, p: Vec2, n: usize) -> f64 {
    let res = grid.resolution;
    let o = grid.extent().min;
    let ci = ((p.x - o.x) / res).floor() as i64;
    let cj = ((p.y - o.y) / res).floor() as i64;
    let half = (n as i64 - 1) / 2;
    let mut known = 0;
    for j in 0..grid.height() {
        for i in 0..grid.width() {
            if (i as i64 - ci).abs() <= half && (j as i64 - cj).abs() <= half && grid.get(i, j) != Cell::Unknown {
                known += 1;
            }
        }
    }
    known as f64 / (n * n) as f64
}

pub fn oracle_idle_score(c: Vec2, p: Vec2, g: Vec2, info: f64, l1: f64, l2: f64) -> f64 {
    oracle_idle_distance(((c.x - p.x).powi(2) + (c.y - p.y).powi(2)).sqrt(), l1, l2)
        + ((c.x - g.x).powi(2) + (c.y - g.y).powi(2)).sqrt()
        + info.exp()
}

pub fn oracle_reward(dist: f64, v: f64, w: f64, collided: bool, eta: f64, rg: f64, rc: f64) -> f64 {
    if dist < eta {
        rg
    } else if collided {
        rc
    } else {
        v - w.abs()
    }
}

/// Reward added to transition `k` of an episode of `len` transitions that
/// ends at the goal.
pub fn oracle_attribution(k: usize, len: usize, n: usize, rg: f64) -> f64 {
    let i = len - 1 - k;
    if i >= 1 && i <= n {
        rg / i as f64
    } else {
        0.0
    }
}

/// A random grid with about `known` of its cells known.
pub fn random_grid(r: &mut ChaCha8Rng, known: f64) -> OccupancyGrid {
    let w = r.random_range(5.0..12.0);
    let h = r.random_range(5.0..12.0);
    let mut g = OccupancyGrid::new(Rect::new(Vec2::new(-w / 2.0, -h / 2.0), Vec2::new(w / 2.0, h / 2.0)), 0.1);
    for j in 0..g.height() {
        for i in 0..g.width() {
            if r.random_bool(known) {
                g.set(i, j, if r.random_bool(0.2) { Cell::Occupied } else { Cell::Free });
            }
        }
    }
    g
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// Spot values of the distance component: `l2·tanh(1)` at `d = l2`.
pub fn check_idle_spot_values() -> Check {
    let p = IdleParams::default();
    let at10 = idle_distance_component(10.0, &p);
    ensure((at10 - 7.6159).abs() < 1e-3, || format!("component at 10 m is {at10}"))?;
    ensure(close(at10, 10.0 * 1f64.tanh(), 1e-15), || format!("component at 10 m is {at10}"))?;
    let at0 = idle_distance_component(0.0, &p);
    ensure(close(at0, 10.0 * (-4f64).exp().tanh(), 1e-15), || format!("component at 0 m is {at0}"))?;
    ensure(idle_distance_component(30.0, &p) > 9.999_999, || "component does not saturate at l2".into())
}

pub fn check_idle_distance(n: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for _ in 0..n {
        let l1 = r.random_range(0.5..8.0);
        let l2 = l1 + r.random_range(0.5..8.0);
        let d = r.random_range(0.0..3.0 * l2);
        let p = IdleParams { l1, l2, ..IdleParams::default() };
        let (got, want) = (idle_distance_component(d, &p), oracle_idle_distance(d, l1, l2));
        ensure(close(got, want, 1e-12), || format!("d={d} l1={l1} l2={l2}: {got} vs {want}"))?;
    }
    Ok(())
}

pub fn check_info_and_idle_score(n: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let params = IdleParams::default();
    let cells = params.kernel.cells(0.1);
    ensure(cells == 15, || format!("1.5 m kernel spans {cells} cells"))?;
    let mut grid = random_grid(&mut r, 0.5);
    for k in 0..n {
        if k % 50 == 0 {
            grid = random_grid(&mut r, [0.0, 0.3, 0.7, 1.0][(k / 50) % 4]);
        }
        let e = grid.extent();
        let mut pt = || Vec2::new(r.random_range(e.min.x - 1.0..e.max.x + 1.0), r.random_range(e.min.y - 1.0..e.max.y + 1.0));
        let (c, p, g) = (pt(), pt(), pt());
        let info = grid.info_fraction(c, &params.kernel);
        let want_info = oracle_info(&grid, c, cells);
        ensure(info == want_info, || format!("info at {c:?}: {info} vs {want_info}"))?;
        let want = oracle_idle_score(c, p, g, info, params.l1, params.l2);
        let got = idle_score(c, p, g, &grid, &params);
        ensure(close(got, want, 1e-12), || format!("score of {c:?}: {got} vs {want}"))?;
    }
    Ok(())
}

pub fn check_reward(n: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for _ in 0..n {
        let p = RewardParams {
            goal_reward: r.random_range(1.0..200.0),
            collision_reward: -r.random_range(1.0..200.0),
            reach_distance: r.random_range(0.1..2.0),
            attribution_steps: 10,
        };
        let (d, v, w, hit) = (r.random_range(0.0..5.0), r.random_range(0.0..0.5), r.random_range(-1.0..1.0), r.random_bool(0.3));
        let want = oracle_reward(d, v, w, hit, p.reach_distance, p.goal_reward, p.collision_reward);
        let got = reward(d, v, w, hit, &p);
        ensure(got == want, || format!("reward({d}, {v}, {w}, {hit}) = {got}, expected {want}"))?;
    }
    Ok(())
}

fn transition(reward: f64) -> Transition {
    Transition { state: [0.0; 23], action: [0.0; 2], reward, next_state: [0.0; 23], done: false }
}

pub fn check_attribution(n: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for k in 0..n {
        let len = r.random_range(1..40);
        let steps = r.random_range(0..15);
        let p = RewardParams { goal_reward: r.random_range(1.0..200.0), attribution_steps: steps, ..RewardParams::default() };
        let base: Vec<f64> = (0..len).map(|_| r.random_range(-1.0..1.0)).collect();
        let mut ep: Vec<Transition> = base.iter().map(|&x| transition(x)).collect();
        let outcome = [EpisodeOutcome::Goal, EpisodeOutcome::Collision, EpisodeOutcome::Truncated][k % 3];
        attribute_delayed_reward(&mut ep, outcome, &p);
        for (i, tr) in ep.iter().enumerate() {
            let add = if outcome == EpisodeOutcome::Goal { oracle_attribution(i, len, steps, p.goal_reward) } else { 0.0 };
            ensure(tr.reward == base[i] + add, || format!("episode {k} transition {i}: {} vs {}", tr.reward, base[i] + add))?;
        }
    }
    let mut ep: Vec<Transition> = (0..12).map(|_| transition(0.0)).collect();
    attribute_delayed_reward(&mut ep, EpisodeOutcome::Goal, &RewardParams::default());
    ensure(ep[11 - 4].reward == 25.0, || format!("i = 4 received {}", ep[7].reward))
}

pub fn check_scale_action(n: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for _ in 0..n {
        let cfg = SimConfig { v_max: r.random_range(0.1..2.0), omega_max: r.random_range(0.1..3.0), ..SimConfig::default() };
        let (a, b) = (r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let v = scale_action(RawAction::new(a, b), &cfg);
        ensure(v.v == cfg.v_max * (a + 1.0) / 2.0 && v.omega == cfg.omega_max * b, || format!("scale({a}, {b}) = {v:?}"))?;
    }
    Ok(())
}

/// `plan_path` on `count` random solvable 50 × 50 grids against [`ucs`]:
/// identical move counts, exact length, valid moves.
pub fn check_planner(count: usize, seed: u64) -> Check {
    let (w, h, res) = (50usize, 50usize, 0.1);
    let opts = PlanOptions { inflation: 0.0, unknown_traversable: false, snap_endpoints: false };
    let mut r = rng(seed);
    let mut solved = 0;
    let mut attempts = 0;
    while solved < count {
        attempts += 1;
        let density = r.random_range(0.1..0.4);
        let open: Vec<bool> = (0..w * h).map(|_| !r.random_bool(density)).collect();
        let cells: Vec<usize> = (0..w * h).filter(|&k| open[k]).collect();
        let from = cells[r.random_range(0..cells.len())];
        let to = cells[r.random_range(0..cells.len())];
        let (from, to) = ((from % w, from / w), (to % w, to / w));
        let Some(Cost(straight, diagonal)) = ucs(&open, w, h, from, to) else {
            continue;
        };
        let mut grid = OccupancyGrid::new(Rect::new(Vec2::new(0.0, 0.0), Vec2::new(w as f64 * res, h as f64 * res)), res);
        for (k, &free) in open.iter().enumerate() {
            grid.set(k % w, k / w, if free { Cell::Free } else { Cell::Occupied });
        }
        let path = plan_path(&grid, grid.cell_center(from.0, from.1), grid.cell_center(to.0, to.1), &opts)
            .map_err(|e| format!("grid {attempts}: planner failed on a solvable grid: {e}"))?;
        ensure((path.straight_moves as i64, path.diagonal_moves as i64) == (straight, diagonal), || {
            format!(
                "grid {attempts}: planner used {}+{}√2 moves, optimum {straight}+{diagonal}√2",
                path.straight_moves, path.diagonal_moves
            )
        })?;
        let exact = (straight as f64 + diagonal as f64 * std::f64::consts::SQRT_2) * res;
        ensure(path.length == exact, || format!("grid {attempts}: length {} vs {exact}", path.length))?;
        ensure(path.cells.first() == Some(&from) && path.cells.last() == Some(&to), || format!("grid {attempts}: wrong endpoints"))?;
        let is_open = |(i, j): (usize, usize)| open[j * w + i];
        for m in path.cells.windows(2) {
            let ((a, b), (c, d)) = (m[0], m[1]);
            let (di, dj) = (c as i64 - a as i64, d as i64 - b as i64);
            ensure(di.abs() <= 1 && dj.abs() <= 1 && (di, dj) != (0, 0) && is_open((c, d)), || format!("grid {attempts}: bad move"))?;
            if di != 0 && dj != 0 {
                ensure(is_open((c, b)) && is_open((a, d)), || format!("grid {attempts}: corner cut"))?;
            }
        }
        solved += 1;
    }
    Ok(())
}

// ------------------------------------------------------------ planner oracle

/// Cost `a + b·√2` compared exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cost(pub i64, pub i64);

impl Ord for Cost {
    fn cmp(&self, o: &Self) -> Ordering {
        // sign of (a1 - a2) + (b1 - b2)·√2; zero only when both differences are
        let (x, y) = (self.0 - o.0, self.1 - o.1);
        match (x.signum(), y.signum()) {
            (0, s) | (s, 0) => s.cmp(&0),
            (sx, sy) if sx == sy => sx.cmp(&0),
            (1, _) => (x * x).cmp(&(2 * y * y)),
            _ => (2 * y * y).cmp(&(x * x)),
        }
    }
}

impl PartialOrd for Cost {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Uniform-cost search over open cells with exact costs; diagonal moves
/// need both side cells open. Returns `(straight, diagonal)` move counts
/// of an optimal path.
pub fn ucs(open: &[bool], w: usize, h: usize, from: (usize, usize), to: (usize, usize)) -> Option<Cost> {
    let ok = |i: i64, j: i64| i >= 0 && j >= 0 && (i as usize) < w && (j as usize) < h && open[j as usize * w + i as usize];
    let mut best: Vec<Option<Cost>> = vec![None; w * h];
    let mut heap = BinaryHeap::new();
    best[from.1 * w + from.0] = Some(Cost(0, 0));
    heap.push(std::cmp::Reverse((Cost(0, 0), from)));
    while let Some(std::cmp::Reverse((c, (i, j)))) = heap.pop() {
        if (i, j) == to {
            return Some(c);
        }
        if best[j * w + i].is_some_and(|b| b < c) {
            continue;
        }
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (x, y) = (i as i64 + di, j as i64 + dj);
                let diagonal = di != 0 && dj != 0;
                if !ok(x, y) || (diagonal && !(ok(i as i64 + di, j as i64) && ok(i as i64, j as i64 + dj))) {
                    continue;
                }
                let nc = if diagonal { Cost(c.0, c.1 + 1) } else { Cost(c.0 + 1, c.1) };
                let k = y as usize * w + x as usize;
                if best[k].is_none_or(|b| nc < b) {
                    best[k] = Some(nc);
                    heap.push(std::cmp::Reverse((nc, (x as usize, y as usize))));
                }
            }
        }
    }
    None
}

// -------------------------------------------------------------- properties

fn free_pose(world: &WorldModel, r: &mut ChaCha8Rng, clearance: f64) -> Pose {
    loop {
        let p = Vec2::new(
            r.random_range(world.bounds.min.x..world.bounds.max.x),
            r.random_range(world.bounds.min.y..world.bounds.max.y),
        );
        if world.clearance(p) > clearance {
            return Pose::new(p.x, p.y, r.random_range(-PI..PI));
        }
    }
}

pub fn trap_world(seed: u64) -> WorldModel {
    let kind = TrapKind::ALL[(seed % 3) as usize];
    generate_trap_world(kind, &mut rng(seed)).expect("generator succeeds")
}

/// Scans from random free poses: no cell ever returns to unknown, occupied
/// cells stay occupied, known area never shrinks, and every finite return
/// leaves its end cell occupied with the cells before it known.
pub fn check_map_monotonicity(seed: u64, scans: usize) -> Check {
    let world = trap_world(seed);
    let cfg = SimConfig::default();
    let mut r = rng(seed ^ 0x5eed);
    let mut grid = OccupancyGrid::new(world.bounds, 0.1);
    let mut prev_area = 0.0;
    for k in 0..scans {
        let pose = free_pose(&world, &mut r, 0.3);
        let scan = cast_lidar(&world, &RobotState::at(pose), &cfg, &mut r);
        let before = grid.clone();
        grid.integrate_scan(&pose, &scan);
        let shift = |p: Vec2| grid.cell_index(p);
        for j in 0..before.height() {
            for i in 0..before.width() {
                let old = before.get(i, j);
                let (ni, nj) = shift(before.cell_center(i, j));
                let new = grid.get_signed(ni, nj);
                ensure(!(old.is_known() && !new.is_known()), || format!("scan {k}: cell ({i},{j}) forgot {old:?}"))?;
                ensure(!(old == Cell::Occupied && new != Cell::Occupied), || {
                    format!("scan {k}: occupied cell ({i},{j}) became {new:?}")
                })?;
            }
        }
        let area = grid.known_area();
        ensure(area >= prev_area, || format!("scan {k}: known area fell {prev_area} -> {area}"))?;
        prev_area = area;
        let start = grid.cell_index(pose.position());
        for b in 0..scan.beam_count() {
            if let Some(range) = scan.ranges[b] {
                let end = pose.position() + Vec2::from_polar(range, pose.heading + scan.beam_angle(b));
                let (ei, ej) = grid.cell_index(end);
                ensure(grid.get_signed(ei, ej) == Cell::Occupied, || format!("scan {k} beam {b}: end cell not occupied"))?;
                for (i, j) in line_cells(start, (ei, ej)) {
                    ensure(grid.get_signed(i, j).is_known(), || format!("scan {k} beam {b}: ray cell ({i},{j}) unknown"))?;
                }
            }
        }
    }
    Ok(())
}

/// Drives the POI store from random free poses and checks after each
/// update that no candidate was added inside the earlier trail and no
/// active candidate lies within clearance of an occupied cell.
pub fn check_poi_lifecycle(seed: u64, steps: usize) -> Check {
    let world = trap_world(seed);
    let cfg = SimConfig::default();
    let params = IdleParams::default();
    let mut r = rng(seed ^ 0x901);
    let mut grid = OccupancyGrid::new(world.bounds, 0.1);
    let mut store = PoiStore::new(&params);
    let mut pose = free_pose(&world, &mut r, 0.3);
    for t in 0..steps {
        // short hops so the trail builds up like a real run
        let hop = Vec2::from_polar(r.random_range(0.2..1.5), r.random_range(-PI..PI));
        let next = pose.position() + hop;
        pose = if world.clearance(next) > 0.3 && world.bounds.contains(next) {
            Pose::new(next.x, next.y, r.random_range(-PI..PI))
        } else {
            free_pose(&world, &mut r, 0.3)
        };
        let scan = cast_lidar(&world, &RobotState::at(pose), &cfg, &mut r);
        grid.integrate_scan(&pose, &scan);
        let mut new = extract_gap_pois(&scan, &pose, params.gap_threshold, t);
        new.extend(extract_freespace_pois(&scan, &pose, t));
        let trail_before: Vec<Vec2> = store.trail().to_vec();
        let report = store.update(new, &grid, &pose, &params);
        for &id in &report.added {
            let p = store.candidates()[id].position;
            ensure(trail_before.iter().all(|q| q.distance(p) > params.visit_radius), || {
                format!("step {t}: POI {id} at {p:?} added inside the visited trail")
            })?;
        }
        for (id, c) in store.active() {
            for j in 0..grid.height() {
                for i in 0..grid.width() {
                    if grid.get(i, j) == Cell::Occupied {
                        let d = grid.cell_center(i, j).distance(c.position);
                        ensure(d > params.obstacle_clearance, || {
                            format!("step {t}: active POI {id} is {d:.3} m from an occupied cell")
                        })?;
                    }
                }
            }
        }
        if r.random_bool(0.3) {
            let _ = store.select_waypoint(&pose, world.goal, &grid, &params);
        }
    }
    Ok(())
}

/// `argmin` returns the first minimal entry, and is unchanged by adding a
/// constant to every score. Scores and shift must be small integers so the
/// shift is exact.
pub fn check_argmin(scores: &[(usize, f64)], shift: f64) -> Check {
    let got = argmin(scores).map(|g| g.0);
    let min = scores.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let expect = scores.iter().find(|s| s.1 == min).map(|s| s.0);
    ensure(got == expect, || format!("argmin {got:?} expected {expect:?}"))?;
    let shifted: Vec<(usize, f64)> = scores.iter().map(|&(id, s)| (id, s + shift)).collect();
    ensure(argmin(&shifted).map(|g| g.0) == got, || format!("argmin moved under a shift of {shift}"))
}

/// Waypoint changes in a record happen only on arrival, on deletion of a
/// POI waypoint (timeout, obstacle clearance, visit) or during recovery,
/// and the per-step waypoint matches the latest change.
pub fn check_loop_fidelity(record: &RunRecord, world: &WorldModel, params: &IdleParams) -> Check {
    let changes = &record.waypoint_changes;
    for w in changes.windows(2) {
        let (prev, cur) = (w[0], w[1]);
        let t = cur.step;
        let pose = record.steps.get(t).map_or(record.final_pose, |s| s.pose);
        match cur.reason {
            ChangeReason::Reached => {
                let d = pose.position().distance(prev.waypoint.position());
                ensure(d < params.reach_distance, || format!("step {t}: 'reached' at {d:.3} m"))?;
            }
            ChangeReason::Cleared => {
                let recovering = t > 0 && record.steps[t - 1].waypoint.is_none();
                if recovering {
                    continue;
                }
                let Waypoint::Poi { position, .. } = prev.waypoint else {
                    return Err(format!("step {t}: goal waypoint was cleared"));
                };
                let timed_out = t - prev.step >= params.waypoint_timeout;
                let visited = record.steps[..=t].iter().any(|s| s.pose.position().distance(position) <= params.visit_radius);
                let g = &record.grid;
                let blocked = (0..g.height()).any(|j| {
                    (0..g.width()).any(|i| {
                        g.get(i, j) == Cell::Occupied && g.cell_center(i, j).distance(position) <= params.obstacle_clearance
                    })
                });
                ensure(timed_out || visited || blocked, || format!("step {t}: waypoint cleared without cause"))?;
            }
            r => return Err(format!("step {t}: unexpected change reason {r:?}")),
        }
    }
    for (k, c) in changes.iter().enumerate() {
        let end = changes.get(k + 1).map_or(record.steps.len(), |n| n.step);
        for s in &record.steps[c.step.min(end)..end] {
            if let Some(w) = s.waypoint {
                ensure(w == c.waypoint.position(), || format!("steered to {w:?} while {:?} was selected", c.waypoint))?;
            }
        }
    }
    if record.outcome == RunOutcome::Goal {
        let d = record.final_pose.position().distance(world.goal);
        ensure(d < params.reach_distance, || format!("GOAL outcome {d:.3} m from the goal"))?;
        ensure(changes.last().is_some_and(|c| c.waypoint.is_goal()), || "GOAL without the goal as waypoint".into())?;
    }
    let total: f64 = record.path().windows(2).map(|w| w[0].distance(w[1])).sum();
    ensure((total - record.distance).abs() < 1e-6, || format!("distance {} vs path {total}", record.distance))?;
    Ok(())
}

/// Runs GDAE with an untrained actor; loop fidelity must hold for any
/// policy.
pub fn gdae_with_random_actor(seed: u64, budget: usize) -> (WorldModel, RunRecord) {
    let world = trap_world(seed);
    let actor = ActorNet::new((16, 16), &mut rng(seed));
    let cfg = ExplorerConfig {
        mode: Mode::Gdae,
        step_budget: budget,
        seed,
        ..ExplorerConfig::default()
    };
    let record = run_episode(&world, &actor, &cfg).expect("run");
    (world, record)
}

/// The same loop with the planner-driven local controller, which reaches
/// its waypoints far more often than an untrained actor.
pub fn lp_ae_run(seed: u64, budget: usize) -> (WorldModel, RunRecord) {
    let world = trap_world(seed);
    let mut cfg = BaselineConfig::default();
    cfg.explorer.seed = seed;
    cfg.explorer.step_budget = budget;
    let record = run_baseline(&world, Baseline::LpAe, &cfg).expect("run");
    (world, record)
}

/// Between consecutive NF frontier selections the known area grows.
pub fn check_nf_progress(seed: u64) -> Check {
    let world = trap_world(seed);
    let mut cfg = BaselineConfig::default();
    cfg.explorer.seed = seed;
    let record = run_baseline(&world, Baseline::Nf, &cfg).map_err(|e| e.to_string())?;
    let picks: Vec<usize> = record
        .waypoint_changes
        .iter()
        .filter(|c| c.reason == ChangeReason::Frontier)
        .map(|c| c.step)
        .collect();
    for w in picks.windows(2) {
        let a = record.steps[w[0]].known_area;
        let b = record.steps.get(w[1]).map_or(record.grid.known_area(), |s| s.known_area);
        ensure(b > a, || format!("frontier re-selected at {} without map growth ({a} -> {b})", w[1]))?;
    }
    Ok(())
}
