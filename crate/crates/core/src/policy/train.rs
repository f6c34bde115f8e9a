//! Episode loop for learning local navigation in randomized box worlds.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::networks::{ActorNet, ACTION_LIMIT};
use super::replay::Transition;
use super::reward::{attribute_delayed_reward, reward, EpisodeOutcome, RewardParams};
use super::state::{scale_action, PolicyState, RawAction};
use super::td3::{DelayUnit, Td3Agent, Td3Config};
use crate::error::Result;
use crate::explorer::waypoint_to_polar;
use crate::sim::{cast_lidar, generate_training_world, step, RobotState, SimConfig, WorldModel};

const WORLD_STREAM: u64 = 1;
const LEARNER_STREAM: u64 = 2;
const EVAL_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub episodes: usize,
    pub seed: u64,
    /// Episodes between noise-free evaluations; 0 disables them.
    pub eval_every: usize,
    pub eval_episodes: usize,
    pub sim: SimConfig,
    pub td3: Td3Config,
    pub reward: RewardParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 800,
            seed: 0,
            eval_every: 50,
            eval_episodes: 20,
            sim: SimConfig::default(),
            td3: Td3Config::default(),
            reward: RewardParams::default(),
        }
    }
}

impl TrainConfig {
    /// Exploration noise for `episode`, decaying linearly over the run.
    pub fn exploration_sigma(&self, episode: usize) -> f64 {
        let frac = if self.episodes > 1 {
            episode as f64 / (self.episodes - 1) as f64
        } else {
            1.0
        };
        let (a, b) = (self.td3.exploration_noise_start, self.td3.exploration_noise_end);
        a + (b - a) * frac.min(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub steps: usize,
    pub episode_return: f64,
    pub outcome: EpisodeOutcome,
    pub eval_success: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeLog>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,steps,return,outcome,eval_success\n");
        for e in &self.episodes {
            let eval = e.eval_success.map(|s| format!("{s:.4}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{:.6},{},{}",
                e.episode,
                e.steps,
                e.episode_return,
                e.outcome.name(),
                eval
            );
        }
        out
    }

    pub fn success_rate(&self, last: usize) -> f64 {
        let tail = &self.episodes[self.episodes.len().saturating_sub(last)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().filter(|e| e.outcome == EpisodeOutcome::Goal).count() as f64 / tail.len() as f64
    }
}

/// Single-goal navigation episode in a fixed world.
pub struct LocalNavEnv<'a> {
    pub world: &'a WorldModel,
    pub robot: RobotState,
    pub cfg: &'a SimConfig,
    pub reward: &'a RewardParams,
    pub steps: usize,
}

pub struct EnvStep {
    pub features: [f64; 23],
    pub reward: f64,
    pub outcome: Option<EpisodeOutcome>,
}

impl<'a> LocalNavEnv<'a> {
    pub fn new(world: &'a WorldModel, cfg: &'a SimConfig, reward: &'a RewardParams) -> Self {
        Self {
            world,
            robot: RobotState::at(world.start),
            cfg,
            reward,
            steps: 0,
        }
    }

    pub fn goal_distance(&self) -> f64 {
        self.robot.pose.position().distance(self.world.goal)
    }

    pub fn observe<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 23] {
        let scan = cast_lidar(self.world, &self.robot, self.cfg, rng);
        let polar = waypoint_to_polar(&self.robot.pose, self.world.goal);
        PolicyState::new(&scan, polar)
            .expect("simulator beam count is a multiple of the bin count")
            .features()
    }

    pub fn step<R: Rng + ?Sized>(&mut self, raw: [f64; 2], rng: &mut R) -> EnvStep {
        let mut exec = raw;
        if self.cfg.action_noise_std > 0.0 {
            let n = Normal::new(0.0, self.cfg.action_noise_std).expect("finite std");
            for x in &mut exec {
                *x = (*x + n.sample(rng)).clamp(-ACTION_LIMIT, ACTION_LIMIT);
            }
        }
        let cmd = scale_action(RawAction::from(exec), self.cfg);
        self.robot = step(self.world, &self.robot, cmd, self.cfg);
        self.steps += 1;
        let d = self.goal_distance();
        let r = reward(
            d,
            self.robot.linear_velocity,
            self.robot.angular_velocity,
            self.robot.collided,
            self.reward,
        );
        let outcome = if d < self.reward.reach_distance {
            Some(EpisodeOutcome::Goal)
        } else if self.robot.collided {
            Some(EpisodeOutcome::Collision)
        } else if self.steps >= self.cfg.max_episode_steps {
            Some(EpisodeOutcome::Truncated)
        } else {
            None
        };
        EnvStep {
            features: self.observe(rng),
            reward: r,
            outcome,
        }
    }
}

/// Runs the actor without exploration noise on each world.
pub fn evaluate(actor: &ActorNet, worlds: &[WorldModel], cfg: &SimConfig, reward: &RewardParams, seed: u64) -> EvalSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = EvalSummary::default();
    for world in worlds {
        let mut env = LocalNavEnv::new(world, cfg, reward);
        let mut s = env.observe(&mut rng);
        let outcome = loop {
            let st = env.step(actor.act(&s), &mut rng);
            s = st.features;
            if let Some(o) = st.outcome {
                break o;
            }
        };
        summary.record(outcome);
    }
    summary
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvalSummary {
    pub episodes: usize,
    pub goals: usize,
    pub collisions: usize,
}

impl EvalSummary {
    fn record(&mut self, o: EpisodeOutcome) {
        self.episodes += 1;
        match o {
            EpisodeOutcome::Goal => self.goals += 1,
            EpisodeOutcome::Collision => self.collisions += 1,
            EpisodeOutcome::Truncated => {}
        }
    }

    pub fn success_rate(&self) -> f64 {
        if self.episodes == 0 {
            0.0
        } else {
            self.goals as f64 / self.episodes as f64
        }
    }
}

/// Fresh training-distribution worlds from `(seed, stream)`.
pub fn training_worlds(seed: u64, stream: u64, count: usize) -> Result<Vec<WorldModel>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count).map(|_| generate_training_world(&mut rng)).collect()
}

pub struct TrainOutcome {
    pub agent: Td3Agent,
    pub log: TrainingLog,
    /// Actor with the best periodic evaluation score, if evaluations ran.
    pub best_actor: Option<(ActorNet, f64)>,
}

/// Trains a TD3 agent, one new random world per episode.
pub fn train(cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(cfg, |_| {})
}

pub fn train_with_progress(cfg: &TrainConfig, mut progress: impl FnMut(&EpisodeLog)) -> Result<TrainOutcome> {
    let mut world_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    world_rng.set_stream(WORLD_STREAM);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(LEARNER_STREAM);
    let eval_worlds = if cfg.eval_every > 0 {
        training_worlds(cfg.seed, EVAL_STREAM, cfg.eval_episodes)?
    } else {
        Vec::new()
    };
    let eval_sim = SimConfig {
        sensor_noise_std: 0.0,
        action_noise_std: 0.0,
        ..cfg.sim.clone()
    };

    let mut agent = Td3Agent::new(cfg.td3.clone(), &mut rng);
    let mut log = TrainingLog::default();
    let mut best_actor: Option<(ActorNet, f64)> = None;
    let mut total_steps = 0usize;

    for episode in 0..cfg.episodes {
        let world = generate_training_world(&mut world_rng)?;
        let sigma = cfg.exploration_sigma(episode);
        if cfg.td3.delay_unit == DelayUnit::Episodes {
            agent.actor_episode = episode % cfg.td3.policy_delay.max(1) == 0;
        }
        let mut env = LocalNavEnv::new(&world, &cfg.sim, &cfg.reward);
        let mut state = env.observe(&mut rng);
        let mut transitions = Vec::with_capacity(cfg.sim.max_episode_steps);
        let outcome = loop {
            let action = if total_steps < cfg.td3.warmup_steps {
                [
                    rng.random_range(-ACTION_LIMIT..ACTION_LIMIT),
                    rng.random_range(-ACTION_LIMIT..ACTION_LIMIT),
                ]
            } else {
                agent.explore(&state, sigma, &mut rng)
            };
            let st = env.step(action, &mut rng);
            let done = matches!(st.outcome, Some(EpisodeOutcome::Goal | EpisodeOutcome::Collision));
            transitions.push(Transition {
                state,
                action,
                reward: st.reward,
                next_state: st.features,
                done,
            });
            state = st.features;
            total_steps += 1;
            if total_steps >= cfg.td3.warmup_steps && agent.replay.len() >= cfg.td3.batch_size {
                agent.train_step(&mut rng)?;
            }
            if let Some(o) = st.outcome {
                break o;
            }
        };
        attribute_delayed_reward(&mut transitions, outcome, &cfg.reward);
        let episode_return = transitions.iter().map(|t| t.reward).sum();
        let steps = transitions.len();
        agent.replay.extend(transitions);

        let eval_success = (cfg.eval_every > 0 && (episode + 1) % cfg.eval_every == 0).then(|| {
            let rate = evaluate(&agent.actor, &eval_worlds, &eval_sim, &cfg.reward, cfg.seed).success_rate();
            if best_actor.as_ref().is_none_or(|(_, b)| rate >= *b) {
                best_actor = Some((agent.actor.clone(), rate));
            }
            rate
        });
        let entry = EpisodeLog {
            episode,
            steps,
            episode_return,
            outcome,
            eval_success,
        };
        progress(&entry);
        log.episodes.push(entry);
    }
    Ok(TrainOutcome {
        agent,
        log,
        best_actor,
    })
}
