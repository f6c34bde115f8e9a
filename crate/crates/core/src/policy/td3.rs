//! TD3: twin critics with min-Q targets, target-policy smoothing and
//! delayed actor/target updates.

use ndarray::{Array1, Array2, Zip};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::networks::{ActorNet, CriticNet, ACTION_LIMIT};
use super::nn::{Adam, Params};
use super::replay::{Batch, ReplayBuffer};
use crate::error::Result;

/// What the policy delay counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayUnit {
    /// Actor and targets update on every `policy_delay`-th critic update.
    Updates,
    /// Actor and targets update only during every `policy_delay`-th episode.
    Episodes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Td3Config {
    pub hidden: (usize, usize),
    pub gamma: f64,
    /// Target update `θ' ← ρ·θ' + (1 − ρ)·θ`.
    pub polyak: f64,
    pub policy_delay: usize,
    pub delay_unit: DelayUnit,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub exploration_noise_start: f64,
    pub exploration_noise_end: f64,
    pub target_noise: f64,
    pub target_noise_clip: f64,
    /// Environment steps with uniformly random actions before learning.
    pub warmup_steps: usize,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            hidden: (800, 600),
            gamma: 0.99,
            polyak: 0.995,
            policy_delay: 2,
            delay_unit: DelayUnit::Updates,
            batch_size: 64,
            buffer_capacity: 200_000,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            exploration_noise_start: 0.5,
            exploration_noise_end: 0.05,
            target_noise: 0.2,
            target_noise_clip: 0.5,
            warmup_steps: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    pub actor_loss: Option<f64>,
    pub mean_target: f64,
}

/// Mean squared error of `critic(s, a)` against `targets` and its gradient.
pub fn critic_loss_and_grad(
    critic: &CriticNet,
    states: &Array2<f64>,
    actions: &Array2<f64>,
    targets: &Array1<f64>,
) -> (f64, CriticNet) {
    let cache = critic.forward_cached(states, actions);
    let n = targets.len() as f64;
    let mut dq = cache.q.clone();
    let mut loss = 0.0;
    Zip::from(dq.column_mut(0)).and(targets).for_each(|q, &y| {
        let e = *q - y;
        loss += e * e;
        *q = 2.0 * e / n;
    });
    (loss / n, critic.backward(&cache, &dq))
}

/// `−mean Q(s, actor(s))` and its gradient with respect to the actor.
pub fn actor_loss_and_grad(actor: &ActorNet, critic: &CriticNet, states: &Array2<f64>) -> (f64, ActorNet) {
    let a_cache = actor.forward_cached(states);
    let c_cache = critic.forward_cached(states, &a_cache.output);
    let n = states.nrows() as f64;
    let loss = -c_cache.q.sum() / n;
    let dq = Array2::from_elem((states.nrows(), 1), -1.0 / n);
    let da = critic.action_grad(&c_cache, &dq);
    (loss, actor.backward(&a_cache, &da))
}

/// `y = r + γ·(1 − done)·min(Q1', Q2')`.
pub fn bootstrap_targets(
    rewards: &Array1<f64>,
    dones: &Array1<f64>,
    q1: &Array1<f64>,
    q2: &Array1<f64>,
    gamma: f64,
) -> Array1<f64> {
    let mut y = rewards.clone();
    Zip::from(&mut y)
        .and(dones)
        .and(q1)
        .and(q2)
        .for_each(|y, &d, &a, &b| *y += gamma * (1.0 - d) * a.min(b));
    y
}

#[derive(Debug, Clone)]
pub struct Td3Agent {
    pub config: Td3Config,
    pub actor: ActorNet,
    pub actor_target: ActorNet,
    pub critic1: CriticNet,
    pub critic2: CriticNet,
    pub critic1_target: CriticNet,
    pub critic2_target: CriticNet,
    actor_opt: Adam<ActorNet>,
    critic1_opt: Adam<CriticNet>,
    critic2_opt: Adam<CriticNet>,
    pub replay: ReplayBuffer,
    critic_updates: u64,
    /// Gate used when `delay_unit` is [`DelayUnit::Episodes`].
    pub actor_episode: bool,
}

impl Td3Agent {
    pub fn new<R: Rng + ?Sized>(config: Td3Config, rng: &mut R) -> Self {
        let actor = ActorNet::new(config.hidden, rng);
        let critic1 = CriticNet::new(config.hidden, rng);
        let critic2 = CriticNet::new(config.hidden, rng);
        Self::from_networks(config, actor, critic1, critic2)
    }

    pub fn from_networks(config: Td3Config, actor: ActorNet, critic1: CriticNet, critic2: CriticNet) -> Self {
        Self {
            actor_opt: Adam::new(&actor, config.actor_lr),
            critic1_opt: Adam::new(&critic1, config.critic_lr),
            critic2_opt: Adam::new(&critic2, config.critic_lr),
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            replay: ReplayBuffer::new(config.buffer_capacity),
            actor,
            critic1,
            critic2,
            critic_updates: 0,
            actor_episode: true,
            config,
        }
    }

    pub fn critic_updates(&self) -> u64 {
        self.critic_updates
    }

    pub fn act(&self, features: &[f64]) -> [f64; 2] {
        self.actor.act(features)
    }

    /// Policy action plus Gaussian noise of standard deviation `sigma`,
    /// clipped back into `(-1, 1)`.
    pub fn explore<R: Rng + ?Sized>(&self, features: &[f64], sigma: f64, rng: &mut R) -> [f64; 2] {
        let mut a = self.act(features);
        for x in &mut a {
            let n: f64 = StandardNormal.sample(rng);
            *x = (*x + sigma * n).clamp(-ACTION_LIMIT, ACTION_LIMIT);
        }
        a
    }

    fn smoothed_target_actions<R: Rng + ?Sized>(&self, next_states: &Array2<f64>, rng: &mut R) -> Array2<f64> {
        let c = self.config.target_noise_clip;
        let sigma = self.config.target_noise;
        self.actor_target.forward(next_states).mapv(|a| {
            let n: f64 = StandardNormal.sample(rng);
            (a + (sigma * n).clamp(-c, c)).clamp(-ACTION_LIMIT, ACTION_LIMIT)
        })
    }

    /// Bootstrapped regression targets for a batch.
    pub fn targets<R: Rng + ?Sized>(&self, batch: &Batch, rng: &mut R) -> Array1<f64> {
        let next_actions = self.smoothed_target_actions(&batch.next_states, rng);
        let q1 = self.critic1_target.forward(&batch.next_states, &next_actions);
        let q2 = self.critic2_target.forward(&batch.next_states, &next_actions);
        bootstrap_targets(&batch.rewards, &batch.dones, &q1, &q2, self.config.gamma)
    }

    /// One TD3 step on `batch`: both critics regress to the shared min-Q
    /// target; on delayed steps the actor ascends `Q1` and all targets move
    /// toward their online networks.
    pub fn update<R: Rng + ?Sized>(&mut self, batch: &Batch, rng: &mut R) -> UpdateStats {
        let y = self.targets(batch, rng);
        let (l1, g1) = critic_loss_and_grad(&self.critic1, &batch.states, &batch.actions, &y);
        let (l2, g2) = critic_loss_and_grad(&self.critic2, &batch.states, &batch.actions, &y);
        self.critic1_opt.step(&mut self.critic1, &g1);
        self.critic2_opt.step(&mut self.critic2, &g2);
        self.critic_updates += 1;

        let delay = self.config.policy_delay.max(1) as u64;
        let policy_step = match self.config.delay_unit {
            DelayUnit::Updates => self.critic_updates.is_multiple_of(delay),
            DelayUnit::Episodes => self.actor_episode,
        };
        let actor_loss = policy_step.then(|| {
            let (la, ga) = actor_loss_and_grad(&self.actor, &self.critic1, &batch.states);
            self.actor_opt.step(&mut self.actor, &ga);
            self.soft_update_targets();
            la
        });
        UpdateStats {
            critic1_loss: l1,
            critic2_loss: l2,
            actor_loss,
            mean_target: y.mean().unwrap_or(0.0),
        }
    }

    /// Samples a batch from the replay buffer and updates.
    pub fn train_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<UpdateStats> {
        let batch = self.replay.sample(self.config.batch_size, rng)?;
        Ok(self.update(&batch, rng))
    }

    pub fn soft_update_targets(&mut self) {
        let rho = self.config.polyak;
        self.actor_target.soft_update_from(&self.actor, rho);
        self.critic1_target.soft_update_from(&self.critic1, rho);
        self.critic2_target.soft_update_from(&self.critic2, rho);
    }
}
