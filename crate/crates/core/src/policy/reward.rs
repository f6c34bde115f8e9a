use serde::{Deserialize, Serialize};

use super::replay::Transition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardParams {
    /// `r_g`
    pub goal_reward: f64,
    /// `r_c`
    pub collision_reward: f64,
    /// `η_D`, m
    pub reach_distance: f64,
    /// Steps before goal arrival that share the goal reward.
    pub attribution_steps: usize,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            goal_reward: 100.0,
            collision_reward: -100.0,
            reach_distance: 1.0,
            attribution_steps: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeOutcome {
    Goal,
    Collision,
    /// Step limit reached; not terminal for bootstrapping.
    Truncated,
}

impl EpisodeOutcome {
    pub fn name(self) -> &'static str {
        match self {
            EpisodeOutcome::Goal => "goal",
            EpisodeOutcome::Collision => "collision",
            EpisodeOutcome::Truncated => "truncated",
        }
    }
}

/// Immediate reward: goal reward inside `η_D`, else collision penalty, else
/// `v − |ω|`.
pub fn reward(goal_distance: f64, v: f64, omega: f64, collided: bool, params: &RewardParams) -> f64 {
    if goal_distance < params.reach_distance {
        params.goal_reward
    } else if collided {
        params.collision_reward
    } else {
        v - omega.abs()
    }
}

/// On goal arrival at the last transition `t`, adds `r_g / i` to the reward
/// of transition `t − i` for `i = 1..=min(n, t)`. Other outcomes are left
/// untouched.
pub fn attribute_delayed_reward(
    episode: &mut [Transition],
    outcome: EpisodeOutcome,
    params: &RewardParams,
) {
    if outcome != EpisodeOutcome::Goal || episode.is_empty() {
        return;
    }
    let t = episode.len() - 1;
    for i in 1..=params.attribution_steps.min(t) {
        episode[t - i].reward += params.goal_reward / i as f64;
    }
}
