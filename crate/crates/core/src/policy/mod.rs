//! TD3 local-navigation learner: network core, actor/critics, rewards,
//! replay and the training loop.

pub mod checkpoint;
pub mod networks;
pub mod nn;
mod replay;
mod reward;
mod state;
pub mod td3;
pub mod train;

pub use checkpoint::Checkpoint;
pub use networks::{ActorNet, CriticNet, ACTION_DIM, ACTION_LIMIT, STATE_DIM};
pub use replay::{Batch, ReplayBuffer, Transition};
pub use reward::{attribute_delayed_reward, reward, EpisodeOutcome, RewardParams};
pub use state::{bag_scan, scale_action, PolicyState, RawAction, DISTANCE_SCALE, LASER_BINS};
pub use td3::{DelayUnit, Td3Agent, Td3Config};
pub use train::{evaluate, train, training_worlds, EvalSummary, TrainConfig, TrainingLog};
