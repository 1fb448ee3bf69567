//! Reward modeling: regression / BT / BTT training with context-separated
//! heads, the time-dependent noisy-latent reward, score normalization, and
//! preference-accuracy metrics.

mod btt;
mod checkpoint;
mod metrics;
mod model;
mod noisy;
mod stats;
mod train;

pub use btt::{bt_loss, btt_loss, btt_prob, regression_loss, BttConfig, BttProb};
pub use checkpoint::{
    load_noisy_reward, load_trained_reward, save_noisy_reward, save_trained_reward,
};
pub use metrics::{pairwise_accuracy, tie_calibration, AccuracyMode};
pub use model::{RewardCache, RewardGrads, RewardNet};
pub use noisy::{
    noisy_accuracy_at, train_noisy_reward, NoisyRewardNet, NoisyTrainConfig,
};
pub use stats::{normalize_scores, RewardWeights, ScoreStats};
pub use train::{
    preference_loss, split_by_condition, train_reward, validation_stats, PairItem, RewardMode,
    RewardTrainConfig, TrainedReward,
};
