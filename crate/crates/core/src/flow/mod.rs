//! Rectified-flow process: interpolants, the flow-matching objective, the
//! Euler sampler with classifier-free guidance, and the velocity/noise
//! error bridge.

mod embed;
mod ops;
mod sampler;
mod schedule;
mod train;
mod velocity;

pub use embed::{angular_embedding, one_hot_into, time_embedding, TIME_FEATURES};
pub use ops::{cfg_velocity, interpolate, predict_terminal_noise, target_velocity};
pub(crate) use ops::{squared_distance, squared_norm};
pub use sampler::{euler_integrate, euler_sample, initial_noise};
pub use schedule::FlowSchedule;
pub use train::{train_flow, CurvePoint, FlowTrainConfig};
pub use velocity::{fm_loss, Cond, FlowBatch, VelocityNet};
