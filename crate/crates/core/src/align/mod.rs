//! Training-time alignment against a frozen reference: SFT on chosen data,
//! reward-weighted regression (RWR), and preference optimization (DPO) with
//! constant or quadratic KL schedules.

mod loss;
mod relabeled;
mod train;

pub use loss::{flow_dpo_loss, flow_rwr_loss, sft_loss, AlignBatch, AlignPair, BetaSchedule, DpoConfig};
pub use relabeled::{load_relabeled, save_relabeled, RelabelHeader, RelabeledPair, RelabeledSet, Side};
pub use train::{align_train, AlignConfig, AlignMethod};
