//! Alignment laboratory for rectified-flow generative models on a synthetic
//! trajectory domain: reward modeling from pairwise preferences with ties,
//! training-time alignment (SFT / RWR / DPO), inference-time reward
//! guidance, and an evaluation harness with paired-seed win rates.

pub mod align;
pub mod bench;
pub mod error;
pub mod flow;
pub mod guide;
pub mod netcore;
pub mod reward;
pub mod seeds;
pub mod toyworld;

pub use error::{Error, Result};
