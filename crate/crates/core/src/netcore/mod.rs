//! Differentiable feed-forward networks, Adam, finite-difference checks,
//! and checkpoint I/O.
//!
//! Nets are immutable values after construction; training owns a single
//! mutable copy (single-writer). Shared references are safe to evaluate
//! from multiple threads.

mod adam;
mod check;
mod checkpoint;
mod net;

pub use adam::{adam_step, AdamState};
pub use check::{finite_diff_check, rel_err};
pub use checkpoint::{
    load_model, load_net, read_model, read_net, save_model, save_net, write_model, write_net,
    CheckpointMeta, Lineage, ModelCheckpoint, FORMAT_VERSION_MODEL, FORMAT_VERSION_NET,
};
pub use net::{Activation, Net, NetCache, NetSpec};
