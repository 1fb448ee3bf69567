//! Sampling time grid.
//!
//! Time convention throughout the crate: `t = 0` is data, `t = 1` is noise
//! (x_t = (1-t) x0 + t x1). Much of the literature uses the opposite
//! orientation; every consumer in this crate assumes this one.

use crate::error::{Error, Result};

/// Uniform descending grid from 1 to 0 with `n_steps` Euler steps.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSchedule {
    grid: Vec<f64>,
}

impl FlowSchedule {
    pub fn uniform(n_steps: usize) -> Result<Self> {
        if n_steps < 2 {
            return Err(Error::Config(format!(
                "schedule needs at least 2 steps, got {n_steps}"
            )));
        }
        let grid = (0..=n_steps)
            .map(|i| 1.0 - i as f64 / n_steps as f64)
            .collect();
        Ok(FlowSchedule { grid })
    }

    /// Grid points, strictly decreasing from 1.0 to 0.0 (n_steps + 1 values).
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn n_steps(&self) -> usize {
        self.grid.len() - 1
    }

    /// (t_i, dt_i) pairs with dt_i = t_i - t_{i+1} > 0.
    pub fn steps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid.windows(2).map(|w| (w[0], w[0] - w[1]))
    }
}
