//! Euler integration of the velocity ODE from noise (t=1) to data (t=0).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

use super::ops::cfg_velocity;
use super::schedule::FlowSchedule;
use super::velocity::{Cond, VelocityNet};

/// Integrates `x <- x - dt * field(x, t)` over the schedule grid.
///
/// The field is an arbitrary closure so oracles (analytic fields) and the
/// guided sampler share one integrator.
pub fn euler_integrate(
    mut field: impl FnMut(&[f64], f64) -> Result<Vec<f64>>,
    x_init: &[f64],
    schedule: &FlowSchedule,
) -> Result<Vec<f64>> {
    let mut x = x_init.to_vec();
    for (step, (t, dt)) in schedule.steps().enumerate() {
        let v = field(&x, t)?;
        if v.len() != x.len() {
            return Err(Error::Shape {
                what: "euler field output",
                expected: x.len(),
                got: v.len(),
            });
        }
        for (xi, vi) in x.iter_mut().zip(v.iter()) {
            *xi -= dt * vi;
        }
        if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite state {bad} at sampler step {step} (t = {t})"
            )));
        }
    }
    Ok(x)
}

/// Draws the t=1 initial noise for a given seed.
pub fn initial_noise(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Samples from the model: start at N(0, I), integrate the (optionally
/// CFG-combined) velocity down to t=0. Deterministic in `seed`.
pub fn euler_sample(
    net: &VelocityNet,
    class: usize,
    schedule: &FlowSchedule,
    cfg_scale: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let x_init = initial_noise(net.sample_dim(), seed);
    euler_integrate(
        |x, t| {
            let v_cond = net.velocity(x, t, Cond::Class(class))?;
            if cfg_scale == 1.0 {
                Ok(v_cond)
            } else {
                let v_uncond = net.velocity(x, t, Cond::Uncond)?;
                cfg_velocity(&v_cond, &v_uncond, cfg_scale)
            }
        },
        &x_init,
        schedule,
    )
}
