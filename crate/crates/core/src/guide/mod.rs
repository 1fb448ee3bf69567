//! Inference-time reward guidance: shift the sampled velocity along the
//! noisy-reward gradient inside the Euler loop, after CFG combination.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{cfg_velocity, euler_integrate, initial_noise, squared_norm, Cond, FlowSchedule, VelocityNet};
use crate::reward::{NoisyRewardNet, RewardWeights};

/// Which guided-velocity form to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuidanceForm {
    /// `v - w min(t/(1-t), cap) grad_r` — the primary form.
    Shift,
    /// Convex mix with the reward-derived field, from the guidance
    /// derivation's intermediate line. Experimental: the source derivation's
    /// summary line disagrees in sign with its own intermediate step, so
    /// this form follows the intermediate (convex-combination) line.
    Mix,
}

impl std::str::FromStr for GuidanceForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shift" => Ok(GuidanceForm::Shift),
            "mix" => Ok(GuidanceForm::Mix),
            other => Err(Error::Config(format!("unknown guidance form '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GuidanceSpec {
    pub weights: RewardWeights,
    pub w_scale: f64,
    pub cfg_scale: f64,
    /// Cap on the `t/(1-t)` factor, which diverges near t = 1.
    pub factor_cap: f64,
    pub form: GuidanceForm,
}

impl Default for GuidanceSpec {
    fn default() -> Self {
        GuidanceSpec {
            weights: RewardWeights::equal(),
            w_scale: 1.0,
            cfg_scale: 1.5,
            factor_cap: 20.0,
            form: GuidanceForm::Shift,
        }
    }
}

impl GuidanceSpec {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.w_scale < 0.0 {
            return Err(Error::Config(format!(
                "guidance strength must be >= 0, got {}",
                self.w_scale
            )));
        }
        if !(self.factor_cap > 0.0) {
            return Err(Error::Config(format!(
                "factor cap must be > 0, got {}",
                self.factor_cap
            )));
        }
        Ok(())
    }
}

/// Per-step guidance diagnostics (one record per non-initial step).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub t: f64,
    pub reward: f64,
    pub grad_norm: f64,
    /// Coefficient that multiplied the reward gradient.
    pub factor: f64,
}

#[derive(Debug, Clone, Default)]
pub struct GuidanceTrace {
    pub records: Vec<TraceRecord>,
}

/// Reward-shifted velocity: `v - w min(t/(1-t), cap) grad_r`.
///
/// Callers must skip t = 1 (the factor diverges there). A zero shift
/// returns `v` verbatim so disabled guidance is bit-exact.
pub fn guided_velocity(
    v: &[f64],
    grad_r: &[f64],
    t: f64,
    w_scale: f64,
    factor_cap: f64,
) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Input(format!(
            "guided velocity needs t in [0,1), got {t}"
        )));
    }
    if v.len() != grad_r.len() {
        return Err(Error::Shape {
            what: "guidance gradient",
            expected: v.len(),
            got: grad_r.len(),
        });
    }
    let coeff = w_scale * (t / (1.0 - t)).min(factor_cap);
    if coeff == 0.0 {
        return Ok(v.to_vec());
    }
    Ok(v.iter()
        .zip(grad_r.iter())
        .map(|(&vi, &gi)| vi - coeff * gi)
        .collect())
}

/// Convex-mix guided velocity:
/// `(1-w) v + w [x_t/(t-1) + (t/(t-1)) grad_r]`. Experimental.
pub fn guided_velocity_mix(
    v: &[f64],
    x_t: &[f64],
    grad_r: &[f64],
    t: f64,
    w_scale: f64,
) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Input(format!(
            "guided velocity needs t in [0,1), got {t}"
        )));
    }
    if v.len() != grad_r.len() || v.len() != x_t.len() {
        return Err(Error::Shape {
            what: "guidance mix operands",
            expected: v.len(),
            got: grad_r.len().min(x_t.len()),
        });
    }
    if w_scale == 0.0 {
        return Ok(v.to_vec());
    }
    let inv = 1.0 / (t - 1.0);
    Ok(v.iter()
        .zip(x_t.iter().zip(grad_r.iter()))
        .map(|(&vi, (&xi, &gi))| (1.0 - w_scale) * vi + w_scale * (xi * inv + t * inv * gi))
        .collect())
}

/// Reward-guided Euler sampling.
///
/// At each step with t != 1 the weighted noisy-reward gradient (w.r.t. the
/// current state only) shifts the CFG-combined velocity. Deterministic per
/// seed; `w_scale = 0` reproduces the unguided sampler bit for bit.
pub fn nrg_sample(
    policy: &VelocityNet,
    noisy_rm: &NoisyRewardNet,
    spec: &GuidanceSpec,
    schedule: &FlowSchedule,
    class: usize,
    seed: u64,
) -> Result<(Vec<f64>, GuidanceTrace)> {
    spec.validate()?;
    let x_init = initial_noise(policy.sample_dim(), seed);
    let mut trace = GuidanceTrace::default();
    let mut step = 0usize;
    let sample = euler_integrate(
        |x, t| {
            let v_cond = policy.velocity(x, t, Cond::Class(class))?;
            let v = if spec.cfg_scale == 1.0 {
                v_cond
            } else {
                let v_uncond = policy.velocity(x, t, Cond::Uncond)?;
                cfg_velocity(&v_cond, &v_uncond, spec.cfg_scale)?
            };
            let out = if t != 1.0 {
                let (reward, grad) =
                    noisy_rm.weighted_reward_grad(x, t, class, &spec.weights)?;
                if grad.iter().any(|g| !g.is_finite()) {
                    return Err(Error::Numeric(format!(
                        "non-finite reward gradient at guidance step {step} (t = {t})"
                    )));
                }
                let guided = match spec.form {
                    GuidanceForm::Shift => {
                        guided_velocity(&v, &grad, t, spec.w_scale, spec.factor_cap)?
                    }
                    GuidanceForm::Mix => {
                        guided_velocity_mix(&v, x, &grad, t, spec.w_scale)?
                    }
                };
                let factor = match spec.form {
                    GuidanceForm::Shift => {
                        spec.w_scale * (t / (1.0 - t)).min(spec.factor_cap)
                    }
                    GuidanceForm::Mix => spec.w_scale * t / (t - 1.0),
                };
                trace.records.push(TraceRecord {
                    step,
                    t,
                    reward,
                    grad_norm: squared_norm(&grad).sqrt(),
                    factor,
                });
                guided
            } else {
                v
            };
            step += 1;
            Ok(out)
        },
        &x_init,
        schedule,
    )?;
    Ok((sample, trace))
}
