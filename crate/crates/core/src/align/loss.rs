//! Alignment losses over velocity-error differences.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::flow::{fm_loss, interpolate, squared_distance, target_velocity, Cond, FlowBatch, VelocityNet};

/// KL-strength schedule for DPO.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaSchedule {
    Constant,
    /// `beta_t = beta (1 - t)^2`, the schedule the derivation produces.
    Quadratic,
}

impl BetaSchedule {
    pub fn effective(self, beta: f64, t: f64) -> f64 {
        match self {
            BetaSchedule::Constant => beta,
            BetaSchedule::Quadratic => beta * (1.0 - t) * (1.0 - t),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BetaSchedule::Constant => "constant",
            BetaSchedule::Quadratic => "quadratic",
        }
    }
}

impl std::str::FromStr for BetaSchedule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(BetaSchedule::Constant),
            "quadratic" => Ok(BetaSchedule::Quadratic),
            other => Err(Error::Config(format!("unknown beta schedule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DpoConfig {
    pub beta: f64,
    pub schedule: BetaSchedule,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for DpoConfig {
    fn default() -> Self {
        DpoConfig {
            beta: 500.0,
            schedule: BetaSchedule::Constant,
            lr: 1e-4,
            epochs: 1,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl DpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::Config(format!("beta must be > 0, got {}", self.beta)));
        }
        Ok(())
    }
}

/// One chosen/rejected pair with the shared interpolation state: both
/// branches use the same `(t, eps)` draw.
#[derive(Debug, Clone)]
pub struct AlignPair {
    pub cond: usize,
    pub x0_w: Vec<f64>,
    pub x0_l: Vec<f64>,
    pub t: f64,
    pub eps: Vec<f64>,
    pub x_t_w: Vec<f64>,
    pub x_t_l: Vec<f64>,
    pub v_w: Vec<f64>,
    pub v_l: Vec<f64>,
}

impl AlignPair {
    pub fn build(
        cond: usize,
        x0_w: Vec<f64>,
        x0_l: Vec<f64>,
        t: f64,
        eps: Vec<f64>,
    ) -> Result<Self> {
        check_len("align pair rejected", x0_w.len(), x0_l.len())?;
        check_len("align pair noise", x0_w.len(), eps.len())?;
        let x_t_w = interpolate(&x0_w, &eps, t)?;
        let x_t_l = interpolate(&x0_l, &eps, t)?;
        let v_w = target_velocity(&x0_w, &eps)?;
        let v_l = target_velocity(&x0_l, &eps)?;
        Ok(AlignPair {
            cond,
            x0_w,
            x0_l,
            t,
            eps,
            x_t_w,
            x_t_l,
            v_w,
            v_l,
        })
    }
}

/// Batch alias used by the DPO loss.
pub type AlignBatch = [AlignPair];

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// DPO loss for flow models:
///
/// ```text
/// -log sigma( -(beta_t / 2) * [ (|v_w - p_w|^2 - |v_w - r_w|^2)
///                             - (|v_l - p_l|^2 - |v_l - r_l|^2) ] )
/// ```
///
/// where `p` is the policy prediction and `r` the frozen reference;
/// gradients flow only through the policy terms. Mean over the batch.
pub fn flow_dpo_loss(
    policy: &VelocityNet,
    reference: &VelocityNet,
    batch: &AlignBatch,
    cfg: &DpoConfig,
) -> Result<(f64, Vec<f64>)> {
    cfg.validate()?;
    if batch.is_empty() {
        return Err(Error::Input("dpo batch is empty".into()));
    }
    let inv_b = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; policy.net().param_count()];
    for pair in batch {
        let cond = Cond::Class(pair.cond);
        let cache_w = policy.velocity_cached(&pair.x_t_w, pair.t, cond)?;
        let cache_l = policy.velocity_cached(&pair.x_t_l, pair.t, cond)?;
        let ref_w = reference.velocity(&pair.x_t_w, pair.t, cond)?;
        let ref_l = reference.velocity(&pair.x_t_l, pair.t, cond)?;
        let ew_pol = squared_distance(cache_w.output(), &pair.v_w);
        let el_pol = squared_distance(cache_l.output(), &pair.v_l);
        let ew_ref = squared_distance(&ref_w, &pair.v_w);
        let el_ref = squared_distance(&ref_l, &pair.v_l);
        let inner = (ew_pol - ew_ref) - (el_pol - el_ref);
        if !inner.is_finite() {
            return Err(Error::Numeric(format!("dpo inner term is {inner}")));
        }
        let beta_eff = cfg.schedule.effective(cfg.beta, pair.t);
        let z = -0.5 * beta_eff * inner;
        loss += softplus(-z) * inv_b;
        // dL/d inner = (1 - sigma(z)) * beta_eff / 2
        let dl_dinner = (1.0 - sigmoid(z)) * 0.5 * beta_eff;
        let up_w: Vec<f64> = cache_w
            .output()
            .iter()
            .zip(pair.v_w.iter())
            .map(|(&p, &v)| dl_dinner * 2.0 * (p - v) * inv_b)
            .collect();
        let up_l: Vec<f64> = cache_l
            .output()
            .iter()
            .zip(pair.v_l.iter())
            .map(|(&p, &v)| -dl_dinner * 2.0 * (p - v) * inv_b)
            .collect();
        policy.net().backward_into(&cache_w, &up_w, &mut grad)?;
        policy.net().backward_into(&cache_l, &up_l, &mut grad)?;
    }
    Ok((loss, grad))
}

/// Exponent clip bound for RWR weights.
pub const RWR_CLIP: f64 = 20.0;

/// Reward-weighted velocity regression: mean of `exp(clip(r)) |v - p|^2`
/// over the batch; the `(1-t)^2 factor` of the derivation is omitted.
pub fn flow_rwr_loss(
    policy: &VelocityNet,
    batch: &FlowBatch,
    rewards: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Input("rwr batch is empty".into()));
    }
    check_len("rwr rewards", batch.len(), rewards.len())?;
    if let Some(r) = rewards.iter().find(|r| !r.is_finite()) {
        return Err(Error::Numeric(format!("non-finite reward {r}")));
    }
    let inv_b = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; policy.net().param_count()];
    for i in 0..batch.len() {
        let weight = rewards[i].clamp(-RWR_CLIP, RWR_CLIP).exp();
        let cache = policy.velocity_cached(&batch.x_t[i], batch.t[i], batch.cond[i])?;
        loss += weight * squared_distance(cache.output(), &batch.v_target[i]) * inv_b;
        let upstream: Vec<f64> = cache
            .output()
            .iter()
            .zip(batch.v_target[i].iter())
            .map(|(&p, &v)| weight * 2.0 * (p - v) * inv_b)
            .collect();
        policy.net().backward_into(&cache, &upstream, &mut grad)?;
    }
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("rwr loss is {loss}")));
    }
    Ok((loss, grad))
}

/// SFT objective: the flow-matching loss restricted to chosen samples.
pub fn sft_loss(policy: &VelocityNet, chosen: &FlowBatch) -> Result<(f64, Vec<f64>)> {
    if chosen.is_empty() {
        return Err(Error::Input("sft batch is empty".into()));
    }
    fm_loss(policy, chosen)
}
