//! The alignment training loop.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{CurvePoint, FlowBatch, VelocityNet, Cond};
use crate::netcore::{adam_step, AdamState};
use crate::seeds::rng_for;

use super::loss::{flow_dpo_loss, flow_rwr_loss, sft_loss, AlignPair, BetaSchedule, DpoConfig};
use super::relabeled::RelabeledPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignMethod {
    Sft,
    Rwr,
    Dpo,
}

impl AlignMethod {
    pub fn name(self) -> &'static str {
        match self {
            AlignMethod::Sft => "sft",
            AlignMethod::Rwr => "rwr",
            AlignMethod::Dpo => "dpo",
        }
    }
}

impl std::str::FromStr for AlignMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sft" => Ok(AlignMethod::Sft),
            "rwr" => Ok(AlignMethod::Rwr),
            "dpo" => Ok(AlignMethod::Dpo),
            other => Err(Error::Config(format!("unknown align method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlignConfig {
    pub method: AlignMethod,
    pub beta: f64,
    pub schedule: BetaSchedule,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            method: AlignMethod::Dpo,
            beta: 500.0,
            schedule: BetaSchedule::Constant,
            lr: 1e-4,
            epochs: 1,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl AlignConfig {
    fn dpo(&self) -> DpoConfig {
        DpoConfig {
            beta: self.beta,
            schedule: self.schedule,
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
        }
    }
}

/// Fine-tunes `pretrained` on reward-relabeled pairs. The reference (for
/// DPO) is a frozen copy of the pretrained policy. Deterministic per seed;
/// zero epochs returns the pretrained parameters untouched.
pub fn align_train(
    pretrained: &VelocityNet,
    pairs: &[RelabeledPair],
    cfg: &AlignConfig,
) -> Result<(VelocityNet, Vec<CurvePoint>)> {
    if pairs.is_empty() {
        return Err(Error::Input("no relabeled pairs to align on".into()));
    }
    if cfg.method == AlignMethod::Rwr && pairs.iter().any(|p| p.scores.is_none()) {
        return Err(Error::Input(
            "rwr needs per-sample scores; relabel with score emission".into(),
        ));
    }
    let mut policy = pretrained.clone();
    let reference = pretrained.clone();
    let dim = policy.sample_dim();
    let mut adam = AdamState::new(policy.net().param_count(), cfg.lr);
    let mut rng = rng_for(cfg.seed, "align", 0);
    let mut curve = Vec::new();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut step = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let (loss, grad) = match cfg.method {
                AlignMethod::Dpo => {
                    let mut batch = Vec::with_capacity(chunk.len());
                    for &i in chunk {
                        let p = &pairs[i];
                        let t: f64 = rng.gen();
                        let eps: Vec<f64> = (0..dim)
                            .map(|_| rng.sample::<f64, _>(StandardNormal))
                            .collect();
                        batch.push(AlignPair::build(
                            p.cond,
                            p.chosen.clone(),
                            p.rejected.clone(),
                            t,
                            eps,
                        )?);
                    }
                    flow_dpo_loss(&policy, &reference, &batch, &cfg.dpo())?
                }
                AlignMethod::Sft => {
                    let mut x0 = Vec::with_capacity(chunk.len());
                    let mut cond = Vec::with_capacity(chunk.len());
                    for &i in chunk {
                        x0.push(pairs[i].chosen.clone());
                        cond.push(Cond::Class(pairs[i].cond));
                    }
                    let batch = FlowBatch::build(x0, cond, &mut rng)?;
                    sft_loss(&policy, &batch)?
                }
                AlignMethod::Rwr => {
                    // both branches train, each weighted by its own reward
                    let mut x0 = Vec::with_capacity(chunk.len() * 2);
                    let mut cond = Vec::with_capacity(chunk.len() * 2);
                    let mut rewards = Vec::with_capacity(chunk.len() * 2);
                    for &i in chunk {
                        let p = &pairs[i];
                        let (rw, rl) = p.scores.expect("checked above");
                        x0.push(p.chosen.clone());
                        cond.push(Cond::Class(p.cond));
                        rewards.push(rw);
                        x0.push(p.rejected.clone());
                        cond.push(Cond::Class(p.cond));
                        rewards.push(rl);
                    }
                    let batch = FlowBatch::build(x0, cond, &mut rng)?;
                    flow_rwr_loss(&policy, &batch, &rewards)?
                }
            };
            if step % 20 == 0 {
                let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                curve.push(CurvePoint {
                    step,
                    loss,
                    grad_norm,
                });
            }
            adam_step(&mut adam, policy.net_mut(), &grad)?;
            step += 1;
        }
    }
    Ok((policy, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::relabeled::Side;

    fn pairs(n: usize) -> Vec<RelabeledPair> {
        (0..n)
            .map(|i| RelabeledPair {
                cond: i % 2,
                chosen: vec![0.5, 0.5],
                rejected: vec![-0.5, -0.5],
                scores: Some((1.0, -1.0)),
                chosen_side: Side::A,
                label_orientation: Some(Side::A),
                flipped: false,
            })
            .collect()
    }

    #[test]
    fn zero_epochs_returns_pretrained_params() {
        let net = VelocityNet::init(2, 2, &[8], 0).unwrap();
        let cfg = AlignConfig {
            epochs: 0,
            ..Default::default()
        };
        let (aligned, _) = align_train(&net, &pairs(4), &cfg).unwrap();
        assert_eq!(aligned.net().params(), net.net().params());
    }

    #[test]
    fn tiny_beta_keeps_the_policy_close_to_the_reference() {
        let net = VelocityNet::init(2, 2, &[8], 1).unwrap();
        let run = |beta: f64| {
            let cfg = AlignConfig {
                beta,
                epochs: 1,
                lr: 1e-3,
                ..Default::default()
            };
            let (aligned, _) = align_train(&net, &pairs(64), &cfg).unwrap();
            aligned
                .net()
                .params()
                .iter()
                .zip(net.net().params())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        let small = run(1e-9);
        let large = run(500.0);
        assert!(
            small < large * 0.1,
            "beta->0 drift {small} should be far below beta=500 drift {large}"
        );
    }

    #[test]
    fn rwr_without_scores_is_a_validation_error() {
        let net = VelocityNet::init(2, 2, &[8], 2).unwrap();
        let mut ps = pairs(4);
        ps[2].scores = None;
        let cfg = AlignConfig {
            method: AlignMethod::Rwr,
            ..Default::default()
        };
        assert!(matches!(
            align_train(&net, &ps, &cfg),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn sft_never_reads_the_rejected_branch() {
        let net = VelocityNet::init(2, 2, &[8], 3).unwrap();
        let cfg = AlignConfig {
            method: AlignMethod::Sft,
            epochs: 1,
            ..Default::default()
        };
        let base = pairs(16);
        let mut zeroed = base.clone();
        for p in &mut zeroed {
            p.rejected = vec![0.0, 0.0];
        }
        let (a, _) = align_train(&net, &base, &cfg).unwrap();
        let (b, _) = align_train(&net, &zeroed, &cfg).unwrap();
        assert_eq!(a.net().params(), b.net().params());
    }
}
