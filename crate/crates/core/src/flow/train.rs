//! Flow-matching pretraining loop.

use rand::Rng;

use crate::error::{Error, Result};
use crate::netcore::{adam_step, AdamState};
use crate::seeds::rng_for;

use super::velocity::{Cond, FlowBatch, VelocityNet, fm_loss};

#[derive(Debug, Clone)]
pub struct FlowTrainConfig {
    pub hidden: Vec<usize>,
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Probability of replacing the class condition with the unconditional
    /// branch, enabling classifier-free guidance at sampling time.
    pub cond_dropout: f64,
    pub seed: u64,
}

impl Default for FlowTrainConfig {
    fn default() -> Self {
        FlowTrainConfig {
            hidden: vec![96, 96],
            steps: 20_000,
            batch_size: 64,
            lr: 1e-3,
            cond_dropout: 0.1,
            seed: 0,
        }
    }
}

/// A recorded training step for the curve CSV.
#[derive(Debug, Clone, Copy)]
pub struct CurvePoint {
    pub step: usize,
    pub loss: f64,
    pub grad_norm: f64,
}

/// Trains a velocity net on a corpus of (sample, class) rows.
///
/// Returns the net and a sparse training curve (every 100th step).
pub fn train_flow(
    corpus: &[(Vec<f64>, usize)],
    n_classes: usize,
    cfg: &FlowTrainConfig,
) -> Result<(VelocityNet, Vec<CurvePoint>)> {
    if corpus.is_empty() {
        return Err(Error::Input("flow training corpus is empty".into()));
    }
    let dim = corpus[0].0.len();
    let mut net = VelocityNet::init(dim, n_classes, &cfg.hidden, cfg.seed)?;
    let mut adam = AdamState::new(net.net().param_count(), cfg.lr);
    let mut rng = rng_for(cfg.seed, "train-flow", 0);
    let mut curve = Vec::new();
    for step in 0..cfg.steps {
        let mut x0 = Vec::with_capacity(cfg.batch_size);
        let mut cond = Vec::with_capacity(cfg.batch_size);
        for _ in 0..cfg.batch_size {
            let (frames, class) = &corpus[rng.gen_range(0..corpus.len())];
            x0.push(frames.clone());
            cond.push(if rng.gen::<f64>() < cfg.cond_dropout {
                Cond::Uncond
            } else {
                Cond::Class(*class)
            });
        }
        let batch = FlowBatch::build(x0, cond, &mut rng)?;
        let (loss, grad) = fm_loss(&net, &batch)?;
        if step % 100 == 0 {
            let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            curve.push(CurvePoint {
                step,
                loss,
                grad_norm,
            });
        }
        adam_step(&mut adam, net.net_mut(), &grad)?;
    }
    Ok((net, curve))
}
