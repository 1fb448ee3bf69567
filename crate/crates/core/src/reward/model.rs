//! Multi-dimensional reward model with context-separated score paths.
//!
//! Two trunks: a context-free one over the flattened trajectory (feeding the
//! vq and mq heads) and a context-aware one over `[trajectory | cos, sin of
//! the class angle]` (feeding the ta head). The vq/mq path structurally
//! cannot see the condition, which rules out context leakage by
//! construction. Trunk outputs pass through the activation before the
//! linear heads so heads see nonlinear features.

use crate::error::{check_len, Result};
use crate::flow::angular_embedding;
use crate::netcore::{Activation, Net, NetCache, NetSpec};

#[derive(Debug, Clone)]
pub struct RewardNet {
    trunk_free: Net,
    trunk_aware: Net,
    head_vq: Net,
    head_mq: Net,
    head_ta: Net,
    sample_dim: usize,
    n_classes: usize,
}

/// Forward buffers for one scored trajectory.
pub struct RewardCache {
    free: NetCache,
    aware: NetCache,
    head_vq: NetCache,
    head_mq: NetCache,
    head_ta: NetCache,
    pub scores: [f64; 3],
}

/// Gradient accumulators matching [`RewardNet::backward_into`].
#[derive(Debug, Clone)]
pub struct RewardGrads {
    pub trunk_free: Vec<f64>,
    pub trunk_aware: Vec<f64>,
    pub head_vq: Vec<f64>,
    pub head_mq: Vec<f64>,
    pub head_ta: Vec<f64>,
}

impl RewardNet {
    pub fn init(sample_dim: usize, n_classes: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        let h = *hidden.last().expect("hidden widths must be non-empty");
        let mut free_widths = vec![sample_dim];
        free_widths.extend_from_slice(hidden);
        let mut aware_widths = vec![sample_dim + 2];
        aware_widths.extend_from_slice(hidden);
        Ok(RewardNet {
            trunk_free: Net::init(NetSpec::new(free_widths, Activation::Tanh, seed))?,
            trunk_aware: Net::init(NetSpec::new(aware_widths, Activation::Tanh, seed + 1))?,
            head_vq: Net::init(NetSpec::new(vec![h, 1], Activation::Tanh, seed + 2))?,
            head_mq: Net::init(NetSpec::new(vec![h, 1], Activation::Tanh, seed + 3))?,
            head_ta: Net::init(NetSpec::new(vec![h, 1], Activation::Tanh, seed + 4))?,
            sample_dim,
            n_classes,
        })
    }

    pub fn sample_dim(&self) -> usize {
        self.sample_dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn nets(&self) -> [(&'static str, &Net); 5] {
        [
            ("trunk_free", &self.trunk_free),
            ("trunk_aware", &self.trunk_aware),
            ("head_vq", &self.head_vq),
            ("head_mq", &self.head_mq),
            ("head_ta", &self.head_ta),
        ]
    }

    pub fn from_nets(
        trunk_free: Net,
        trunk_aware: Net,
        head_vq: Net,
        head_mq: Net,
        head_ta: Net,
        n_classes: usize,
    ) -> Result<Self> {
        let sample_dim = trunk_free.input_dim();
        check_len(
            "reward aware trunk input",
            sample_dim + 2,
            trunk_aware.input_dim(),
        )?;
        Ok(RewardNet {
            trunk_free,
            trunk_aware,
            head_vq,
            head_mq,
            head_ta,
            sample_dim,
            n_classes,
        })
    }

    /// Scores `(vq, mq, ta)` for a flattened trajectory under `class`.
    pub fn score(&self, frames: &[f64], class: usize) -> Result<[f64; 3]> {
        Ok(self.score_cached(frames, class)?.scores)
    }

    pub fn score_cached(&self, frames: &[f64], class: usize) -> Result<RewardCache> {
        check_len("reward input", self.sample_dim, frames.len())?;
        let free = self.trunk_free.forward_cached(frames)?;
        let act = self.trunk_free.spec().activation;
        let hidden_free: Vec<f64> = free.output().iter().map(|&z| act.apply(z)).collect();

        let mut aware_input = Vec::with_capacity(self.sample_dim + 2);
        aware_input.extend_from_slice(frames);
        aware_input.extend_from_slice(&angular_embedding(class, self.n_classes));
        let aware = self.trunk_aware.forward_cached(&aware_input)?;
        let hidden_aware: Vec<f64> = aware.output().iter().map(|&z| act.apply(z)).collect();

        let head_vq = self.head_vq.forward_cached(&hidden_free)?;
        let head_mq = self.head_mq.forward_cached(&hidden_free)?;
        let head_ta = self.head_ta.forward_cached(&hidden_aware)?;
        let scores = [
            head_vq.output()[0],
            head_mq.output()[0],
            head_ta.output()[0],
        ];
        Ok(RewardCache {
            free,
            aware,
            head_vq,
            head_mq,
            head_ta,
            scores,
        })
    }

    /// Backprop of `sum_d upstream[d] * score_d` into all five nets.
    pub fn backward_into(
        &self,
        cache: &RewardCache,
        upstream: &[f64; 3],
        grads: &mut RewardGrads,
    ) -> Result<()> {
        let act = self.trunk_free.spec().activation;
        let g_vq = self
            .head_vq
            .backward_into(&cache.head_vq, &[upstream[0]], &mut grads.head_vq)?;
        let g_mq = self
            .head_mq
            .backward_into(&cache.head_mq, &[upstream[1]], &mut grads.head_mq)?;
        let g_ta = self
            .head_ta
            .backward_into(&cache.head_ta, &[upstream[2]], &mut grads.head_ta)?;

        // chain through the extra activation between trunk and heads
        let up_free: Vec<f64> = cache
            .free
            .output()
            .iter()
            .zip(g_vq.iter().zip(g_mq.iter()))
            .map(|(&z, (gv, gm))| (gv + gm) * act.derivative(z))
            .collect();
        let up_aware: Vec<f64> = cache
            .aware
            .output()
            .iter()
            .zip(g_ta.iter())
            .map(|(&z, gt)| gt * act.derivative(z))
            .collect();
        self.trunk_free
            .backward_into(&cache.free, &up_free, &mut grads.trunk_free)?;
        self.trunk_aware
            .backward_into(&cache.aware, &up_aware, &mut grads.trunk_aware)?;
        Ok(())
    }

    pub fn zero_grads(&self) -> RewardGrads {
        RewardGrads {
            trunk_free: vec![0.0; self.trunk_free.param_count()],
            trunk_aware: vec![0.0; self.trunk_aware.param_count()],
            head_vq: vec![0.0; self.head_vq.param_count()],
            head_mq: vec![0.0; self.head_mq.param_count()],
            head_ta: vec![0.0; self.head_ta.param_count()],
        }
    }

    /// Flattened parameters in net order (trunks then heads), for gradient
    /// verification.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (_, net) in self.nets() {
            out.extend_from_slice(net.params());
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        let total: usize = self.nets().iter().map(|(_, n)| n.param_count()).sum();
        check_len("reward flat params", total, flat.len())?;
        let mut off = 0;
        for net in [
            &mut self.trunk_free,
            &mut self.trunk_aware,
            &mut self.head_vq,
            &mut self.head_mq,
            &mut self.head_ta,
        ] {
            let n = net.param_count();
            net.params_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    pub(crate) fn nets_mut(&mut self) -> [&mut Net; 5] {
        [
            &mut self.trunk_free,
            &mut self.trunk_aware,
            &mut self.head_vq,
            &mut self.head_mq,
            &mut self.head_ta,
        ]
    }
}

impl RewardGrads {
    pub fn as_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.trunk_free);
        out.extend_from_slice(&self.trunk_aware);
        out.extend_from_slice(&self.head_vq);
        out.extend_from_slice(&self.head_mq);
        out.extend_from_slice(&self.head_ta);
        out
    }

    pub fn slices(&self) -> [&[f64]; 5] {
        [
            &self.trunk_free,
            &self.trunk_aware,
            &self.head_vq,
            &self.head_mq,
            &self.head_ta,
        ]
    }
}
