//! Conditioned velocity-field network and the flow-matching objective.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, Error, Result};
use crate::netcore::{Activation, Net, NetCache, NetSpec};

use super::embed::{one_hot_into, time_embedding, TIME_FEATURES};
use super::ops::{interpolate, squared_distance, target_velocity};

/// Conditioning input for the velocity field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cond {
    Class(usize),
    /// Unconditional branch (one-hot zeroed, flag input set), used for CFG.
    Uncond,
}

/// MLP over `[x_t | time embedding | one-hot class | uncond flag]` emitting a
/// velocity of the sample dimension.
#[derive(Debug, Clone)]
pub struct VelocityNet {
    net: Net,
    sample_dim: usize,
    n_classes: usize,
}

impl VelocityNet {
    pub fn init(sample_dim: usize, n_classes: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        let mut widths = vec![sample_dim + TIME_FEATURES + n_classes + 1];
        widths.extend_from_slice(hidden);
        widths.push(sample_dim);
        let net = Net::init(NetSpec::new(widths, Activation::Tanh, seed))?;
        Ok(VelocityNet {
            net,
            sample_dim,
            n_classes,
        })
    }

    pub fn from_net(net: Net, sample_dim: usize, n_classes: usize) -> Result<Self> {
        let expect = sample_dim + TIME_FEATURES + n_classes + 1;
        check_len("velocity net input", expect, net.input_dim())?;
        check_len("velocity net output", sample_dim, net.output_dim())?;
        Ok(VelocityNet {
            net,
            sample_dim,
            n_classes,
        })
    }

    pub fn net(&self) -> &Net {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Net {
        &mut self.net
    }

    pub fn sample_dim(&self) -> usize {
        self.sample_dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn build_input(&self, x: &[f64], t: f64, cond: Cond) -> Result<Vec<f64>> {
        check_len("velocity input", self.sample_dim, x.len())?;
        let mut input = vec![0.0; self.net.input_dim()];
        input[..self.sample_dim].copy_from_slice(x);
        input[self.sample_dim..self.sample_dim + TIME_FEATURES]
            .copy_from_slice(&time_embedding(t));
        let class_slot = &mut input[self.sample_dim + TIME_FEATURES..];
        match cond {
            Cond::Class(c) => {
                if c >= self.n_classes {
                    return Err(Error::Input(format!(
                        "class {c} out of range for {} classes",
                        self.n_classes
                    )));
                }
                one_hot_into(c, &mut class_slot[..self.n_classes]);
                class_slot[self.n_classes] = 0.0;
            }
            Cond::Uncond => {
                class_slot.fill(0.0);
                class_slot[self.n_classes] = 1.0;
            }
        }
        Ok(input)
    }

    /// Predicted velocity at (x, t) under `cond`.
    pub fn velocity(&self, x: &[f64], t: f64, cond: Cond) -> Result<Vec<f64>> {
        self.net.forward(&self.build_input(x, t, cond)?)
    }

    /// Forward pass retaining buffers for backprop through the policy.
    pub fn velocity_cached(&self, x: &[f64], t: f64, cond: Cond) -> Result<NetCache> {
        self.net.forward_cached(&self.build_input(x, t, cond)?)
    }
}

/// One training batch: interpolants and velocity targets.
///
/// Invariants `x_t = (1-t) x0 + t x1` and `v_target = x1 - x0` hold by
/// construction.
#[derive(Debug, Clone)]
pub struct FlowBatch {
    pub x0: Vec<Vec<f64>>,
    pub x1: Vec<Vec<f64>>,
    pub t: Vec<f64>,
    pub cond: Vec<Cond>,
    pub x_t: Vec<Vec<f64>>,
    pub v_target: Vec<Vec<f64>>,
}

impl FlowBatch {
    /// Draws `x1 ~ N(0, I)` and `t ~ U(0, 1)` for each sample.
    pub fn build(
        x0: Vec<Vec<f64>>,
        cond: Vec<Cond>,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if x0.is_empty() {
            return Err(Error::Input("flow batch must be non-empty".into()));
        }
        check_len("flow batch cond", x0.len(), cond.len())?;
        let dim = x0[0].len();
        let mut x1 = Vec::with_capacity(x0.len());
        let mut t = Vec::with_capacity(x0.len());
        for row in &x0 {
            check_len("flow batch x0 row", dim, row.len())?;
            x1.push((0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect());
            t.push(rng.gen::<f64>());
        }
        Self::assemble(x0, x1, t, cond)
    }

    /// Builds the derived fields from explicit endpoints and times.
    pub fn assemble(
        x0: Vec<Vec<f64>>,
        x1: Vec<Vec<f64>>,
        t: Vec<f64>,
        cond: Vec<Cond>,
    ) -> Result<Self> {
        check_len("flow batch x1", x0.len(), x1.len())?;
        check_len("flow batch t", x0.len(), t.len())?;
        check_len("flow batch cond", x0.len(), cond.len())?;
        let mut x_t = Vec::with_capacity(x0.len());
        let mut v_target = Vec::with_capacity(x0.len());
        for i in 0..x0.len() {
            x_t.push(interpolate(&x0[i], &x1[i], t[i])?);
            v_target.push(target_velocity(&x0[i], &x1[i])?);
        }
        Ok(FlowBatch {
            x0,
            x1,
            t,
            cond,
            x_t,
            v_target,
        })
    }

    pub fn len(&self) -> usize {
        self.x0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x0.is_empty()
    }
}

/// Flow-matching loss: per sample the squared-error sum over coordinates,
/// averaged over the batch. Returns the loss and its parameter gradient.
pub fn fm_loss(net: &VelocityNet, batch: &FlowBatch) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Input("fm_loss needs a non-empty batch".into()));
    }
    let inv_b = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; net.net().param_count()];
    for i in 0..batch.len() {
        let cache = net.velocity_cached(&batch.x_t[i], batch.t[i], batch.cond[i])?;
        let pred = cache.output();
        let target = &batch.v_target[i];
        loss += squared_distance(pred, target) * inv_b;
        let upstream: Vec<f64> = pred
            .iter()
            .zip(target.iter())
            .map(|(&p, &v)| 2.0 * (p - v) * inv_b)
            .collect();
        net.net().backward_into(&cache, &upstream, &mut grad)?;
    }
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("flow-matching loss is {loss}")));
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::finite_diff_check;
    use crate::seeds::rng_for;

    fn tiny_net() -> VelocityNet {
        VelocityNet::init(2, 3, &[8], 5).unwrap()
    }

    #[test]
    fn batch_invariants_hold_by_construction() {
        let mut rng = rng_for(0, "test", 0);
        let batch = FlowBatch::build(
            vec![vec![1.0, 2.0], vec![-1.0, 0.5]],
            vec![Cond::Class(0), Cond::Class(1)],
            &mut rng,
        )
        .unwrap();
        for i in 0..batch.len() {
            for d in 0..2 {
                let expect = (1.0 - batch.t[i]) * batch.x0[i][d] + batch.t[i] * batch.x1[i][d];
                assert!((batch.x_t[i][d] - expect).abs() < 1e-15);
                assert!(
                    (batch.v_target[i][d] - (batch.x1[i][d] - batch.x0[i][d])).abs() < 1e-15
                );
            }
        }
    }

    #[test]
    fn zero_output_net_single_sample_loss_is_sum_of_squares() {
        // net with zero params predicts 0; v_target=(1,1) -> loss 2
        let mut net = tiny_net();
        net.net_mut().params_mut().fill(0.0);
        let batch = FlowBatch::assemble(
            vec![vec![0.0, 0.0]],
            vec![vec![1.0, 1.0]],
            vec![0.5],
            vec![Cond::Class(0)],
        )
        .unwrap();
        let (loss, _) = fm_loss(&net, &batch).unwrap();
        assert!((loss - 2.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_gives_zero_loss() {
        // x0 = x1 makes v_target = 0; a zero net then has zero loss
        let mut net = tiny_net();
        net.net_mut().params_mut().fill(0.0);
        let batch = FlowBatch::assemble(
            vec![vec![0.3, -0.4]],
            vec![vec![0.3, -0.4]],
            vec![0.25],
            vec![Cond::Class(2)],
        )
        .unwrap();
        let (loss, grad) = fm_loss(&net, &batch).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn fm_loss_gradient_matches_finite_differences() {
        let net = tiny_net();
        let mut rng = rng_for(0, "test", 1);
        let batch = FlowBatch::build(
            vec![vec![0.5, -0.2], vec![0.1, 0.9], vec![-0.7, 0.3]],
            vec![Cond::Class(0), Cond::Uncond, Cond::Class(2)],
            &mut rng,
        )
        .unwrap();
        let (_, grad) = fm_loss(&net, &batch).unwrap();
        let spec = net.net().spec().clone();
        let (sd, nc) = (net.sample_dim(), net.n_classes());
        let err = finite_diff_check(
            |p| {
                let probe = VelocityNet::from_net(
                    Net::from_params(spec.clone(), p.to_vec()).unwrap(),
                    sd,
                    nc,
                )
                .unwrap();
                fm_loss(&probe, &batch).unwrap().0
            },
            &grad,
            net.net().params(),
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "err = {err}");
    }

    #[test]
    fn out_of_range_class_is_rejected() {
        let net = tiny_net();
        assert!(net.velocity(&[0.0, 0.0], 0.5, Cond::Class(3)).is_err());
    }
}
