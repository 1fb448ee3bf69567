//! Minimal dense feed-forward network with exact reverse-mode gradients.
//!
//! Parameters live in one flat `Vec<f64>`, layer-major, weights before bias:
//! for layer `l` mapping `n_in -> n_out`, the block is `W_l` (row-major,
//! `n_out x n_in`) followed by `b_l` (`n_out`). The activation is applied
//! after every layer except the last.

use rand::distributions::{Distribution, Uniform};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Element-wise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Silu,
}

impl Activation {
    pub fn id(self) -> u8 {
        match self {
            Activation::Tanh => 0,
            Activation::Relu => 1,
            Activation::Silu => 2,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(Activation::Tanh),
            1 => Ok(Activation::Relu),
            2 => Ok(Activation::Silu),
            other => Err(Error::Format(format!("unknown activation id {other}"))),
        }
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Silu => z / (1.0 + (-z).exp()),
        }
    }

    /// Derivative at pre-activation `z`.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let a = z.tanh();
                1.0 - a * a
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Silu => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 + z * (1.0 - s))
            }
        }
    }
}

/// Architecture description: layer widths, activation, init seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
}

impl NetSpec {
    pub fn new(layer_widths: Vec<usize>, activation: Activation, seed: u64) -> Self {
        NetSpec {
            layer_widths,
            activation,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 {
            return Err(Error::Config(format!(
                "a net needs at least 2 layer widths, got {}",
                self.layer_widths.len()
            )));
        }
        if let Some(w) = self.layer_widths.iter().find(|&&w| w == 0) {
            return Err(Error::Config(format!("layer width must be >= 1, got {w}")));
        }
        Ok(())
    }

    /// Total parameter count: sum over layers of `n_out * (n_in + 1)`.
    pub fn param_count(&self) -> usize {
        self.layer_widths
            .windows(2)
            .map(|w| w[1] * (w[0] + 1))
            .sum()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    fn n_layers(&self) -> usize {
        self.layer_widths.len() - 1
    }
}

/// A dense network: spec plus flat parameter vector.
#[derive(Debug, Clone)]
pub struct Net {
    spec: NetSpec,
    params: Vec<f64>,
}

/// Per-layer buffers recorded by a forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct NetCache {
    /// `post[0]` is the input; `post[l+1]` is layer `l`'s output.
    post: Vec<Vec<f64>>,
    /// Pre-activation values per layer.
    pre: Vec<Vec<f64>>,
}

impl NetCache {
    pub fn output(&self) -> &[f64] {
        self.post.last().unwrap()
    }
}

impl Net {
    /// Initializes weights uniformly in `±sqrt(6 / (fan_in + fan_out))`,
    /// biases zero; deterministic in `spec.seed`.
    pub fn init(spec: NetSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
        let mut params = Vec::with_capacity(spec.param_count());
        for w in spec.layer_widths.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit);
            params.extend((0..n_out * n_in).map(|_| dist.sample(&mut rng)));
            params.extend(std::iter::repeat(0.0).take(n_out));
        }
        Ok(Net { spec, params })
    }

    /// Wraps an existing parameter vector (e.g. loaded from a checkpoint).
    pub fn from_params(spec: NetSpec, params: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        check_len("net params", spec.param_count(), params.len())?;
        if let Some(p) = params.iter().find(|p| !p.is_finite()) {
            return Err(Error::Numeric(format!("non-finite parameter {p}")));
        }
        Ok(Net { spec, params })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    /// Pure forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(input)?.post.pop().unwrap())
    }

    /// Forward pass retaining per-layer buffers for `backward`.
    pub fn forward_cached(&self, input: &[f64]) -> Result<NetCache> {
        check_len("net input", self.spec.input_dim(), input.len())?;
        let n_layers = self.spec.n_layers();
        let mut post = Vec::with_capacity(n_layers + 1);
        let mut pre = Vec::with_capacity(n_layers);
        post.push(input.to_vec());
        let mut offset = 0;
        for (l, w) in self.spec.layer_widths.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &self.params[offset..offset + n_out * n_in];
            let bias = &self.params[offset + n_out * n_in..offset + n_out * (n_in + 1)];
            offset += n_out * (n_in + 1);
            let x = post.last().unwrap();
            let mut z = vec![0.0; n_out];
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &weights[o * n_in..(o + 1) * n_in];
                let mut acc = bias[o];
                for (wi, xi) in row.iter().zip(x.iter()) {
                    acc += wi * xi;
                }
                *zo = acc;
            }
            let a = if l + 1 < n_layers {
                z.iter().map(|&v| self.spec.activation.apply(v)).collect()
            } else {
                z.clone()
            };
            pre.push(z);
            post.push(a);
        }
        Ok(NetCache { post, pre })
    }

    /// Reverse-mode gradients of `upstream . output` w.r.t. params and input.
    ///
    /// Parameter gradients are accumulated into `param_grad_acc` (callers zero
    /// or reuse it across a batch); the input gradient is returned.
    pub fn backward_into(
        &self,
        cache: &NetCache,
        upstream: &[f64],
        param_grad_acc: &mut [f64],
    ) -> Result<Vec<f64>> {
        check_len("net upstream", self.spec.output_dim(), upstream.len())?;
        check_len("net param grad", self.params.len(), param_grad_acc.len())?;
        let n_layers = self.spec.n_layers();
        let mut delta = upstream.to_vec();
        // layer parameter offsets
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for w in self.spec.layer_widths.windows(2) {
            offsets.push(off);
            off += w[1] * (w[0] + 1);
        }
        for l in (0..n_layers).rev() {
            let n_in = self.spec.layer_widths[l];
            let n_out = self.spec.layer_widths[l + 1];
            if l + 1 < n_layers {
                let z = &cache.pre[l];
                for (d, &zv) in delta.iter_mut().zip(z.iter()) {
                    *d *= self.spec.activation.derivative(zv);
                }
            }
            let x = &cache.post[l];
            let w_off = offsets[l];
            let b_off = w_off + n_out * n_in;
            for o in 0..n_out {
                let d = delta[o];
                let grad_row = &mut param_grad_acc[w_off + o * n_in..w_off + (o + 1) * n_in];
                for (g, xi) in grad_row.iter_mut().zip(x.iter()) {
                    *g += d * xi;
                }
                param_grad_acc[b_off + o] += d;
            }
            let weights = &self.params[w_off..b_off];
            let mut prev = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                let row = &weights[o * n_in..(o + 1) * n_in];
                for (p, wi) in prev.iter_mut().zip(row.iter()) {
                    *p += d * wi;
                }
            }
            delta = prev;
        }
        Ok(delta)
    }

    /// One-shot gradients: forward, then backward with fresh accumulators.
    pub fn grads(&self, input: &[f64], upstream: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let cache = self.forward_cached(input)?;
        let mut param_grad = vec![0.0; self.params.len()];
        let input_grad = self.backward_into(&cache, upstream, &mut param_grad)?;
        Ok((param_grad, input_grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(widths: &[usize]) -> NetSpec {
        NetSpec::new(widths.to_vec(), Activation::Tanh, 0)
    }

    #[test]
    fn param_count_matches_analytic_formula() {
        // 2*4+4 + 4*1+1 = 17
        let net = Net::init(spec(&[2, 4, 1])).unwrap();
        assert_eq!(net.param_count(), 17);
        assert_eq!(net.spec().param_count(), 17);
    }

    #[test]
    fn init_is_deterministic() {
        let a = Net::init(spec(&[3, 5, 2])).unwrap();
        let b = Net::init(spec(&[3, 5, 2])).unwrap();
        assert_eq!(a.params(), b.params());
        let c = Net::init(NetSpec::new(vec![3, 5, 2], Activation::Tanh, 1)).unwrap();
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn too_few_widths_is_a_config_error() {
        assert!(matches!(
            Net::init(spec(&[3])),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Net::init(spec(&[3, 0, 2])),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zero_net_maps_everything_to_zero() {
        let s = spec(&[3, 4, 2]);
        let net = Net::from_params(s.clone(), vec![0.0; s.param_count()]).unwrap();
        let out = net.forward(&[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn identity_single_layer() {
        let s = spec(&[2, 2]);
        // W = I, b = 0
        let params = vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let net = Net::from_params(s, params).unwrap();
        let out = net.forward(&[0.3, -0.7]).unwrap();
        assert_eq!(out, vec![0.3, -0.7]);
    }

    #[test]
    fn hand_computed_1_2_1_tanh() {
        // layer 0: W = [[1.0], [-0.5]], b = [0.25, 0.0]
        // layer 1: W = [[2.0, 1.0]], b = [-0.1]
        let s = spec(&[1, 2, 1]);
        let params = vec![1.0, -0.5, 0.25, 0.0, 2.0, 1.0, -0.1];
        let net = Net::from_params(s, params).unwrap();
        let x = 0.8;
        let h1 = (1.0 * x + 0.25f64).tanh();
        let h2 = (-0.5 * x).tanh();
        let expect = 2.0 * h1 + 1.0 * h2 - 0.1;
        let out = net.forward(&[x]).unwrap();
        assert!((out[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn forward_does_not_mutate_the_net() {
        let net = Net::init(spec(&[3, 4, 2])).unwrap();
        let before = net.params().to_vec();
        let _ = net.forward(&[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(net.params(), &before[..]);
    }

    #[test]
    fn linear_net_input_grad_is_w_transpose_upstream() {
        // y = Wx, W = [[1, 2], [3, 4]]
        let s = spec(&[2, 2]);
        let net = Net::from_params(s, vec![1.0, 2.0, 3.0, 4.0, 0.0, 0.0]).unwrap();
        let (_, input_grad) = net.grads(&[0.5, -0.5], &[1.0, 1.0]).unwrap();
        // W^T u = [1+3, 2+4]
        assert_eq!(input_grad, vec![4.0, 6.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let net = Net::init(spec(&[2, 8, 1])).unwrap();
        let (pg, ig) = net.grads(&[0.4, 0.6], &[0.0]).unwrap();
        assert!(pg.iter().all(|&g| g == 0.0));
        assert!(ig.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let net = Net::init(spec(&[2, 3])).unwrap();
        assert!(matches!(
            net.forward(&[1.0]),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            net.grads(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::Shape { .. })
        ));
    }
}
