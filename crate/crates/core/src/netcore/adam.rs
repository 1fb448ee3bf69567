//! Adam optimizer with bias correction.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

use super::net::Net;

/// Adam moment estimates plus hyperparameters for one parameter vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(param_count: usize, lr: f64) -> Self {
        AdamState {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update applied in place.
    ///
    /// Rejects non-finite gradient entries, naming the offending index.
    pub fn apply(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        check_len("adam grad", params.len(), grad.len())?;
        check_len("adam state", self.m.len(), grad.len())?;
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite gradient {} at index {i}",
                grad[i]
            )));
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// The spec-level `adam_step` operation: updates `net` in place.
pub fn adam_step(state: &mut AdamState, net: &mut Net, grad: &[f64]) -> Result<()> {
    state.apply(net.params_mut(), grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::net::{Activation, Net, NetSpec};

    fn one_param_net() -> Net {
        // single 1->1 layer without bias contribution: params [w, b]
        let spec = NetSpec::new(vec![1, 1], Activation::Tanh, 0);
        Net::from_params(spec, vec![0.5, 0.0]).unwrap()
    }

    #[test]
    fn zero_grad_leaves_params_unchanged() {
        let mut net = one_param_net();
        let before = net.params().to_vec();
        let mut state = AdamState::new(2, 0.1);
        adam_step(&mut state, &mut net, &[0.0, 0.0]).unwrap();
        assert_eq!(net.params(), &before[..]);
        assert_eq!(state.step(), 1);
    }

    #[test]
    fn first_step_moves_by_roughly_lr() {
        // bias-corrected first step: delta = lr * g / (|g| + eps) ~= lr for g=1
        let mut net = one_param_net();
        let mut state = AdamState::new(2, 0.1);
        adam_step(&mut state, &mut net, &[1.0, 0.0]).unwrap();
        let delta = 0.5 - net.params()[0];
        assert!((delta - 0.1).abs() < 1e-6, "delta = {delta}");
    }

    #[test]
    fn momentum_state_carries_across_calls() {
        // For a constant gradient the bias correction makes two unit-lr steps
        // equal one doubled-lr step; with a changing gradient the moment
        // state makes them differ. Both halves pin the statefulness.
        let mut a = one_param_net();
        let mut sa = AdamState::new(2, 0.1);
        adam_step(&mut sa, &mut a, &[1.0, 0.0]).unwrap();
        let after_first = a.params()[0];
        // zero gradient still moves the parameter: momentum is nonzero
        adam_step(&mut sa, &mut a, &[0.0, 0.0]).unwrap();
        assert!((a.params()[0] - after_first).abs() > 1e-4);

        let mut b = one_param_net();
        let mut sb = AdamState::new(2, 0.2);
        adam_step(&mut sb, &mut b, &[1.0, 0.0]).unwrap();
        adam_step(&mut sb, &mut b, &[0.0, 0.0]).unwrap();
        let mut c = one_param_net();
        let mut sc = AdamState::new(2, 0.4);
        adam_step(&mut sc, &mut c, &[1.0, 0.0]).unwrap();
        assert!((b.params()[0] - c.params()[0]).abs() > 1e-4);
    }

    #[test]
    fn non_finite_grad_is_rejected_with_index() {
        let mut net = one_param_net();
        let mut state = AdamState::new(2, 0.1);
        let err = adam_step(&mut state, &mut net, &[0.0, f64::NAN]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("index 1"), "message was: {msg}");
    }
}
