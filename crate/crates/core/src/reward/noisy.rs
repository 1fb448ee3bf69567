//! Time-dependent reward model trained on identically-noised pairs, the
//! gradient source for inference-time reward guidance.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::flow::{angular_embedding, time_embedding, TIME_FEATURES};
use crate::netcore::{AdamState, Net, NetCache, NetSpec};
use crate::seeds::rng_for;
use crate::toyworld::{PrefDataset, PrefLabel, DIMS};

use super::btt::bt_loss;
use super::stats::RewardWeights;
use super::train::{split_by_condition, PairItem};

/// MLP over `[x_t | time embedding | condition embedding]` emitting the
/// three per-dimension scores; defined for all t in [0, 1].
#[derive(Debug, Clone)]
pub struct NoisyRewardNet {
    net: Net,
    sample_dim: usize,
    n_classes: usize,
}

impl NoisyRewardNet {
    pub fn init(sample_dim: usize, n_classes: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        let mut widths = vec![sample_dim + TIME_FEATURES + 2];
        widths.extend_from_slice(hidden);
        widths.push(3);
        Ok(NoisyRewardNet {
            net: Net::init(NetSpec::new(widths, crate::netcore::Activation::Tanh, seed))?,
            sample_dim,
            n_classes,
        })
    }

    pub fn from_net(net: Net, sample_dim: usize, n_classes: usize) -> Result<Self> {
        check_len(
            "noisy reward input",
            sample_dim + TIME_FEATURES + 2,
            net.input_dim(),
        )?;
        check_len("noisy reward output", 3, net.output_dim())?;
        Ok(NoisyRewardNet {
            net,
            sample_dim,
            n_classes,
        })
    }

    pub fn net(&self) -> &Net {
        &self.net
    }

    pub fn sample_dim(&self) -> usize {
        self.sample_dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn build_input(&self, x_t: &[f64], t: f64, class: usize) -> Result<Vec<f64>> {
        check_len("noisy reward x_t", self.sample_dim, x_t.len())?;
        let mut input = Vec::with_capacity(self.net.input_dim());
        input.extend_from_slice(x_t);
        input.extend_from_slice(&time_embedding(t));
        input.extend_from_slice(&angular_embedding(class, self.n_classes));
        Ok(input)
    }

    /// Raw (vq, mq, ta) scores of a noised sample at time `t`.
    pub fn score(&self, x_t: &[f64], t: f64, class: usize) -> Result<[f64; 3]> {
        let out = self.net.forward(&self.build_input(x_t, t, class)?)?;
        Ok([out[0], out[1], out[2]])
    }

    fn score_cached(&self, x_t: &[f64], t: f64, class: usize) -> Result<NetCache> {
        self.net.forward_cached(&self.build_input(x_t, t, class)?)
    }

    /// Scalar weighted reward and its gradient w.r.t. `x_t` only (time and
    /// condition features are constants for the gradient).
    pub fn weighted_reward_grad(
        &self,
        x_t: &[f64],
        t: f64,
        class: usize,
        weights: &RewardWeights,
    ) -> Result<(f64, Vec<f64>)> {
        weights.validate()?;
        let cache = self.score_cached(x_t, t, class)?;
        let w = weights.as_array();
        let reward = cache
            .output()
            .iter()
            .zip(w.iter())
            .map(|(s, wi)| s * wi)
            .sum();
        let mut param_sink = vec![0.0; self.net.param_count()];
        let full = self.net.backward_into(&cache, &w, &mut param_sink)?;
        Ok((reward, full[..self.sample_dim].to_vec()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoisyTrainConfig {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Cosine lr decay floor as a fraction of `lr` (1.0 disables decay).
    pub lr_floor: f64,
    pub val_classes: Vec<usize>,
    pub seed: u64,
}

impl Default for NoisyTrainConfig {
    fn default() -> Self {
        NoisyTrainConfig {
            hidden: vec![256, 256],
            lr: 2e-3,
            batch_size: 16,
            epochs: 20,
            lr_floor: 0.05,
            val_classes: vec![3, 11],
            seed: 0,
        }
    }
}

/// Trains the time-dependent reward with a BT loss on identically-noised
/// pairs: each pair draws one `t ~ U(0,1)` and one shared noise vector,
/// both sides are interpolated with the same `(t, eps)`, and tie-labeled
/// dimensions are dropped.
pub fn train_noisy_reward(dataset: &PrefDataset, cfg: &NoisyTrainConfig) -> Result<NoisyRewardNet> {
    let (train, val) = split_by_condition(dataset, &cfg.val_classes);
    if train.is_empty() || val.is_empty() {
        return Err(Error::Input(format!(
            "empty split: {} train / {} validation pairs",
            train.len(),
            val.len()
        )));
    }
    let sample_dim = dataset.header.toy.sample_dim();
    let n_classes = dataset.header.toy.n_classes;
    let mut model = NoisyRewardNet::init(sample_dim, n_classes, &cfg.hidden, cfg.seed)?;
    let mut adam = AdamState::new(model.net.param_count(), cfg.lr);
    let mut rng = rng_for(cfg.seed, "train-noisy-reward", 0);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let total_steps = cfg.epochs * train.len().div_ceil(cfg.batch_size);
    let mut step = 0usize;
    let mut grad = vec![0.0; model.net.param_count()];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            grad.fill(0.0);
            let inv_b = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let item: &PairItem = &train[i];
                let t: f64 = rng.gen();
                let eps: Vec<f64> = (0..sample_dim)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let mix = |x0: &[f64]| -> Vec<f64> {
                    x0.iter()
                        .zip(eps.iter())
                        .map(|(&a, &e)| (1.0 - t) * a + t * e)
                        .collect()
                };
                let xa = mix(&item.a);
                let xb = mix(&item.b);
                let cache_a = model.score_cached(&xa, t, item.cond)?;
                let cache_b = model.score_cached(&xb, t, item.cond)?;
                let mut up_a = [0.0; 3];
                let mut up_b = [0.0; 3];
                for dim in DIMS {
                    let d = dim.index();
                    if item.labels[d] == PrefLabel::Tie {
                        continue;
                    }
                    let (_, ga, gb) = bt_loss(
                        cache_a.output()[d],
                        cache_b.output()[d],
                        item.labels[d],
                    )?;
                    up_a[d] = ga * inv_b;
                    up_b[d] = gb * inv_b;
                }
                model.net.backward_into(&cache_a, &up_a, &mut grad)?;
                model.net.backward_into(&cache_b, &up_b, &mut grad)?;
            }
            // cosine decay from lr to lr * lr_floor
            let progress = step as f64 / total_steps as f64;
            adam.lr = cfg.lr
                * (cfg.lr_floor
                    + (1.0 - cfg.lr_floor)
                        * 0.5
                        * (1.0 + (std::f64::consts::PI * progress).cos()));
            adam.apply(model.net.params_mut(), &grad)?;
            step += 1;
        }
    }
    Ok(model)
}

/// Ties-excluded accuracy of the noisy reward on held-out pairs noised at a
/// fixed `t` (averaged over `reps` shared-noise draws). Returns per-dim
/// accuracies.
pub fn noisy_accuracy_at(
    model: &NoisyRewardNet,
    items: &[PairItem],
    t: f64,
    seed: u64,
    reps: usize,
) -> Result<[f64; 3]> {
    if items.is_empty() {
        return Err(Error::Input("no pairs to evaluate".into()));
    }
    let mut correct = [0.0; 3];
    let mut total = [0.0; 3];
    for rep in 0..reps {
        let mut rng = rng_for(seed, "noisy-eval", rep as u64);
        for item in items {
            let eps: Vec<f64> = (0..model.sample_dim)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let mix = |x0: &[f64]| -> Vec<f64> {
                x0.iter()
                    .zip(eps.iter())
                    .map(|(&a, &e)| (1.0 - t) * a + t * e)
                    .collect()
            };
            let sa = model.score(&mix(&item.a), t, item.cond)?;
            let sb = model.score(&mix(&item.b), t, item.cond)?;
            for dim in DIMS {
                let d = dim.index();
                let won = match item.labels[d] {
                    PrefLabel::Tie => continue,
                    PrefLabel::AWins => sa[d] > sb[d],
                    PrefLabel::BWins => sb[d] > sa[d],
                };
                total[d] += 1.0;
                if won {
                    correct[d] += 1.0;
                }
            }
        }
    }
    let mut out = [0.0; 3];
    for d in 0..3 {
        if total[d] == 0.0 {
            return Err(Error::Input(format!(
                "no non-tie labels in dimension {d}"
            )));
        }
        out[d] = correct[d] / total[d];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_at_t_one_give_zero_score_gap() {
        let model = NoisyRewardNet::init(6, 8, &[16], 0).unwrap();
        let a = [0.4, -0.2, 0.9, 0.0, 0.3, -0.6];
        let b = [1.4, 0.2, -0.9, 2.0, 0.1, 0.6];
        // at t = 1 both sides collapse onto the shared noise vector
        let eps = [0.5, 0.5, -0.5, 0.25, 0.0, 1.0];
        let mix = |x0: &[f64]| -> Vec<f64> {
            x0.iter()
                .zip(eps.iter())
                .map(|(&v, &e)| (1.0 - 1.0) * v + 1.0 * e)
                .collect()
        };
        let sa = model.score(&mix(&a), 1.0, 3).unwrap();
        let sb = model.score(&mix(&b), 1.0, 3).unwrap();
        for d in 0..3 {
            assert_eq!(sa[d].to_bits(), sb[d].to_bits());
        }
    }

    #[test]
    fn weighted_gradient_matches_finite_differences() {
        use crate::netcore::finite_diff_check;
        let model = NoisyRewardNet::init(5, 8, &[12], 2).unwrap();
        let x = [0.3, -0.8, 0.2, 0.6, -0.1];
        let w = RewardWeights::new(0.2, 0.3, 0.5).unwrap();
        let (_, grad) = model.weighted_reward_grad(&x, 0.4, 1, &w).unwrap();
        let err = finite_diff_check(
            |p| {
                let s = model.score(p, 0.4, 1).unwrap();
                0.2 * s[0] + 0.3 * s[1] + 0.5 * s[2]
            },
            &grad,
            &x,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "err = {err}");
    }
}
