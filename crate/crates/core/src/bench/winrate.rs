//! Paired-seed win rates between two sample sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{euler_sample, FlowSchedule, VelocityNet};
use crate::reward::{normalize_scores, RewardWeights, TrainedReward};
use crate::seeds::seed_u64;
use crate::toyworld::DIMS;

/// Identity of one generated sample: the prompt (condition class) and the
/// RNG seed that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleKey {
    pub cond: usize,
    pub seed: u64,
}

/// Ordered collection of generated samples keyed by (condition, seed).
#[derive(Debug, Clone, Default)]
pub struct SampleSet {
    pub entries: Vec<(SampleKey, Vec<f64>)>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Deterministic prompt list: classes cycle over `classes`, seeds derive
/// from the global seed so reruns regenerate identical pairs.
pub fn paired_prompts(global_seed: u64, classes: &[usize], n: usize) -> Vec<SampleKey> {
    (0..n)
        .map(|i| SampleKey {
            cond: classes[i % classes.len()],
            seed: seed_u64(global_seed, "eval-sample", i as u64),
        })
        .collect()
}

/// Samples the model once per prompt.
pub fn generate_samples(
    net: &VelocityNet,
    prompts: &[SampleKey],
    schedule: &FlowSchedule,
    cfg_scale: f64,
) -> Result<SampleSet> {
    let mut entries = Vec::with_capacity(prompts.len());
    for key in prompts {
        let sample = euler_sample(net, key.cond, schedule, cfg_scale, key.seed)?;
        entries.push((*key, sample));
    }
    Ok(SampleSet { entries })
}

/// Win-rate outcome: per-dimension and scalarized-overall rates in [0, 1]
/// with 95% intervals (Wilson, treating the 0.5-credit mean as a
/// proportion).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinRateResult {
    pub per_dim: [f64; 3],
    pub per_dim_ci: [(f64, f64); 3],
    pub overall: f64,
    pub overall_ci: (f64, f64),
    pub n_prompts: usize,
}

fn wilson(p_hat: f64, n: f64) -> (f64, f64) {
    let z = 1.96;
    let denom = 1.0 + z * z / n;
    let center = (p_hat + z * z / (2.0 * n)) / denom;
    let half = z * ((p_hat * (1.0 - p_hat) / n + z * z / (4.0 * n * n)).sqrt()) / denom;
    (center - half, center + half)
}

fn credit(a: f64, b: f64) -> f64 {
    if a > b {
        1.0
    } else if a < b {
        0.0
    } else {
        0.5
    }
}

/// Win rate of sample set `a` over `b` under the reward model.
///
/// Enforces shared-seed discipline: the two sets must be keyed by exactly
/// the same (condition, seed) sequence, guaranteeing paired comparisons.
/// A pair where both sides score equal earns 0.5 credit, so a model
/// compared against itself lands at exactly 0.5.
pub fn win_rate(
    a: &SampleSet,
    b: &SampleSet,
    reward: &TrainedReward,
    weights: &RewardWeights,
) -> Result<WinRateResult> {
    if a.is_empty() {
        return Err(Error::Input("win rate needs at least one prompt".into()));
    }
    if a.len() != b.len() {
        return Err(Error::Input(format!(
            "sample sets differ in size: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    for ((ka, _), (kb, _)) in a.entries.iter().zip(b.entries.iter()) {
        if ka != kb {
            return Err(Error::Input(format!(
                "sample sets are not seed-paired: {ka:?} vs {kb:?}"
            )));
        }
    }
    let n = a.len() as f64;
    // credits are exact halves; sum first, divide once, so a self-comparison
    // lands at exactly 0.5
    let mut per_dim = [0.0; 3];
    let mut overall = 0.0;
    for ((key, sample_a), (_, sample_b)) in a.entries.iter().zip(b.entries.iter()) {
        let raw_a = reward.net.score(sample_a, key.cond)?;
        let raw_b = reward.net.score(sample_b, key.cond)?;
        let (z_a, s_a) = normalize_scores(&raw_a, &reward.stats, weights)?;
        let (z_b, s_b) = normalize_scores(&raw_b, &reward.stats, weights)?;
        for dim in DIMS {
            per_dim[dim.index()] += credit(z_a[dim.index()], z_b[dim.index()]);
        }
        overall += credit(s_a, s_b);
    }
    for p in per_dim.iter_mut() {
        *p /= n;
    }
    overall /= n;
    Ok(WinRateResult {
        per_dim,
        per_dim_ci: [
            wilson(per_dim[0], n),
            wilson(per_dim[1], n),
            wilson(per_dim[2], n),
        ],
        overall,
        overall_ci: wilson(overall, n),
        n_prompts: a.len(),
    })
}

/// Samples both models on the same prompts and compares them.
pub fn win_rate_models(
    model_a: &VelocityNet,
    model_b: &VelocityNet,
    reward: &TrainedReward,
    weights: &RewardWeights,
    prompts: &[SampleKey],
    schedule: &FlowSchedule,
    cfg_scale: f64,
) -> Result<WinRateResult> {
    let a = generate_samples(model_a, prompts, schedule, cfg_scale)?;
    let b = generate_samples(model_b, prompts, schedule, cfg_scale)?;
    win_rate(&a, &b, reward, weights)
}
