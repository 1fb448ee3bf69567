//! Reward-model training under regression / BT / BTT objectives.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::AdamState;
use crate::seeds::rng_for;
use crate::toyworld::{PrefDataset, PrefLabel, PreferenceRecord, DIMS};

use super::btt::{bt_loss, btt_loss, regression_loss};
use super::model::{RewardGrads, RewardNet};
use super::stats::ScoreStats;

/// Learning objective for the clean reward model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardMode {
    Regression,
    Bt,
    Btt,
}

impl RewardMode {
    pub fn name(self) -> &'static str {
        match self {
            RewardMode::Regression => "regression",
            RewardMode::Bt => "bt",
            RewardMode::Btt => "btt",
        }
    }
}

impl std::str::FromStr for RewardMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(RewardMode::Regression),
            "bt" => Ok(RewardMode::Bt),
            "btt" => Ok(RewardMode::Btt),
            other => Err(Error::Config(format!("unknown reward mode '{other}'"))),
        }
    }
}

/// Training view of one preference record.
#[derive(Debug, Clone)]
pub struct PairItem {
    pub cond: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub labels: [PrefLabel; 3],
    pub likert: [[u8; 2]; 3],
}

impl PairItem {
    pub fn from_record(record: &PreferenceRecord) -> Self {
        let mut labels = [PrefLabel::Tie; 3];
        let mut likert = [[0u8; 2]; 3];
        for dim in DIMS {
            labels[dim.index()] = record.labels[dim.name()];
            likert[dim.index()] = record.likert[dim.name()];
        }
        PairItem {
            cond: record.cond,
            a: record.a_frames.clone(),
            b: record.b_frames.clone(),
            labels,
            likert,
        }
    }
}

/// Splits records into (train, validation) by condition class; validation
/// conditions never appear in training.
pub fn split_by_condition(
    dataset: &PrefDataset,
    val_classes: &[usize],
) -> (Vec<PairItem>, Vec<PairItem>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for r in &dataset.records {
        let item = PairItem::from_record(r);
        if val_classes.contains(&r.cond) {
            val.push(item);
        } else {
            train.push(item);
        }
    }
    (train, val)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewardTrainConfig {
    pub mode: RewardMode,
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub theta: f64,
    pub val_classes: Vec<usize>,
    pub seed: u64,
}

impl Default for RewardTrainConfig {
    fn default() -> Self {
        RewardTrainConfig {
            mode: RewardMode::Btt,
            hidden: vec![128, 128],
            lr: 2e-3,
            batch_size: 16,
            epochs: 10,
            theta: 5.0,
            val_classes: vec![3, 11],
            seed: 0,
        }
    }
}

/// A trained reward model with its validation normalization stats.
#[derive(Debug, Clone)]
pub struct TrainedReward {
    pub net: RewardNet,
    pub stats: ScoreStats,
}

impl TrainedReward {
    pub fn score_normalized(
        &self,
        frames: &[f64],
        class: usize,
        weights: &super::stats::RewardWeights,
    ) -> Result<([f64; 3], f64)> {
        let raw = self.net.score(frames, class)?;
        super::stats::normalize_scores(&raw, &self.stats, weights)
    }
}

/// Per-pair loss terms for one mode.
///
/// When `drop_ties` is set (training-time BT), tie-labeled dimensions are
/// masked out instead of raising; the spec-level operation uses
/// `drop_ties = false` and treats a tie under BT as an input error.
fn pair_terms(
    mode: RewardMode,
    scores_a: &[f64; 3],
    scores_b: &[f64; 3],
    item: &PairItem,
    theta: f64,
    drop_ties: bool,
) -> Result<(f64, [f64; 3], [f64; 3], usize)> {
    let mut loss = 0.0;
    let mut d_a = [0.0; 3];
    let mut d_b = [0.0; 3];
    let mut active = 0;
    for dim in DIMS {
        let d = dim.index();
        let (l, ga, gb) = match mode {
            RewardMode::Regression => {
                let t_a = item.likert[d][0] as f64;
                let t_b = item.likert[d][1] as f64;
                regression_loss(scores_a[d], scores_b[d], t_a, t_b)
            }
            RewardMode::Btt => btt_loss(scores_a[d], scores_b[d], item.labels[d], theta)?,
            RewardMode::Bt => {
                if item.labels[d] == PrefLabel::Tie {
                    if drop_ties {
                        continue;
                    }
                    return Err(Error::Input(
                        "bt mode received a tie-labeled pair; drop ties upstream".into(),
                    ));
                }
                bt_loss(scores_a[d], scores_b[d], item.labels[d])?
            }
        };
        loss += l;
        d_a[d] = ga;
        d_b[d] = gb;
        active += 1;
    }
    Ok((loss, d_a, d_b, active))
}

fn batch_loss(
    net: &RewardNet,
    mode: RewardMode,
    batch: &[&PairItem],
    theta: f64,
    drop_ties: bool,
    grads: &mut RewardGrads,
) -> Result<(f64, usize)> {
    if batch.is_empty() {
        return Err(Error::Input("preference batch is empty".into()));
    }
    let inv_b = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut active_total = 0;
    for item in batch {
        let cache_a = net.score_cached(&item.a, item.cond)?;
        let cache_b = net.score_cached(&item.b, item.cond)?;
        let (l, d_a, d_b, active) = pair_terms(
            mode,
            &cache_a.scores,
            &cache_b.scores,
            item,
            theta,
            drop_ties,
        )?;
        loss += l * inv_b;
        active_total += active;
        if active == 0 {
            continue;
        }
        let up_a = [d_a[0] * inv_b, d_a[1] * inv_b, d_a[2] * inv_b];
        let up_b = [d_b[0] * inv_b, d_b[1] * inv_b, d_b[2] * inv_b];
        net.backward_into(&cache_a, &up_a, grads)?;
        net.backward_into(&cache_b, &up_b, grads)?;
    }
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("preference loss is {loss}")));
    }
    Ok((loss, active_total))
}

/// The spec-level preference loss: summed over dimensions, averaged over the
/// batch, with gradients for every reward-net parameter.
pub fn preference_loss(
    net: &RewardNet,
    mode: RewardMode,
    batch: &[PairItem],
    theta: f64,
) -> Result<(f64, RewardGrads)> {
    let mut grads = net.zero_grads();
    let refs: Vec<&PairItem> = batch.iter().collect();
    let (loss, _) = batch_loss(net, mode, &refs, theta, false, &mut grads)?;
    Ok((loss, grads))
}

/// Trains a reward model on the condition-disjoint training split and
/// measures `ScoreStats` on the validation split. Deterministic per seed.
pub fn train_reward(dataset: &PrefDataset, cfg: &RewardTrainConfig) -> Result<TrainedReward> {
    let (train, val) = split_by_condition(dataset, &cfg.val_classes);
    if train.is_empty() || val.is_empty() {
        return Err(Error::Input(format!(
            "empty split: {} train / {} validation pairs",
            train.len(),
            val.len()
        )));
    }
    if cfg.mode == RewardMode::Bt {
        let any_decisive = train
            .iter()
            .any(|p| p.labels.iter().any(|&l| l != PrefLabel::Tie));
        if !any_decisive {
            return Err(Error::Input(
                "bt training needs at least one non-tie label".into(),
            ));
        }
    }
    let sample_dim = dataset.header.toy.sample_dim();
    let n_classes = dataset.header.toy.n_classes;
    let mut net = RewardNet::init(sample_dim, n_classes, &cfg.hidden, cfg.seed)?;
    let mut adams: Vec<AdamState> = net
        .nets()
        .iter()
        .map(|(_, n)| AdamState::new(n.param_count(), cfg.lr))
        .collect();
    let mut rng = rng_for(cfg.seed, "train-reward", 0);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&PairItem> = chunk.iter().map(|&i| &train[i]).collect();
            let mut grads = net.zero_grads();
            batch_loss(&net, cfg.mode, &batch, cfg.theta, true, &mut grads)?;
            let slices = [
                grads.trunk_free.as_slice(),
                grads.trunk_aware.as_slice(),
                grads.head_vq.as_slice(),
                grads.head_mq.as_slice(),
                grads.head_ta.as_slice(),
            ];
            for ((n, adam), g) in net.nets_mut().into_iter().zip(adams.iter_mut()).zip(slices)
            {
                adam.apply(n.params_mut(), g)?;
            }
        }
    }
    let stats = validation_stats(&net, &val)?;
    Ok(TrainedReward { net, stats })
}

/// Per-dimension mean/std of raw scores over both sides of the given pairs.
pub fn validation_stats(net: &RewardNet, items: &[PairItem]) -> Result<ScoreStats> {
    let mut rows = Vec::with_capacity(items.len() * 2);
    for item in items {
        rows.push(net.score(&item.a, item.cond)?);
        rows.push(net.score(&item.b, item.cond)?);
    }
    ScoreStats::measure(&rows)
}
