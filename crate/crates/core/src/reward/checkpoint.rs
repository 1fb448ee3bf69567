//! Reward checkpoints: the netcore container format with a role tag.

use std::path::Path;

use crate::error::{Error, Result};
use crate::netcore::{load_model, save_model, CheckpointMeta, ModelCheckpoint};

use super::model::RewardNet;
use super::noisy::NoisyRewardNet;
use super::stats::ScoreStats;
use super::train::TrainedReward;

fn meta_with(role: &str, n_classes: usize) -> CheckpointMeta {
    let mut meta = CheckpointMeta {
        role: Some(role.to_string()),
        ..Default::default()
    };
    meta.extra
        .insert("n_classes".into(), n_classes.to_string());
    meta
}

fn parse_n_classes(meta: &CheckpointMeta) -> Result<usize> {
    meta.extra
        .get("n_classes")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("checkpoint meta lacks n_classes".into()))
}

fn expect_role(meta: &CheckpointMeta, want: &str) -> Result<()> {
    match meta.role.as_deref() {
        Some(r) if r == want => Ok(()),
        other => Err(Error::Format(format!(
            "expected role '{want}', found {other:?}"
        ))),
    }
}

pub fn save_trained_reward(path: impl AsRef<Path>, trained: &TrainedReward) -> Result<()> {
    let mut meta = meta_with("clean", trained.net.n_classes());
    meta.extra
        .insert("stats".into(), serde_json::to_string(&trained.stats)?);
    let nets = trained
        .net
        .nets()
        .iter()
        .map(|(name, net)| (name.to_string(), (*net).clone()))
        .collect();
    save_model(path, &ModelCheckpoint { meta, nets })
}

pub fn load_trained_reward(path: impl AsRef<Path>) -> Result<TrainedReward> {
    let model = load_model(path)?;
    expect_role(&model.meta, "clean")?;
    let n_classes = parse_n_classes(&model.meta)?;
    let stats: ScoreStats = serde_json::from_str(
        model
            .meta
            .extra
            .get("stats")
            .ok_or_else(|| Error::Format("clean reward checkpoint lacks stats".into()))?,
    )?;
    let net = RewardNet::from_nets(
        model.net("trunk_free")?.clone(),
        model.net("trunk_aware")?.clone(),
        model.net("head_vq")?.clone(),
        model.net("head_mq")?.clone(),
        model.net("head_ta")?.clone(),
        n_classes,
    )?;
    Ok(TrainedReward { net, stats })
}

pub fn save_noisy_reward(path: impl AsRef<Path>, model: &NoisyRewardNet) -> Result<()> {
    let mut meta = meta_with("noisy", model.n_classes());
    meta.extra
        .insert("sample_dim".into(), model.sample_dim().to_string());
    save_model(
        path,
        &ModelCheckpoint {
            meta,
            nets: vec![("net".into(), model.net().clone())],
        },
    )
}

pub fn load_noisy_reward(path: impl AsRef<Path>) -> Result<NoisyRewardNet> {
    let ckpt = load_model(path)?;
    expect_role(&ckpt.meta, "noisy")?;
    let n_classes = parse_n_classes(&ckpt.meta)?;
    let sample_dim: usize = ckpt
        .meta
        .extra
        .get("sample_dim")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("noisy reward checkpoint lacks sample_dim".into()))?;
    NoisyRewardNet::from_net(ckpt.net("net")?.clone(), sample_dim, n_classes)
}
