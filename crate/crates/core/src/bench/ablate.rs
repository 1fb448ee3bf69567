//! Resumable ablation grids over alignment and reward-modeling knobs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::align::{align_train, AlignConfig, AlignMethod, BetaSchedule};
use crate::error::{Error, Result};
use crate::flow::{FlowSchedule, VelocityNet};
use crate::guide::{nrg_sample, GuidanceForm, GuidanceSpec};
use crate::reward::{
    pairwise_accuracy, split_by_condition, train_reward, AccuracyMode, NoisyRewardNet,
    PairItem, RewardMode, RewardTrainConfig, RewardWeights, TrainedReward,
};
use crate::seeds::rng_for;
use crate::toyworld::{PrefDataset, DIMS};

use super::relabel::relabel_pairs;
use super::report::{Report, ReportRow};
use super::winrate::{generate_samples, paired_prompts, win_rate, SampleSet, win_rate_models};

/// Sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationAxis {
    BetaSchedule,
    BetaValue,
    RmMode,
    DataFraction,
    GuidanceWeights,
    WScale,
}

impl AblationAxis {
    pub fn name(self) -> &'static str {
        match self {
            AblationAxis::BetaSchedule => "beta_schedule",
            AblationAxis::BetaValue => "beta_value",
            AblationAxis::RmMode => "rm_mode",
            AblationAxis::DataFraction => "data_fraction",
            AblationAxis::GuidanceWeights => "guidance_weights",
            AblationAxis::WScale => "w_scale",
        }
    }
}

impl std::str::FromStr for AblationAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta_schedule" => Ok(AblationAxis::BetaSchedule),
            "beta_value" => Ok(AblationAxis::BetaValue),
            "rm_mode" => Ok(AblationAxis::RmMode),
            "data_fraction" => Ok(AblationAxis::DataFraction),
            "guidance_weights" => Ok(AblationAxis::GuidanceWeights),
            "w_scale" => Ok(AblationAxis::WScale),
            other => Err(Error::Config(format!("unknown ablation axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationSpec {
    pub axis: AblationAxis,
    pub grid: Vec<String>,
    pub seeds: Vec<u64>,
}

impl AblationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config(
                "ablation needs a non-empty grid and seed list".into(),
            ));
        }
        Ok(())
    }
}

/// Fixed evaluation/training protocol shared by all cells.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationRunConfig {
    pub val_classes: Vec<usize>,
    pub n_prompts: usize,
    pub sample_steps: usize,
    pub cfg_scale: f64,
    /// DPO settings for the schedule/value axes: long enough training that
    /// the KL-schedule differences reach their equilibrium behavior.
    pub dpo_lr: f64,
    pub dpo_epochs: usize,
    pub dpo_batch: usize,
    pub default_beta: f64,
    /// Guidance strength used by the guidance_weights axis.
    pub w_scale: f64,
    pub factor_cap: f64,
    /// Seed stream for evaluation prompts (identical across methods).
    pub eval_seed: u64,
}

impl Default for AblationRunConfig {
    fn default() -> Self {
        AblationRunConfig {
            val_classes: vec![3, 11],
            n_prompts: 512,
            sample_steps: 50,
            cfg_scale: 1.5,
            dpo_lr: 3e-4,
            dpo_epochs: 12,
            dpo_batch: 32,
            default_beta: 500.0,
            w_scale: 1.0,
            factor_cap: 20.0,
            eval_seed: 9001,
        }
    }
}

/// Base artifacts every cell runs against.
pub struct AblationContext<'a> {
    pub dataset: &'a PrefDataset,
    pub pretrained: &'a VelocityNet,
    pub reward: &'a TrainedReward,
    pub noisy: Option<&'a NoisyRewardNet>,
    pub run: AblationRunConfig,
}

#[derive(Debug, Serialize, Deserialize)]
struct LedgerEntry {
    cell: String,
    rows: Vec<ReportRow>,
}

fn load_ledger(path: &Path) -> Result<BTreeMap<String, Vec<ReportRow>>> {
    let mut out = BTreeMap::new();
    if !path.exists() {
        return Ok(out);
    }
    let text =
        fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: LedgerEntry = serde_json::from_str(line)?;
        out.insert(entry.cell, entry.rows);
    }
    Ok(out)
}

fn store_ledger(path: &Path, entries: &BTreeMap<String, Vec<ReportRow>>) -> Result<()> {
    let mut text = String::new();
    for (cell, rows) in entries {
        text.push_str(&serde_json::to_string(&LedgerEntry {
            cell: cell.clone(),
            rows: rows.clone(),
        })?);
        text.push('\n');
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

fn row(
    axis: AblationAxis,
    setting: &str,
    metric: &str,
    dimension: &str,
    seed: u64,
    value: f64,
    ci: Option<(f64, f64)>,
) -> ReportRow {
    ReportRow {
        axis: axis.name().to_string(),
        setting: setting.to_string(),
        metric: metric.to_string(),
        dimension: dimension.to_string(),
        seed,
        value,
        ci_low: ci.map(|c| c.0),
        ci_high: ci.map(|c| c.1),
    }
}

fn win_rate_rows(
    axis: AblationAxis,
    setting: &str,
    metric: &str,
    seed: u64,
    result: &super::winrate::WinRateResult,
) -> Vec<ReportRow> {
    let mut rows = Vec::with_capacity(4);
    for dim in DIMS {
        rows.push(row(
            axis,
            setting,
            metric,
            dim.name(),
            seed,
            result.per_dim[dim.index()],
            Some(result.per_dim_ci[dim.index()]),
        ));
    }
    rows.push(row(
        axis,
        setting,
        metric,
        "overall",
        seed,
        result.overall,
        Some(result.overall_ci),
    ));
    rows
}

fn rm_accuracy_rows(
    axis: AblationAxis,
    setting: &str,
    seed: u64,
    trained: &TrainedReward,
    val: &[PairItem],
) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    let mut excl_sum = 0.0;
    let mut incl_sum = 0.0;
    for dim in DIMS {
        let d = dim.index();
        let mut deltas = Vec::with_capacity(val.len());
        let mut labels = Vec::with_capacity(val.len());
        for item in val {
            let sa = trained.net.score(&item.a, item.cond)?;
            let sb = trained.net.score(&item.b, item.cond)?;
            deltas.push(sa[d] - sb[d]);
            labels.push(item.labels[d]);
        }
        let excl = pairwise_accuracy(&deltas, &labels, AccuracyMode::WithoutTies)?;
        let incl = pairwise_accuracy(&deltas, &labels, AccuracyMode::WithTies)?;
        excl_sum += excl / 3.0;
        incl_sum += incl / 3.0;
        rows.push(row(
            axis,
            setting,
            "ties_excluded_accuracy",
            dim.name(),
            seed,
            excl,
            None,
        ));
        rows.push(row(
            axis,
            setting,
            "ties_included_accuracy",
            dim.name(),
            seed,
            incl,
            None,
        ));
    }
    rows.push(row(
        axis,
        setting,
        "ties_excluded_accuracy",
        "avg",
        seed,
        excl_sum,
        None,
    ));
    rows.push(row(
        axis,
        setting,
        "ties_included_accuracy",
        "avg",
        seed,
        incl_sum,
        None,
    ));
    Ok(rows)
}

/// TA-only relabel of the training-condition pairs, the dataset for the
/// KL-schedule axes (the single-dimensional alignment task).
fn ta_relabel(ctx: &AblationContext) -> Result<Vec<crate::align::RelabeledPair>> {
    let ta_weights = RewardWeights::new(0.0, 0.0, 1.0)?;
    let train_records: Vec<_> = ctx
        .dataset
        .records
        .iter()
        .filter(|r| !ctx.run.val_classes.contains(&r.cond))
        .cloned()
        .collect();
    Ok(relabel_pairs(ctx.reward, &train_records, &ta_weights)?.pairs)
}

fn dpo_variant(
    ctx: &AblationContext,
    pairs: &[crate::align::RelabeledPair],
    beta: f64,
    schedule: BetaSchedule,
    seed: u64,
) -> Result<VelocityNet> {
    let cfg = AlignConfig {
        method: AlignMethod::Dpo,
        beta,
        schedule,
        lr: ctx.run.dpo_lr,
        epochs: ctx.run.dpo_epochs,
        batch_size: ctx.run.dpo_batch,
        seed,
    };
    Ok(align_train(ctx.pretrained, pairs, &cfg)?.0)
}

fn cell_rows(
    spec: &AblationSpec,
    ctx: &AblationContext,
    ta_pairs: &Option<Vec<crate::align::RelabeledPair>>,
    setting: &str,
    seed: u64,
) -> Result<Vec<ReportRow>> {
    let schedule = FlowSchedule::uniform(ctx.run.sample_steps)?;
    let prompts = paired_prompts(ctx.run.eval_seed, &ctx.run.val_classes, ctx.run.n_prompts);
    let equal = RewardWeights::equal();
    match spec.axis {
        AblationAxis::BetaValue => {
            let beta: f64 = setting
                .parse()
                .map_err(|_| Error::Config(format!("bad beta value '{setting}'")))?;
            let pairs = ta_pairs.as_ref().expect("ta relabel prepared");
            let mut rows = Vec::new();
            for sched in [BetaSchedule::Constant, BetaSchedule::Quadratic] {
                let aligned = dpo_variant(ctx, pairs, beta, sched, seed)?;
                let result = win_rate_models(
                    &aligned,
                    ctx.pretrained,
                    ctx.reward,
                    &equal,
                    &prompts,
                    &schedule,
                    ctx.run.cfg_scale,
                )?;
                rows.extend(win_rate_rows(
                    spec.axis,
                    setting,
                    &format!("win_rate_{}", sched.name()),
                    seed,
                    &result,
                ));
            }
            Ok(rows)
        }
        AblationAxis::BetaSchedule => {
            let sched: BetaSchedule = setting.parse()?;
            let pairs = ta_pairs.as_ref().expect("ta relabel prepared");
            let aligned = dpo_variant(ctx, pairs, ctx.run.default_beta, sched, seed)?;
            let result = win_rate_models(
                &aligned,
                ctx.pretrained,
                ctx.reward,
                &equal,
                &prompts,
                &schedule,
                ctx.run.cfg_scale,
            )?;
            Ok(win_rate_rows(spec.axis, setting, "win_rate", seed, &result))
        }
        AblationAxis::RmMode => {
            let mode: RewardMode = setting.parse()?;
            let cfg = RewardTrainConfig {
                mode,
                val_classes: ctx.run.val_classes.clone(),
                seed,
                ..Default::default()
            };
            let trained = train_reward(ctx.dataset, &cfg)?;
            let (_, val) = split_by_condition(ctx.dataset, &ctx.run.val_classes);
            rm_accuracy_rows(spec.axis, setting, seed, &trained, &val)
        }
        AblationAxis::DataFraction => {
            // setting form: "mode:fraction", e.g. "bt:0.25"
            let (mode_str, frac_str) = setting.split_once(':').ok_or_else(|| {
                Error::Config(format!("data_fraction setting must be mode:fraction, got '{setting}'"))
            })?;
            let mode: RewardMode = mode_str.parse()?;
            let fraction: f64 = frac_str
                .parse()
                .map_err(|_| Error::Config(format!("bad fraction '{frac_str}'")))?;
            if !(0.0..=1.0).contains(&fraction) || fraction == 0.0 {
                return Err(Error::Config(format!("fraction must be in (0,1], got {fraction}")));
            }
            let mut subset = ctx.dataset.clone();
            let (train_idx, val_idx): (Vec<usize>, Vec<usize>) =
                (0..subset.records.len()).partition(|&i| {
                    !ctx.run.val_classes.contains(&subset.records[i].cond)
                });
            let mut order = train_idx.clone();
            order.shuffle(&mut rng_for(seed, "data-fraction", 0));
            let keep = ((order.len() as f64 * fraction).round() as usize).max(1);
            let mut chosen: Vec<usize> = order[..keep].to_vec();
            chosen.extend(val_idx);
            chosen.sort_unstable();
            subset.records = chosen
                .into_iter()
                .map(|i| subset.records[i].clone())
                .collect();
            let cfg = RewardTrainConfig {
                mode,
                val_classes: ctx.run.val_classes.clone(),
                seed,
                ..Default::default()
            };
            let trained = train_reward(&subset, &cfg)?;
            let (_, val) = split_by_condition(ctx.dataset, &ctx.run.val_classes);
            rm_accuracy_rows(spec.axis, setting, seed, &trained, &val)
        }
        AblationAxis::GuidanceWeights | AblationAxis::WScale => {
            let noisy = ctx.noisy.ok_or_else(|| {
                Error::Config("guidance axes need a noisy reward model".into())
            })?;
            let (weights, w_scale) = match spec.axis {
                AblationAxis::GuidanceWeights => {
                    (RewardWeights::parse(setting)?, ctx.run.w_scale)
                }
                _ => {
                    let w: f64 = setting.parse().map_err(|_| {
                        Error::Config(format!("bad w_scale '{setting}'"))
                    })?;
                    (RewardWeights::new(0.0, 0.0, 1.0)?, w)
                }
            };
            let guide_spec = GuidanceSpec {
                weights,
                w_scale,
                cfg_scale: ctx.run.cfg_scale,
                factor_cap: ctx.run.factor_cap,
                form: GuidanceForm::Shift,
            };
            let mut guided = SampleSet::default();
            for key in &prompts {
                let (sample, _) = nrg_sample(
                    ctx.pretrained,
                    noisy,
                    &guide_spec,
                    &schedule,
                    key.cond,
                    key.seed,
                )?;
                guided.entries.push((*key, sample));
            }
            let unguided =
                generate_samples(ctx.pretrained, &prompts, &schedule, ctx.run.cfg_scale)?;
            let result = win_rate(&guided, &unguided, ctx.reward, &equal)?;
            Ok(win_rate_rows(
                spec.axis,
                setting,
                "guided_win_rate",
                seed,
                &result,
            ))
        }
    }
}

/// Executes the grid x seeds, reusing completed cells from the on-disk
/// ledger; the final report is identical whether or not the run was
/// interrupted and resumed.
pub fn run_ablation(
    spec: &AblationSpec,
    ctx: &AblationContext,
    ledger_path: Option<&Path>,
) -> Result<Report> {
    spec.validate()?;
    let mut ledger = match ledger_path {
        Some(p) => load_ledger(p)?,
        None => BTreeMap::new(),
    };
    let ta_pairs = match spec.axis {
        AblationAxis::BetaValue | AblationAxis::BetaSchedule => Some(ta_relabel(ctx)?),
        _ => None,
    };
    let mut report = Report::default();
    for setting in &spec.grid {
        for &seed in &spec.seeds {
            let cell = format!("{}|{}|{}", spec.axis.name(), setting, seed);
            let rows = if let Some(rows) = ledger.get(&cell) {
                rows.clone()
            } else {
                let rows = cell_rows(spec, ctx, &ta_pairs, setting, seed)?;
                ledger.insert(cell.clone(), rows.clone());
                if let Some(p) = ledger_path {
                    store_ledger(p, &ledger)?;
                }
                rows
            };
            report.rows.extend(rows);
        }
    }
    Ok(report)
}
