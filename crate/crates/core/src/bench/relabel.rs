//! Dataset relabeling by the learned reward model.

use crate::align::{RelabeledPair, Side};
use crate::error::Result;
use crate::reward::{RewardWeights, TrainedReward};
use crate::toyworld::{PrefLabel, PreferenceRecord, DIMS};

/// Outcome of relabeling: the oriented pairs plus bookkeeping.
#[derive(Debug, Clone)]
pub struct RelabelOutcome {
    pub pairs: Vec<RelabeledPair>,
    /// Pairs dropped because both sides scored exactly equal.
    pub dropped_equal_scores: usize,
    /// Fraction of pairs (with a label-implied orientation) whose
    /// orientation the reward model reversed.
    pub flip_fraction: f64,
}

/// Orientation implied by the original annotations: the side winning the
/// majority of decisive dimensions, if any.
fn label_orientation(record: &PreferenceRecord) -> Option<Side> {
    let mut a = 0;
    let mut b = 0;
    for dim in DIMS {
        match record.labels[dim.name()] {
            PrefLabel::AWins => a += 1,
            PrefLabel::BWins => b += 1,
            PrefLabel::Tie => {}
        }
    }
    match a.cmp(&b) {
        std::cmp::Ordering::Greater => Some(Side::A),
        std::cmp::Ordering::Less => Some(Side::B),
        std::cmp::Ordering::Equal => None,
    }
}

/// Re-orients every pair by the scalarized reward-model score. Pairs with
/// exactly equal scores are dropped; original label orientation is kept as
/// provenance.
pub fn relabel_pairs(
    reward: &TrainedReward,
    records: &[PreferenceRecord],
    weights: &RewardWeights,
) -> Result<RelabelOutcome> {
    let mut pairs = Vec::with_capacity(records.len());
    let mut dropped = 0usize;
    let mut flips = 0usize;
    let mut oriented = 0usize;
    for record in records {
        let (_, score_a) = reward.score_normalized(&record.a_frames, record.cond, weights)?;
        let (_, score_b) = reward.score_normalized(&record.b_frames, record.cond, weights)?;
        if score_a == score_b {
            dropped += 1;
            continue;
        }
        let chosen_side = if score_a > score_b { Side::A } else { Side::B };
        let orientation = label_orientation(record);
        let flipped = match orientation {
            Some(side) => {
                oriented += 1;
                let f = side != chosen_side;
                flips += f as usize;
                f
            }
            None => false,
        };
        let (chosen, rejected, scores) = match chosen_side {
            Side::A => (
                record.a_frames.clone(),
                record.b_frames.clone(),
                (score_a, score_b),
            ),
            Side::B => (
                record.b_frames.clone(),
                record.a_frames.clone(),
                (score_b, score_a),
            ),
        };
        pairs.push(RelabeledPair {
            cond: record.cond,
            chosen,
            rejected,
            scores: Some(scores),
            chosen_side,
            label_orientation: orientation,
            flipped,
        });
    }
    let flip_fraction = if oriented > 0 {
        flips as f64 / oriented as f64
    } else {
        0.0
    };
    Ok(RelabelOutcome {
        pairs,
        dropped_equal_scores: dropped,
        flip_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::{RewardNet, ScoreStats};
    use std::collections::BTreeMap;

    fn record(cond: usize, a: Vec<f64>, b: Vec<f64>, labels: [PrefLabel; 3]) -> PreferenceRecord {
        let mut lm = BTreeMap::new();
        let mut km = BTreeMap::new();
        for dim in DIMS {
            lm.insert(dim.name().to_string(), labels[dim.index()]);
            km.insert(dim.name().to_string(), [3u8, 3u8]);
        }
        PreferenceRecord {
            cond,
            a_frames: a,
            b_frames: b,
            labels: lm,
            likert: km,
            gt: None,
        }
    }

    fn reward() -> TrainedReward {
        TrainedReward {
            net: RewardNet::init(4, 4, &[8], 5).unwrap(),
            stats: ScoreStats {
                mean: [0.0; 3],
                std: [1.0; 3],
            },
        }
    }

    #[test]
    fn identical_sides_are_dropped() {
        let frames = vec![0.1, 0.2, 0.3, 0.4];
        let records = vec![record(
            1,
            frames.clone(),
            frames,
            [PrefLabel::Tie; 3],
        )];
        let out = relabel_pairs(&reward(), &records, &RewardWeights::equal()).unwrap();
        assert_eq!(out.pairs.len(), 0);
        assert_eq!(out.dropped_equal_scores, 1);
    }

    #[test]
    fn orientation_and_provenance_are_recorded() {
        let records = vec![record(
            0,
            vec![0.5, -0.5, 0.25, 0.0],
            vec![-0.25, 0.75, -0.5, 0.5],
            [PrefLabel::AWins, PrefLabel::AWins, PrefLabel::BWins],
        )];
        let out = relabel_pairs(&reward(), &records, &RewardWeights::equal()).unwrap();
        assert_eq!(out.pairs.len(), 1);
        let p = &out.pairs[0];
        assert_eq!(p.label_orientation, Some(Side::A));
        assert_eq!(p.flipped, p.chosen_side != Side::A);
        let s = p.scores.unwrap();
        assert!(s.0 > s.1);
    }

    #[test]
    fn majority_of_decisive_dims_defines_label_orientation() {
        let r = record(
            0,
            vec![0.0; 4],
            vec![1.0; 4],
            [PrefLabel::BWins, PrefLabel::Tie, PrefLabel::Tie],
        );
        assert_eq!(label_orientation(&r), Some(Side::B));
        let r = record(
            0,
            vec![0.0; 4],
            vec![1.0; 4],
            [PrefLabel::AWins, PrefLabel::BWins, PrefLabel::Tie],
        );
        assert_eq!(label_orientation(&r), None);
    }
}
