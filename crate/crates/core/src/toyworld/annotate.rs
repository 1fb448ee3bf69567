//! Synthetic annotator: pairwise preferences with ties, pointwise Likert.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::traj::{Dim, GtReward, DIMS};

/// Pairwise preference outcome for one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefLabel {
    AWins,
    BWins,
    Tie,
}

/// The synthetic stand-in for a human annotator.
///
/// Pairwise channel: per dimension, the score gap decides — ties inside the
/// `tie_band`, otherwise a logistic flip at `flip_temperature`. Pointwise
/// channel: each side's score is read with a per-reading calibration offset
/// (`likert_offset_std`), then bucketed into 1..5 by the frozen breakpoints.
/// The offset models inter-annotator miscalibration: it never enters the
/// pairwise labels, which compare two sides seen by the same annotator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorModel {
    pub tie_band: f64,
    pub flip_temperature: f64,
    pub likert_offset_std: f64,
    /// Per-dimension quintile breakpoints of the pretraining-corpus score
    /// distribution, ascending.
    pub breakpoints: [[f64; 4]; 3],
}

impl AnnotatorModel {
    pub fn validate(&self) -> Result<()> {
        if self.tie_band < 0.0 {
            return Err(Error::Config("tie band must be >= 0".into()));
        }
        if self.flip_temperature <= 0.0 {
            return Err(Error::Config("flip temperature must be > 0".into()));
        }
        Ok(())
    }
}

/// Labels plus per-side Likert scores for one annotated pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairAnnotation {
    /// Indexed by `Dim::index()`.
    pub labels: [PrefLabel; 3],
    /// `likert[dim][side]` with side 0 = A, 1 = B; values in 1..=5.
    pub likert: [[u8; 2]; 3],
}

impl PairAnnotation {
    pub fn label(&self, dim: Dim) -> PrefLabel {
        self.labels[dim.index()]
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Monotone bucketing of a score into 1..=5 by ascending breakpoints.
pub fn likert_of(score: f64, breakpoints: &[f64; 4]) -> u8 {
    1 + breakpoints.iter().filter(|&&b| score > b).count() as u8
}

/// Annotates one pair of ground-truth reward vectors.
pub fn annotate_pair(
    gt_a: &GtReward,
    gt_b: &GtReward,
    annotator: &AnnotatorModel,
    rng: &mut impl Rng,
) -> Result<PairAnnotation> {
    annotator.validate()?;
    let mut labels = [PrefLabel::Tie; 3];
    for dim in DIMS {
        let delta = gt_a.get(dim) - gt_b.get(dim);
        labels[dim.index()] = if delta.abs() <= annotator.tie_band {
            PrefLabel::Tie
        } else {
            let p_a = logistic(delta / annotator.flip_temperature);
            if rng.gen::<f64>() < p_a {
                PrefLabel::AWins
            } else {
                PrefLabel::BWins
            }
        };
    }
    let mut likert = [[0u8; 2]; 3];
    for dim in DIMS {
        for (side, gt) in [gt_a, gt_b].into_iter().enumerate() {
            let offset: f64 = rng.sample::<f64, _>(StandardNormal) * annotator.likert_offset_std;
            likert[dim.index()][side] =
                likert_of(gt.get(dim) + offset, &annotator.breakpoints[dim.index()]);
        }
    }
    Ok(PairAnnotation { labels, likert })
}

/// Per-dimension quintile breakpoints (linear-interpolation quantiles at
/// 20/40/60/80%) over a corpus of reward vectors.
pub fn quintile_breakpoints(rewards: &[GtReward]) -> Result<[[f64; 4]; 3]> {
    if rewards.is_empty() {
        return Err(Error::Input("cannot take quantiles of an empty corpus".into()));
    }
    let mut out = [[0.0; 4]; 3];
    for dim in DIMS {
        let mut values: Vec<f64> = rewards.iter().map(|r| r.get(dim)).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (slot, q) in [0.2, 0.4, 0.6, 0.8].iter().enumerate() {
            out[dim.index()][slot] = quantile_sorted(&values, *q);
        }
    }
    Ok(out)
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::rng_for;

    fn annotator() -> AnnotatorModel {
        AnnotatorModel {
            tie_band: 0.05,
            flip_temperature: 0.04,
            likert_offset_std: 0.0,
            breakpoints: [[-0.8, -0.6, -0.4, -0.2]; 3],
        }
    }

    fn gt(vq: f64, mq: f64, ta: f64) -> GtReward {
        GtReward { vq, mq, ta }
    }

    #[test]
    fn equal_rewards_tie_in_every_dimension() {
        let mut rng = rng_for(0, "annot-test", 0);
        let g = gt(-0.4, -0.2, -0.9);
        let a = annotate_pair(&g, &g, &annotator(), &mut rng).unwrap();
        assert_eq!(a.labels, [PrefLabel::Tie; 3]);
    }

    #[test]
    fn large_gap_with_cold_annotator_always_picks_the_winner() {
        let mut ann = annotator();
        ann.flip_temperature = 1e-9;
        let mut rng = rng_for(0, "annot-test", 1);
        for _ in 0..100 {
            let a = annotate_pair(&gt(0.0, -1.0, 0.0), &gt(-10.0, -1.0, -10.0), &ann, &mut rng)
                .unwrap();
            assert_eq!(a.labels[0], PrefLabel::AWins);
            assert_eq!(a.labels[1], PrefLabel::Tie);
            assert_eq!(a.labels[2], PrefLabel::AWins);
        }
    }

    #[test]
    fn labels_mirror_when_sides_swap_at_zero_temperature() {
        let mut ann = annotator();
        ann.flip_temperature = 1e-12;
        let ga = gt(-0.1, -0.9, -0.3);
        let gb = gt(-0.7, -0.2, -0.3);
        let mut r1 = rng_for(0, "annot-test", 2);
        let mut r2 = rng_for(0, "annot-test", 2);
        let ab = annotate_pair(&ga, &gb, &ann, &mut r1).unwrap();
        let ba = annotate_pair(&gb, &ga, &ann, &mut r2).unwrap();
        for d in 0..3 {
            let mirrored = match ab.labels[d] {
                PrefLabel::AWins => PrefLabel::BWins,
                PrefLabel::BWins => PrefLabel::AWins,
                PrefLabel::Tie => PrefLabel::Tie,
            };
            assert_eq!(ba.labels[d], mirrored);
        }
    }

    #[test]
    fn flip_rate_at_delta_equal_temperature_matches_logistic_one() {
        // P(A wins) at delta = temperature is logistic(1) ~ 0.731; the tie
        // band is zeroed so the delta is not swallowed as a tie.
        let mut ann = annotator();
        ann.tie_band = 0.0;
        let ga = gt(-0.1, -0.5, -0.5);
        let gb = gt(-0.1 - ann.flip_temperature, -0.5, -0.5);
        let mut rng = rng_for(0, "annot-test", 3);
        let n = 10_000;
        let mut wins = 0;
        for _ in 0..n {
            if annotate_pair(&ga, &gb, &ann, &mut rng).unwrap().labels[0] == PrefLabel::AWins {
                wins += 1;
            }
        }
        let rate = wins as f64 / n as f64;
        let expect = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((rate - expect).abs() < 0.02, "rate = {rate}");
    }

    #[test]
    fn likert_bucketing_is_monotone() {
        let bp = [-0.8, -0.6, -0.4, -0.2];
        let mut last = 0;
        for i in 0..100 {
            let score = -1.0 + i as f64 * 0.012;
            let level = likert_of(score, &bp);
            assert!(level >= last);
            last = level;
        }
        assert_eq!(likert_of(-2.0, &bp), 1);
        assert_eq!(likert_of(0.0, &bp), 5);
    }

    #[test]
    fn quintiles_split_a_uniform_grid_evenly() {
        let rewards: Vec<GtReward> = (0..1001)
            .map(|i| {
                let v = -(i as f64) / 1000.0;
                gt(v, v, v)
            })
            .collect();
        let bps = quintile_breakpoints(&rewards).unwrap();
        for d in 0..3 {
            for (slot, expect) in [-0.8, -0.6, -0.4, -0.2].iter().enumerate() {
                assert!((bps[d][slot] - expect).abs() < 1e-9);
            }
        }
    }
}
