//! Preference-accuracy metrics: ties-excluded accuracy and tie calibration.

use crate::error::{Error, Result};
use crate::toyworld::PrefLabel;

/// Accuracy variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccuracyMode {
    /// Three-class accuracy at the best tie threshold (tie calibration).
    WithTies,
    /// Binary sign accuracy on non-tie labels; a zero delta counts as
    /// incorrect for both outcomes.
    WithoutTies,
}

fn sign_correct(delta: f64, label: PrefLabel) -> bool {
    match label {
        PrefLabel::AWins => delta > 0.0,
        PrefLabel::BWins => delta < 0.0,
        PrefLabel::Tie => false,
    }
}

/// Sweeps tie thresholds and returns `(tau, acc3)`: the threshold that
/// maximizes three-class accuracy (predict Tie when `|delta| <= tau`, else
/// the sign decides) and that accuracy. Candidates are 0, the midpoints of
/// consecutive distinct `|delta|` values, and infinity; the smallest
/// maximizing threshold wins ties.
pub fn tie_calibration(deltas: &[f64], labels: &[PrefLabel]) -> Result<(f64, f64)> {
    if deltas.is_empty() {
        return Err(Error::Input("tie calibration needs at least one pair".into()));
    }
    if deltas.len() != labels.len() {
        return Err(Error::Shape {
            what: "tie calibration labels",
            expected: deltas.len(),
            got: labels.len(),
        });
    }
    let n = deltas.len();
    // correctness at tau = 0: zero deltas predict Tie, the rest by sign
    let mut correct: i64 = deltas
        .iter()
        .zip(labels.iter())
        .map(|(&d, &l)| {
            let ok = if d == 0.0 {
                l == PrefLabel::Tie
            } else {
                sign_correct(d, l)
            };
            ok as i64
        })
        .sum();

    let mut best_tau = 0.0;
    let mut best_correct = correct;

    // pairs with positive magnitude, ascending; flipping each to a Tie
    // prediction changes correctness by (label==Tie) - (sign was correct)
    let mut order: Vec<usize> = (0..n).filter(|&i| deltas[i] != 0.0).collect();
    order.sort_by(|&a, &b| {
        deltas[a]
            .abs()
            .partial_cmp(&deltas[b].abs())
            .expect("non-finite delta")
    });
    let mut i = 0;
    while i < order.len() {
        let mag = deltas[order[i]].abs();
        // flip the whole group of equal magnitudes
        while i < order.len() && deltas[order[i]].abs() == mag {
            let idx = order[i];
            correct += (labels[idx] == PrefLabel::Tie) as i64;
            correct -= sign_correct(deltas[idx], labels[idx]) as i64;
            i += 1;
        }
        let tau = if i < order.len() {
            (mag + deltas[order[i]].abs()) / 2.0
        } else {
            f64::INFINITY
        };
        if correct > best_correct {
            best_correct = correct;
            best_tau = tau;
        }
    }
    Ok((best_tau, best_correct as f64 / n as f64))
}

/// Pairwise accuracy of reward deltas against three-class labels.
pub fn pairwise_accuracy(
    deltas: &[f64],
    labels: &[PrefLabel],
    mode: AccuracyMode,
) -> Result<f64> {
    if deltas.is_empty() {
        return Err(Error::Input("accuracy needs at least one pair".into()));
    }
    if deltas.len() != labels.len() {
        return Err(Error::Shape {
            what: "accuracy labels",
            expected: deltas.len(),
            got: labels.len(),
        });
    }
    match mode {
        AccuracyMode::WithTies => Ok(tie_calibration(deltas, labels)?.1),
        AccuracyMode::WithoutTies => {
            let mut correct = 0usize;
            let mut total = 0usize;
            for (&d, &l) in deltas.iter().zip(labels.iter()) {
                if l == PrefLabel::Tie {
                    continue;
                }
                total += 1;
                if sign_correct(d, l) {
                    correct += 1;
                }
            }
            if total == 0 {
                return Err(Error::Input(
                    "ties-excluded accuracy needs at least one non-tie label".into(),
                ));
            }
            Ok(correct as f64 / total as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Exhaustive oracle: evaluates acc3 at every |delta|, every midpoint,
    /// zero, and infinity; independent of the sweep implementation.
    pub(crate) fn tie_calibration_brute(deltas: &[f64], labels: &[PrefLabel]) -> (f64, f64) {
        let mut candidates = vec![0.0, f64::INFINITY];
        let mut mags: Vec<f64> = deltas.iter().map(|d| d.abs()).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        mags.dedup();
        candidates.extend(mags.iter().copied());
        for w in mags.windows(2) {
            candidates.push((w[0] + w[1]) / 2.0);
        }
        candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut best = (0.0, -1.0f64);
        for &tau in &candidates {
            let correct = deltas
                .iter()
                .zip(labels.iter())
                .filter(|(&d, &l)| {
                    if d.abs() <= tau {
                        l == PrefLabel::Tie
                    } else {
                        sign_correct(d, l)
                    }
                })
                .count();
            let acc = correct as f64 / deltas.len() as f64;
            if acc > best.1 {
                best = (tau, acc);
            }
        }
        best
    }

    #[test]
    fn spec_example_reports_the_midpoint() {
        let deltas = [-3.0, -0.1, 0.1, 3.0];
        let labels = [
            PrefLabel::BWins,
            PrefLabel::Tie,
            PrefLabel::Tie,
            PrefLabel::AWins,
        ];
        let (tau, acc) = tie_calibration(&deltas, &labels).unwrap();
        assert_eq!(acc, 1.0);
        assert!((tau - 1.55).abs() < 1e-12, "tau = {tau}");
    }

    #[test]
    fn all_ties_calibrates_to_infinity() {
        let deltas = [1.0, 2.0, -0.5];
        let labels = [PrefLabel::Tie; 3];
        let (tau, acc) = tie_calibration(&deltas, &labels).unwrap();
        assert_eq!(acc, 1.0);
        assert!(tau.is_infinite());
    }

    #[test]
    fn sweep_equals_brute_force_on_random_instances() {
        let mut rng = crate::seeds::rng_for(0, "tie-cal-test", 0);
        for case in 0..100 {
            let n = rng.gen_range(1..=200);
            let deltas: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.1) {
                        0.0
                    } else {
                        rng.gen_range(-2.0..2.0)
                    }
                })
                .collect();
            let labels: Vec<PrefLabel> = (0..n)
                .map(|_| match rng.gen_range(0..3) {
                    0 => PrefLabel::AWins,
                    1 => PrefLabel::BWins,
                    _ => PrefLabel::Tie,
                })
                .collect();
            let (tau, acc) = tie_calibration(&deltas, &labels).unwrap();
            let (btau, bacc) = tie_calibration_brute(&deltas, &labels);
            assert_eq!(acc, bacc, "case {case}: acc {acc} vs brute {bacc}");
            // both must achieve the optimum; the sweep reports a canonical tau
            let check = |t: f64| {
                deltas
                    .iter()
                    .zip(labels.iter())
                    .filter(|(&d, &l)| {
                        if d.abs() <= t {
                            l == PrefLabel::Tie
                        } else {
                            sign_correct(d, l)
                        }
                    })
                    .count() as f64
                    / n as f64
            };
            assert_eq!(check(tau), acc, "case {case}");
            assert_eq!(check(btau), bacc, "case {case}");
        }
    }

    #[test]
    fn with_ties_accuracy_beats_floor_on_random_scores() {
        let mut rng = crate::seeds::rng_for(0, "tie-cal-test", 1);
        let n = 1000;
        let deltas: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let labels: Vec<PrefLabel> = (0..n)
            .map(|_| match rng.gen_range(0..3) {
                0 => PrefLabel::AWins,
                1 => PrefLabel::BWins,
                _ => PrefLabel::Tie,
            })
            .collect();
        let tie_frac =
            labels.iter().filter(|&&l| l == PrefLabel::Tie).count() as f64 / n as f64;
        let acc = pairwise_accuracy(&deltas, &labels, AccuracyMode::WithTies).unwrap();
        assert!(acc >= (1.0f64 / 3.0).max(tie_frac), "acc {acc}");
    }

    #[test]
    fn perfect_sign_agreement_scores_one() {
        let deltas = [0.5, -0.25, 2.0];
        let labels = [PrefLabel::AWins, PrefLabel::BWins, PrefLabel::AWins];
        assert_eq!(
            pairwise_accuracy(&deltas, &labels, AccuracyMode::WithoutTies).unwrap(),
            1.0
        );
    }

    #[test]
    fn zero_delta_counts_as_incorrect_without_ties() {
        let deltas = [0.0, 0.0];
        let labels = [PrefLabel::AWins, PrefLabel::BWins];
        assert_eq!(
            pairwise_accuracy(&deltas, &labels, AccuracyMode::WithoutTies).unwrap(),
            0.0
        );
    }

    #[test]
    fn without_ties_on_all_tie_labels_is_an_error() {
        let deltas = [0.4];
        let labels = [PrefLabel::Tie];
        assert!(pairwise_accuracy(&deltas, &labels, AccuracyMode::WithoutTies).is_err());
    }
}
