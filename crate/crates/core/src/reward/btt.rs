//! Pairwise preference likelihoods: Bradley-Terry and the tie-aware
//! Rao-Kupper form, with gradients w.r.t. the two scores.
//!
//! The tripartite distribution is the normalized Rao-Kupper model
//!
//! ```text
//! pA   = e^rA / (e^rA + th e^rB)
//! pB   = e^rB / (th e^rA + e^rB)
//! pTie = (th^2 - 1) e^rA e^rB / ((e^rA + th e^rB)(th e^rA + e^rB))
//! ```
//!
//! which sums to one for every th > 1 (asserted in tests). Everything is
//! computed in log space with log-sum-exp stabilization.

use crate::error::{Error, Result};
use crate::toyworld::PrefLabel;

/// Tie-tendency configuration for the BTT likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BttConfig {
    pub theta: f64,
}

impl Default for BttConfig {
    fn default() -> Self {
        BttConfig { theta: 5.0 }
    }
}

impl BttConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 1.0) {
            return Err(Error::Config(format!(
                "btt theta must be > 1, got {}",
                self.theta
            )));
        }
        Ok(())
    }
}

/// The three outcome probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BttProb {
    pub p_a: f64,
    pub p_b: f64,
    pub p_tie: f64,
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Stable log-sigmoid: `ln(1 / (1 + e^-z))`.
fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Tripartite outcome probabilities for scores `(r_a, r_b)` at tie level
/// `theta`; the three components sum to one.
pub fn btt_prob(r_a: f64, r_b: f64, theta: f64) -> Result<BttProb> {
    BttConfig { theta }.validate()?;
    let lt = theta.ln();
    let l1 = log_add_exp(r_a, lt + r_b);
    let l2 = log_add_exp(lt + r_a, r_b);
    let log_pa = r_a - l1;
    let log_pb = r_b - l2;
    let log_pt = (theta * theta - 1.0).ln() + r_a + r_b - l1 - l2;
    Ok(BttProb {
        p_a: log_pa.exp(),
        p_b: log_pb.exp(),
        p_tie: log_pt.exp(),
    })
}

/// Negative log-likelihood of the observed BTT outcome, with gradients
/// w.r.t. `(r_a, r_b)`.
pub fn btt_loss(r_a: f64, r_b: f64, label: PrefLabel, theta: f64) -> Result<(f64, f64, f64)> {
    BttConfig { theta }.validate()?;
    let lt = theta.ln();
    let l1 = log_add_exp(r_a, lt + r_b);
    let l2 = log_add_exp(lt + r_a, r_b);
    // softmax components of each denominator
    let s1a = (r_a - l1).exp();
    let s1b = (lt + r_b - l1).exp();
    let s2a = (lt + r_a - l2).exp();
    let s2b = (r_b - l2).exp();
    let (loss, d_a, d_b) = match label {
        PrefLabel::AWins => (-(r_a - l1), -(1.0 - s1a), s1b),
        PrefLabel::BWins => (-(r_b - l2), s2a, -(1.0 - s2b)),
        PrefLabel::Tie => {
            let loss = -((theta * theta - 1.0).ln() + r_a + r_b - l1 - l2);
            (loss, -(1.0 - s1a - s2a), -(1.0 - s1b - s2b))
        }
    };
    Ok((loss, d_a, d_b))
}

/// Bradley-Terry negative log-likelihood `-ln sigma(r_w - r_l)` with
/// gradients w.r.t. `(r_a, r_b)`. Tie labels are a caller error.
pub fn bt_loss(r_a: f64, r_b: f64, label: PrefLabel) -> Result<(f64, f64, f64)> {
    let (r_w, r_l, a_won) = match label {
        PrefLabel::AWins => (r_a, r_b, true),
        PrefLabel::BWins => (r_b, r_a, false),
        PrefLabel::Tie => {
            return Err(Error::Input(
                "bt loss given a tie label; ties must be dropped upstream".into(),
            ))
        }
    };
    let z = r_w - r_l;
    let loss = -log_sigmoid(z);
    let d_w = sigmoid(z) - 1.0;
    let (d_a, d_b) = if a_won { (d_w, -d_w) } else { (-d_w, d_w) };
    Ok((loss, d_a, d_b))
}

/// Squared-error regression loss against Likert targets, averaged over the
/// two sides; gradients w.r.t. `(r_a, r_b)`.
pub fn regression_loss(r_a: f64, r_b: f64, target_a: f64, target_b: f64) -> (f64, f64, f64) {
    let ea = r_a - target_a;
    let eb = r_b - target_b;
    (0.5 * (ea * ea + eb * eb), ea, eb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_scores_at_theta_five_give_two_thirds_ties() {
        let p = btt_prob(0.7, 0.7, 5.0).unwrap();
        assert!((p.p_tie - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.p_a - 1.0 / 6.0).abs() < 1e-12);
        assert!((p.p_b - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn equal_scores_are_symmetric_for_any_theta() {
        for theta in [1.001, 2.0, 5.0, 50.0] {
            let p = btt_prob(-3.0, -3.0, theta).unwrap();
            assert!((p.p_a - p.p_b).abs() < 1e-15);
        }
    }

    #[test]
    fn large_gap_sends_pa_to_one() {
        let p = btt_prob(40.0, -40.0, 5.0).unwrap();
        assert!(p.p_a > 1.0 - 1e-9);
        assert!(p.p_b < 1e-9);
        assert!(p.p_tie < 1e-9);
    }

    #[test]
    fn probabilities_sum_to_one_over_a_wide_grid() {
        for theta in [1.001, 2.0, 5.0, 50.0] {
            for ra in [-50.0, -10.0, 0.0, 10.0, 50.0] {
                for rb in [-50.0, -1.0, 0.0, 25.0, 50.0] {
                    let p = btt_prob(ra, rb, theta).unwrap();
                    let sum = p.p_a + p.p_b + p.p_tie;
                    assert!(
                        (sum - 1.0).abs() < 1e-9,
                        "sum {sum} at ra={ra} rb={rb} theta={theta}"
                    );
                    assert!(p.p_a > 0.0 && p.p_b > 0.0 && p.p_tie > 0.0);
                }
            }
        }
    }

    #[test]
    fn theta_at_or_below_one_is_rejected() {
        assert!(btt_prob(0.0, 0.0, 1.0).is_err());
        assert!(btt_prob(0.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn bt_loss_at_equal_scores_is_ln_two() {
        let (loss, _, _) = bt_loss(0.3, 0.3, PrefLabel::AWins).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn bt_loss_rejects_ties() {
        assert!(bt_loss(0.0, 0.0, PrefLabel::Tie).is_err());
    }

    #[test]
    fn btt_tie_loss_at_theta_five_equals_minus_ln_two_thirds() {
        let (loss, da, db) = btt_loss(1.2, 1.2, PrefLabel::Tie, 5.0).unwrap();
        assert!((loss + (2.0f64 / 3.0).ln()).abs() < 1e-12);
        // gradient is zero by symmetry at equal scores
        assert!(da.abs() < 1e-12 && db.abs() < 1e-12);
    }

    #[test]
    fn btt_converges_to_bt_as_theta_goes_to_one() {
        let theta = 1.0 + 1e-6;
        for (ra, rb) in [(0.5, -0.5), (2.0, 1.0), (-3.0, -1.0)] {
            for label in [PrefLabel::AWins, PrefLabel::BWins] {
                let (lb, _, _) = bt_loss(ra, rb, label).unwrap();
                let (lt, _, _) = btt_loss(ra, rb, label, theta).unwrap();
                assert!((lb - lt).abs() < 1e-3, "bt {lb} vs btt {lt}");
            }
        }
    }

    #[test]
    fn loss_gradients_match_finite_differences() {
        let h = 1e-6;
        for (ra, rb) in [(0.4, -0.2), (-1.5, 2.0)] {
            for label in [PrefLabel::AWins, PrefLabel::BWins, PrefLabel::Tie] {
                let (_, da, db) = btt_loss(ra, rb, label, 5.0).unwrap();
                let num_a = (btt_loss(ra + h, rb, label, 5.0).unwrap().0
                    - btt_loss(ra - h, rb, label, 5.0).unwrap().0)
                    / (2.0 * h);
                let num_b = (btt_loss(ra, rb + h, label, 5.0).unwrap().0
                    - btt_loss(ra, rb - h, label, 5.0).unwrap().0)
                    / (2.0 * h);
                assert!((da - num_a).abs() < 1e-6, "label {label:?} dA {da} vs {num_a}");
                assert!((db - num_b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn regression_loss_is_zero_at_perfect_predictions() {
        let (loss, da, db) = regression_loss(3.0, 4.0, 3.0, 4.0);
        assert_eq!(loss, 0.0);
        assert_eq!(da, 0.0);
        assert_eq!(db, 0.0);
    }
}
